"""Tests for the radial Helmholtz solve, kernel oracle and derived quantities."""

import math

import numpy as np
import pytest

from errors import ParameterError, UnsupportedDimension
from grid import differentiate, make_grid, shell_integral
from helmholtz import (
    apply_operator,
    bessel_kernel,
    dispersion_gap,
    energy,
    h_half_norm,
    helmholtz_oracle,
    robin_coefficient,
    solve_helmholtz,
)
from verify_suites import oracle_results


def manufactured_phi(grid):
    """(1 - Delta) exp(-r^2) in d = 3."""
    return grid.evaluate(lambda r: (7.0 - 4.0 * r**2) * np.exp(-(r**2)))


class TestSolveHelmholtz:
    def test_manufactured_solution(self):
        grid = make_grid(3, 10.0, 4096)
        solve = solve_helmholtz(manufactured_phi(grid))
        assert np.max(np.abs(solve.g.values - np.exp(-grid.nodes**2))) < 1e-5

    def test_second_order_convergence(self):
        nodes = [512, 1024, 2048, 4096]
        errors = []
        for n in nodes:
            grid = make_grid(3, 20.0, n)
            g = solve_helmholtz(manufactured_phi(grid)).g.values
            errors.append(np.max(np.abs(g - np.exp(-grid.nodes**2))))
        slope = np.polyfit(np.log([20.0 / (n - 1) for n in nodes]), np.log(errors), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)

    def test_zero_field(self):
        solve = solve_helmholtz(make_grid(2, 10.0, 256).zeros())
        assert np.all(solve.g.values == 0.0)
        assert np.all(solve.gprime.values == 0.0)

    def test_residual_of_banded_system(self, grid3):
        phi = grid3.evaluate(lambda r: np.cos(r) * np.exp(-(r**2) / 4.0))
        g = solve_helmholtz(phi).g
        residual = apply_operator(g).values - phi.values
        assert np.max(np.abs(residual)) <= 1e-10 * phi.sup_norm()

    def test_boundary_values_of_derivative(self, grid3):
        phi = grid3.evaluate(lambda r: np.exp(-(r**2)))
        solve = solve_helmholtz(phi)
        assert solve.gprime.values[0] == 0.0
        assert solve.gprime.values[-1] == pytest.approx(-robin_coefficient(grid3) * solve.g.values[-1])

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_nonnegative_data_gives_nonnegative_solution(self, d):
        grid = make_grid(d, 20.0, 1024)
        phi = grid.evaluate(lambda r: np.exp(-((r - 3.0) ** 2)))
        g = solve_helmholtz(phi).g
        assert g.values.min() >= -1e-12 * phi.sup_norm()

    def test_robin_coefficient(self):
        assert robin_coefficient(make_grid(1, 10.0, 64)) == 1.0
        assert robin_coefficient(make_grid(3, 10.0, 64)) == pytest.approx(1.1)


class TestBesselKernel:
    def test_three_dimensional_value(self):
        assert bessel_kernel(3, 1.0) == pytest.approx(math.exp(-1.0) / (4.0 * math.pi), rel=1e-12)

    def test_one_dimensional_origin(self):
        assert bessel_kernel(1, 0.0) == 0.5

    def test_three_dimensional_ratio(self):
        assert bessel_kernel(3, 2.0) / bessel_kernel(3, 1.0) == pytest.approx(math.exp(-1.0) / 2.0, rel=1e-14)

    def test_two_dimensional_value(self):
        assert bessel_kernel(2, 1.0) == pytest.approx(0.42102443824070834 / (2.0 * math.pi), rel=1e-12)

    def test_singular_origin(self):
        with pytest.raises(ParameterError):
            bessel_kernel(3, 0.0)

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimension):
            bessel_kernel(4, 1.0)


class TestHelmholtzOracle:
    def test_zero_field(self):
        assert helmholtz_oracle(make_grid(3, 10.0, 256).zeros()) == 0.0

    def test_manufactured_origin_value(self):
        grid = make_grid(3, 10.0, 4096)
        assert helmholtz_oracle(manufactured_phi(grid)) == pytest.approx(1.0, abs=1e-3)

    def test_one_dimensional_exponential(self):
        grid = make_grid(1, 20.0, 2048)
        assert helmholtz_oracle(grid.evaluate(lambda r: np.exp(-r))) == pytest.approx(0.5, abs=1e-6)

    def test_agrees_with_solver(self):
        results = oracle_results(dimensions=(1, 2, 3), r_max=20.0, n=2048)
        assert results
        failed = [result for result in results if not result.passed]
        assert not failed, failed

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimension):
            helmholtz_oracle(make_grid(4, 10.0, 64).zeros())


class TestDerivedQuantities:
    def test_gap_of_manufactured_data(self):
        grid = make_grid(3, 10.0, 4096)
        assert dispersion_gap(manufactured_phi(grid)) == pytest.approx(-6.0, abs=1e-4)

    def test_gap_is_g_minus_phi_at_origin(self, grid3):
        phi = grid3.evaluate(lambda r: np.exp(-(r**2)))
        solve = solve_helmholtz(phi)
        assert dispersion_gap(phi, solve) == solve.g.origin - phi.origin

    def test_concentrated_positive_data_has_negative_gap(self, grid3):
        phi = grid3.evaluate(lambda r: np.exp(-(r**2) / 0.05))
        assert dispersion_gap(phi) < 0

    def test_energy_of_zero(self, grid3):
        assert energy(grid3.zeros()) == 0.0
        assert h_half_norm(grid3.zeros()) == 0.0

    def test_energy_is_quadratic(self, grid3):
        phi = grid3.evaluate(lambda r: np.exp(-(r**2)))
        assert energy(phi.scaled(3.0)) == pytest.approx(9.0 * energy(phi), rel=1e-12)
        assert h_half_norm(phi.scaled(2.0)) == pytest.approx(2.0 * h_half_norm(phi), rel=1e-12)

    def test_energy_matches_exact_solution(self):
        grid = make_grid(3, 10.0, 4096)
        phi = manufactured_phi(grid)
        gprime_exact = -2.0 * grid.nodes * np.exp(-grid.nodes**2)
        exact = shell_integral(grid.as_field(gprime_exact * differentiate(phi).values))
        assert energy(phi) == pytest.approx(exact, rel=1e-4)

    def test_energy_is_nonnegative(self, grid3):
        phi = grid3.evaluate(lambda r: np.sin(3.0 * r) * np.exp(-(r**2)))
        assert energy(phi) >= 0.0
