"""Tests for the radial mesh, differentiation and shell quadrature."""

import math

import numpy as np
import pytest
from scipy.special import erf

from errors import NumericalFault, ParameterError
from grid import (
    RadialField,
    differentiate,
    make_grid,
    shell_integral,
    sphere_area,
    tail_admissible,
    tail_integral,
)


class TestMakeGrid:
    def test_uniform_mesh_arithmetic(self):
        grid = make_grid(3, 20.0, 2001)
        assert grid.h == pytest.approx(0.01)
        assert grid.nodes[1000] == pytest.approx(10.0)

    def test_one_dimensional_interior_weights(self):
        grid = make_grid(1, 10.0, 101)
        assert np.allclose(grid.shell_weights[1:-1], 2.0 * grid.h)
        assert grid.shell_weights[0] == pytest.approx(grid.h)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_invariants(self, d):
        grid = make_grid(d, 15.0, 300)
        assert grid.nodes[0] == 0.0
        assert grid.nodes[-1] == 15.0
        assert np.all(np.diff(grid.nodes) > 0)
        assert np.all(grid.shell_weights >= 0)
        if d >= 2:
            assert grid.shell_weights[0] == 0.0

    @pytest.mark.parametrize(
        "d, r_max, n",
        [(0, 10.0, 100), (3, 10.0, 15), (3, 0.0, 100), (3, -1.0, 100), (2.5, 10.0, 100)],
    )
    def test_rejects_invalid_parameters(self, d, r_max, n):
        with pytest.raises(ParameterError):
            make_grid(d, r_max, n)

    def test_grid_arrays_are_read_only(self):
        grid = make_grid(3, 10.0, 64)
        with pytest.raises(ValueError):
            grid.nodes[3] = 1.0

    def test_sphere_area(self):
        assert sphere_area(1) == pytest.approx(2.0)
        assert sphere_area(2) == pytest.approx(2.0 * math.pi)
        assert sphere_area(3) == pytest.approx(4.0 * math.pi)


class TestRadialField:
    def test_length_must_match_grid(self):
        grid = make_grid(3, 10.0, 64)
        with pytest.raises(ParameterError):
            RadialField(grid, np.zeros(63))

    def test_non_finite_values_are_a_fault(self):
        grid = make_grid(3, 10.0, 64)
        values = np.zeros(64)
        values[10] = np.nan
        with pytest.raises(NumericalFault):
            RadialField(grid, values)

    def test_values_are_immutable(self):
        grid = make_grid(3, 10.0, 64)
        field = grid.evaluate(lambda r: np.exp(-(r**2)))
        with pytest.raises(ValueError):
            field.values[0] = 2.0


class TestShellIntegral:
    def test_gaussian_three_dimensions(self):
        grid = make_grid(3, 30.0, 4096)
        f = grid.evaluate(lambda r: np.exp(-(r**2)))
        assert shell_integral(f) == pytest.approx(math.pi**1.5, abs=1e-6)

    def test_gaussian_two_dimensions(self):
        grid = make_grid(2, 20.0, 4096)
        f = grid.evaluate(lambda r: np.exp(-(r**2)))
        assert shell_integral(f) == pytest.approx(math.pi, abs=1e-6)

    def test_gaussian_one_dimension(self):
        grid = make_grid(1, 20.0, 4096)
        f = grid.evaluate(lambda r: np.exp(-(r**2)))
        assert shell_integral(f) == pytest.approx(math.sqrt(math.pi), abs=1e-6)

    def test_zero_field(self):
        assert shell_integral(make_grid(3, 10.0, 64).zeros()) == 0.0

    def test_second_order_convergence(self):
        exact = math.sqrt(math.pi) * (1.0 + erf(1.0))
        nodes = [512, 1024, 2048, 4096]
        errors = []
        for n in nodes:
            grid = make_grid(1, 20.0, n)
            errors.append(abs(shell_integral(grid.evaluate(lambda r: np.exp(-((r - 1.0) ** 2)))) - exact))
        hs = [20.0 / (n - 1) for n in nodes]
        slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)


class TestDifferentiate:
    def test_constant_maps_to_exact_zero(self):
        grid = make_grid(3, 10.0, 128)
        assert np.all(differentiate(grid.as_field(3.7)).values == 0.0)

    def test_quadratic_is_exact(self):
        grid = make_grid(3, 20.0, 2001)
        slope = differentiate(grid.evaluate(lambda r: r**2)).values
        assert slope[100] == pytest.approx(2.0, abs=1e-10)
        assert slope[0] == pytest.approx(0.0, abs=1e-10)
        assert slope[-1] == pytest.approx(40.0, abs=1e-8)

    def test_gaussian_error_is_second_order(self):
        errors = []
        for n in (401, 801):
            grid = make_grid(3, 10.0, n)
            r = grid.nodes
            numeric = differentiate(grid.evaluate(lambda s: np.exp(-(s**2)))).values
            errors.append(np.max(np.abs(numeric + 2.0 * r * np.exp(-(r**2)))))
        assert 3.0 < errors[0] / errors[1] < 5.0

    def test_even_data_has_small_origin_slope(self):
        grid = make_grid(3, 10.0, 1001)
        assert abs(differentiate(grid.evaluate(lambda r: np.exp(-(r**2)))).values[0]) < 1e-3


class TestTailIntegral:
    def test_zero_derivative(self):
        grid = make_grid(3, 10.0, 128)
        result = tail_integral(grid.zeros(), grid.as_field(1.0))
        assert np.all(result.values == 0.0)

    def test_exact_antiderivative(self):
        grid = make_grid(3, 10.0, 2001)
        r = grid.nodes
        fprime = grid.evaluate(lambda s: -2.0 * s * np.exp(-(s**2)))
        result = tail_integral(fprime, grid.as_field(1.0)).values
        assert result[-1] == 0.0
        assert np.max(np.abs(result - (math.exp(-100.0) - np.exp(-(r**2))))) < 1e-5

    def test_product_with_gaussian(self):
        grid = make_grid(3, 10.0, 2001)
        fprime = grid.evaluate(lambda s: -2.0 * s * np.exp(-(s**2)))
        g = grid.evaluate(lambda s: np.exp(-(s**2)))
        assert tail_integral(fprime, g).origin == pytest.approx(-0.5 * (1.0 - math.exp(-200.0)), abs=1e-5)

    def test_telescopes_with_differentiate(self):
        grid = make_grid(3, 10.0, 2001)
        f = grid.evaluate(lambda s: np.exp(-((s - 1.0) ** 2)))
        result = tail_integral(differentiate(f), grid.as_field(1.0)).values
        assert np.max(np.abs(result - (f.values[-1] - f.values))) < 1e-4

    def test_fields_must_share_a_grid(self):
        a, b = make_grid(3, 10.0, 64), make_grid(3, 10.0, 64)
        with pytest.raises(ParameterError):
            tail_integral(a.zeros(), b.zeros())

    def test_tail_admissibility(self):
        grid = make_grid(3, 5.0, 64)
        assert tail_admissible(grid.zeros(), grid.as_field(1.0))
        assert not tail_admissible(grid.as_field(1.0), grid.as_field(1.0))

    def test_deterministic(self):
        grid = make_grid(2, 10.0, 512)
        fprime = differentiate(grid.evaluate(lambda s: np.exp(-(s**2))))
        g = grid.evaluate(lambda s: np.cos(s) * np.exp(-s))
        assert np.array_equal(tail_integral(fprime, g).values, tail_integral(fprime, g).values)
