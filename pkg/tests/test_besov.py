"""Tests for the dyadic Littlewood-Paley machinery in two dimensions."""

import numpy as np
import pytest

from besov import besov_b01inf, cutoff, dyadic_multiplier, interpolation_ratio
from errors import UnsupportedDimension
from grid import make_grid


@pytest.fixture(scope="module")
def grid2():
    return make_grid(2, 40.0, 1024)


def test_cutoff_plateaus():
    assert np.all(cutoff(np.array([0.0, 0.5, 1.0])) == 1.0)
    assert np.all(cutoff(np.array([2.0, 3.0, 50.0])) == 0.0)
    middle = cutoff(np.linspace(1.0, 2.0, 51))
    assert np.all(np.diff(middle) <= 0.0)


def test_dyadic_multiplier_support():
    assert np.all(dyadic_multiplier(np.array([0.1, 0.25, 0.5, 2.0, 3.0])) == 0.0)
    assert dyadic_multiplier(np.array([1.0]))[0] > 0.0


def test_dyadic_partition_of_unity():
    s = np.linspace(0.1, 10.0, 97)
    total = sum(dyadic_multiplier(s / 2.0**j) for j in range(-20, 21))
    assert np.allclose(total, 1.0, atol=1e-12)


def test_zero_field(grid2):
    assert besov_b01inf(grid2.zeros()) == 0.0


def test_homogeneous_of_degree_one(grid2):
    f = grid2.evaluate(lambda r: np.exp(-(r**2)))
    assert besov_b01inf(f.scaled(3.0)) == pytest.approx(3.0 * besov_b01inf(f), rel=1e-9)


def test_interpolation_constant_is_scale_free(grid2):
    ratios = [
        interpolation_ratio(grid2.evaluate(lambda r, s=width: np.exp(-((r / s) ** 2))))
        for width in (0.5, 1.0, 2.0, 4.0)
    ]
    assert all(np.isfinite(ratios))
    assert max(ratios) / min(ratios) <= 2.0


def test_requires_two_dimensions():
    grid = make_grid(3, 10.0, 256)
    with pytest.raises(UnsupportedDimension):
        besov_b01inf(grid.evaluate(lambda r: np.exp(-(r**2))))
