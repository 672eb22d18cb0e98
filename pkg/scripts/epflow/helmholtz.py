"""
Radial Helmholtz Inversion

Solves (1 - Delta) g = phi for radial phi as a tridiagonal two-point
boundary-value problem:

    g'' + (d-1)/r g' - g = -phi,   g'(0) = 0,   g'(R) = -(1 + (d-1)/(2R)) g(R)

The origin row uses Delta g(0) = d g''(0) with the even ghost node g_{-1} = g_1;
the outer row eliminates the ghost node through the Robin condition.

Also provides the Bessel-potential kernel and an independent kernel-quadrature
oracle for g(0), plus the spectral quantities built on the solve: the
dispersion gap g(0) - phi(0), the energy int g' phi' and its square root.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.linalg import LinAlgError, solve_banded
from scipy.special import k0

from errors import ParameterError, SingularMatrixError, UnsupportedDimension
from grid import (
    RadialField,
    RadialGrid,
    differentiate,
    endpoint_corrected_trapezoid,
    shell_integral,
)

logger = logging.getLogger(__name__)

ORACLE_DIMENSIONS = (1, 2, 3)
PHI_TAIL_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class HelmholtzSolve:
    """Solution g of (1 - Delta) g = phi and its radial derivative."""

    phi: RadialField
    g: RadialField
    gprime: RadialField

    def gsecond(self) -> RadialField:
        return differentiate(self.gprime)


def robin_coefficient(grid: RadialGrid) -> float:
    """kappa in g'(R) = -kappa g(R): two leading orders of e^{-r} r^{-(d-1)/2}."""
    return 1.0 + (grid.d - 1) / (2.0 * grid.r_max)


def _tridiagonal_coefficients(grid: RadialGrid):
    d, h, n = grid.d, grid.h, grid.n
    r = grid.nodes
    kappa = robin_coefficient(grid)

    lower = np.zeros(n)
    diag = np.empty(n)
    upper = np.zeros(n)

    inner = slice(1, n - 1)
    drift = (d - 1) / (2.0 * r[inner] * h)
    lower[inner] = -1.0 / h**2 + drift
    diag[inner] = 1.0 + 2.0 / h**2
    upper[inner] = -1.0 / h**2 - drift

    diag[0] = 1.0 + 2.0 * d / h**2
    upper[0] = -2.0 * d / h**2

    lower[-1] = -2.0 / h**2
    diag[-1] = 1.0 + (2.0 + 2.0 * h * kappa) / h**2 + (d - 1) * kappa / grid.r_max
    return lower, diag, upper


@lru_cache(maxsize=32)
def _banded_operator(grid: RadialGrid) -> np.ndarray:
    lower, diag, upper = _tridiagonal_coefficients(grid)
    ab = np.zeros((3, grid.n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    ab.setflags(write=False)
    return ab


def apply_operator(g: RadialField) -> RadialField:
    """Apply the discrete (1 - Delta_h) used to build the banded system."""
    lower, diag, upper = _tridiagonal_coefficients(g.grid)
    v = g.values
    out = diag * v
    out[1:] += lower[1:] * v[:-1]
    out[:-1] += upper[:-1] * v[1:]
    return RadialField(g.grid, out)


def solve_helmholtz(phi: RadialField) -> HelmholtzSolve:
    """
    Solve (1 - Delta) g = phi on the radial grid.

    Args:
        phi: Right-hand side field

    Returns:
        HelmholtzSolve with g and g'

    Raises:
        SingularMatrixError: if the banded factorization meets a zero pivot
    """
    grid = phi.grid
    scale = max(phi.sup_norm(), 1.0)
    if abs(phi.values[-1]) > PHI_TAIL_TOLERANCE * scale:
        logger.debug(f"phi(r_max)={phi.values[-1]:.3e} is not negligible; enlarge r_max")

    try:
        g = solve_banded((1, 1), _banded_operator(grid), phi.values, check_finite=False)
    except (LinAlgError, ValueError) as e:
        raise SingularMatrixError(f"Helmholtz system is singular: {e}") from e

    g_field = RadialField(grid, g)
    gprime = differentiate(g_field).values.copy()
    gprime[0] = 0.0
    gprime[-1] = -robin_coefficient(grid) * g[-1]
    return HelmholtzSolve(phi, g_field, RadialField(grid, gprime))


def bessel_kernel(d: int, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Bessel potential K, the kernel of (1 - Delta)^{-1} on R^d.

    d=1: exp(-|r|)/2;  d=2: K_0(r)/(2 pi);  d=3: exp(-r)/(4 pi r)

    Raises:
        UnsupportedDimension: for d outside {1, 2, 3}
        ParameterError: for r <= 0 when d >= 2
    """
    if d not in ORACLE_DIMENSIONS:
        raise UnsupportedDimension(d, "bessel_kernel")
    r_arr = np.asarray(r, dtype=float)
    if d >= 2 and np.any(r_arr <= 0):
        raise ParameterError(f"bessel_kernel is singular at r <= 0 for d={d}")

    if d == 1:
        value = 0.5 * np.exp(-np.abs(r_arr))
    elif d == 2:
        value = k0(r_arr) / (2.0 * math.pi)
    else:
        value = np.exp(-r_arr) / (4.0 * math.pi * r_arr)
    return float(value) if np.ndim(value) == 0 else value


def _kernel_jacobian(grid: RadialGrid) -> np.ndarray:
    """omega_d K(r) r^{d-1}, bounded on [0, r_max] with its r -> 0 limit at node 0."""
    r = grid.nodes
    out = np.empty(grid.n)
    if grid.d == 1:
        out[:] = np.exp(-r)
    elif grid.d == 2:
        out[0] = 0.0
        out[1:] = r[1:] * k0(r[1:])
    else:
        out[:] = r * np.exp(-r)
    return out


def helmholtz_oracle(phi: RadialField) -> float:
    """
    g(0) = int K(y) phi(|y|) dy by direct quadrature.

    Raises:
        UnsupportedDimension: for d outside {1, 2, 3}
    """
    grid = phi.grid
    if grid.d not in ORACLE_DIMENSIONS:
        raise UnsupportedDimension(grid.d, "helmholtz_oracle")
    return endpoint_corrected_trapezoid(_kernel_jacobian(grid) * phi.values, grid.h)


def dispersion_gap(phi: RadialField, solve: Optional[HelmholtzSolve] = None) -> float:
    """((Delta/(1-Delta)) phi)(0) = g(0) - phi(0)."""
    solve = solve or solve_helmholtz(phi)
    return solve.g.origin - phi.origin


def energy(phi: RadialField, solve: Optional[HelmholtzSolve] = None) -> float:
    """
    Conserved energy int g' phi' dx (= int |u|^2 + |grad u|^2 for u = grad g).

    Negative raw values are quadrature error; they are clipped to 0 and logged.
    """
    solve = solve or solve_helmholtz(phi)
    raw = shell_integral(
        RadialField(phi.grid, solve.gprime.values * differentiate(phi).values)
    )
    if raw < 0.0:
        logger.debug(f"Raw energy {raw:.3e} < 0, reporting 0")
        return 0.0
    return raw


def h_half_norm(phi: RadialField, solve: Optional[HelmholtzSolve] = None) -> float:
    """Multiplier norm with symbol |xi|/(1+|xi|^2)^{1/2}: sqrt(energy)."""
    return math.sqrt(energy(phi, solve))
