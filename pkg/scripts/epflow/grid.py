"""
Radial Mesh and Shell Quadrature

Uniform radial mesh on [0, r_max] for radial functions on R^d, together with
the operations every other module consumes: radial differentiation, shell
integration over R^d and the backward tail integral int_r^rmax f'(s) g(s) ds.

Grids and fields are immutable after construction.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gamma

from errors import NumericalFault, ParameterError

logger = logging.getLogger(__name__)


# ============================================================
# GRID CONSTANTS
# ============================================================

MIN_DIMENSION = 1
MIN_NODES = 16
DEFAULT_TAIL_TOLERANCE = 1e-10


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (omega_1 = 2)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def _readonly(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial mesh r_i = i*h with shell-quadrature weights."""

    d: int
    n: int
    r_max: float
    nodes: np.ndarray = field(repr=False)
    shell_weights: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return self.r_max / (self.n - 1)

    @property
    def omega(self) -> float:
        return sphere_area(self.d)

    def as_field(self, values: Union[np.ndarray, float]) -> "RadialField":
        """Wrap samples (or a constant) as a field on this grid."""
        return RadialField(self, np.broadcast_to(np.asarray(values, dtype=float), (self.n,)))

    def evaluate(self, func) -> "RadialField":
        """Sample a vectorized function of r on the nodes."""
        return self.as_field(func(self.nodes))

    def zeros(self) -> "RadialField":
        return self.as_field(0.0)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples f(r_i) of a radial function on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values)
        if values.shape != (self.grid.n,):
            raise ParameterError(
                f"field has {values.shape} samples, grid has n={self.grid.n}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NumericalFault(
                f"non-finite field value at r={self.grid.nodes[bad]:.6g}"
            )
        object.__setattr__(self, "values", values)

    @property
    def origin(self) -> float:
        return float(self.values[0])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __neg__(self) -> "RadialField":
        return RadialField(self.grid, -self.values)

    def scaled(self, factor: float) -> "RadialField":
        return RadialField(self.grid, factor * self.values)


def make_grid(d: int, r_max: float, n: int) -> RadialGrid:
    """
    Build a uniform radial grid.

    Shell weights are trapezoidal in r with the r^(d-1) Jacobian, so
    w_0 = 0 for d >= 2 and w_0 = omega_1*h/2 for d = 1. In d = 2 the
    integrand omega*r*f(r) has a nonzero slope at the origin; a two-node
    end correction removes the resulting O(h^2) term.

    Args:
        d: Spatial dimension (>= 1)
        r_max: Domain radius (> 0)
        n: Number of nodes (>= 16)

    Returns:
        RadialGrid

    Raises:
        ParameterError: on invalid d, n or r_max
    """
    if int(d) != d or d < MIN_DIMENSION:
        raise ParameterError(f"dimension must be an integer >= {MIN_DIMENSION}, got {d}")
    if int(n) != n or n < MIN_NODES:
        raise ParameterError(f"node count must be an integer >= {MIN_NODES}, got {n}")
    if not (r_max > 0) or not math.isfinite(r_max):
        raise ParameterError(f"r_max must be positive and finite, got {r_max}")

    d, n, r_max = int(d), int(n), float(r_max)
    h = r_max / (n - 1)
    nodes = np.arange(n, dtype=float) * h
    nodes[-1] = r_max
    omega = sphere_area(d)

    weights = omega * nodes ** (d - 1) * h
    weights[0] = 0.5 * omega * h if d == 1 else 0.0
    weights[-1] *= 0.5
    if d == 2:
        weights[1] += omega * nodes[1] * h / 6.0
        weights[2] -= omega * nodes[2] * h / 24.0

    grid = RadialGrid(d, n, r_max, _readonly(nodes), _readonly(weights))
    logger.debug(f"Grid d={d} n={n} r_max={r_max} h={h:.6g}")
    return grid


def differentiate(f: RadialField) -> RadialField:
    """
    Radial derivative by second-order finite differences.

    Central differences inside, one-sided three-point stencils at both ends.
    The stencils are written as differences so constants map to exact zeros.
    """
    v = f.values
    h = f.grid.h
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (4.0 * (v[1] - v[0]) - (v[2] - v[0])) / (2.0 * h)
    out[-1] = ((v[-3] - v[-1]) - 4.0 * (v[-2] - v[-1])) / (2.0 * h)
    return RadialField(f.grid, out)


def shell_integral(f: RadialField) -> float:
    """Integral of a radial function over R^d truncated at r_max."""
    return float(np.dot(f.grid.shell_weights, f.values))


def endpoint_corrected_trapezoid(values: np.ndarray, h: float) -> float:
    """
    Trapezoid rule on a uniform mesh with Gregory end corrections.

    Removes the h^2 Euler-Maclaurin term using one-sided slopes at both
    ends; fourth-order for smooth integrands.
    """
    values = np.asarray(values, dtype=float)
    trap = h * (values.sum() - 0.5 * (values[0] + values[-1]))
    left = -3.0 * values[0] + 4.0 * values[1] - values[2]
    right = 3.0 * values[-1] - 4.0 * values[-2] + values[-3]
    return float(trap + h * (left - right) / 24.0)


def boundary_product(fprime: RadialField, g: RadialField) -> float:
    """|f'(r_max) * g(r_max)|, the size of the integrand cut off by truncation."""
    return abs(float(fprime.values[-1] * g.values[-1]))


def tail_admissible(
    fprime: RadialField, g: RadialField, tail_tol: float = DEFAULT_TAIL_TOLERANCE
) -> bool:
    """True if truncating the tail integral at r_max is admissible."""
    return boundary_product(fprime, g) <= tail_tol


def tail_integral(
    fprime: RadialField, g: RadialField, tail_tol: float = DEFAULT_TAIL_TOLERANCE
) -> RadialField:
    """
    Backward cumulative trapezoid of f'*g: h(r_i) = int_{r_i}^{r_max} f' g ds.

    Args:
        fprime: Radial derivative field
        g: Field on the same grid
        tail_tol: Boundary-product tolerance for the truncation warning

    Returns:
        RadialField with h(r_max) = 0
    """
    if fprime.grid is not g.grid:
        raise ParameterError("tail_integral fields must share a grid")

    product = fprime.values * g.values
    tail = cumulative_trapezoid(product[::-1], dx=fprime.grid.h, initial=0.0)[::-1]

    if not tail_admissible(fprime, g, tail_tol):
        logger.debug(
            f"Tail truncation: |f'g|(r_max)={boundary_product(fprime, g):.3e} > {tail_tol:.1e}"
        )
    return RadialField(fprime.grid, tail)
