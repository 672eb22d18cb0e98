"""
Initial-Data Factories

Each factory builds radial initial data satisfying the hypotheses of one
dynamical regime, and each output passes a node-wise validator before it
is handed to the integrator:

    PositiveBump          A exp(-r^2/s^2), A > 0            -> blowup
    MonotoneNegative     -A exp(-r^2/s^2), A > 0            -> global, decaying
    ConcentratedPositive  exp(-r^2/s^2) with phi(0)/||phi||_2 >= ratio
    FamilyASeed           psi0 with psi0(0) = 0 and the three sign conditions
    FamilyAData           psi(., -t0) by backward flow: strictly negative, yet blows up
    ZeroData              phi = 0, the fixed point
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from diagnostics import l2_norm
from dynamics import SimState, StepControl, TerminationReason, evolve
from errors import ConstructionFailure, NegativityFailure, NumericalFault, ParameterError
from grid import RadialField, RadialGrid, differentiate
from helmholtz import solve_helmholtz

logger = logging.getLogger(__name__)


# ============================================================
# CONSTRUCTION CONSTANTS
# ============================================================

MIN_RESOLVED_WIDTHS = 4.0
FAMILY_A_T0_CAP = 0.05
FAMILY_A_MAX_RETRIES = 5
FAMILY_A_DT = 1e-3
HYPOTHESIS_TOL = 1e-12
FAMILY_SLOPE_TOL = 1e-10
SEED_MIN_TAIL = 1e-300


class ScenarioKind(str, Enum):
    POSITIVE_BUMP = "PositiveBump"
    MONOTONE_NEGATIVE = "MonotoneNegative"
    CONCENTRATED_POSITIVE = "ConcentratedPositive"
    FAMILY_A_SEED = "FamilyASeed"
    FAMILY_A_DATA = "FamilyAData"
    ZERO_DATA = "ZeroData"


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind = ScenarioKind.POSITIVE_BUMP
    amplitude: float = 1.0
    width: float = 1.0
    ratio_target: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    t0: Optional[float] = None

    def validate(self) -> None:
        """Raise ParameterError naming the offending field."""
        if self.kind in (ScenarioKind.POSITIVE_BUMP, ScenarioKind.MONOTONE_NEGATIVE):
            if not self.amplitude > 0:
                raise ParameterError(f"scenario.amplitude must be > 0, got {self.amplitude}")
            if not self.width > 0:
                raise ParameterError(f"scenario.width must be > 0, got {self.width}")
        if self.kind is ScenarioKind.CONCENTRATED_POSITIVE:
            if self.ratio_target is None or not self.ratio_target > 0:
                raise ParameterError(f"scenario.ratio_target must be > 0, got {self.ratio_target}")
        if self.kind in (ScenarioKind.FAMILY_A_SEED, ScenarioKind.FAMILY_A_DATA):
            if self.c1 is None or not self.c1 > 0:
                raise ParameterError(f"scenario.c1 must be > 0, got {self.c1}")
            if self.c2 is None or not self.c2 > self.c1:
                raise ParameterError(f"scenario.c2 must exceed scenario.c1, got c1={self.c1} c2={self.c2}")
            if self.t0 is not None and not self.t0 > 0:
                raise ParameterError(f"scenario.t0 must be > 0, got {self.t0}")


# ============================================================
# GAUSSIAN FAMILIES
# ============================================================


def _gaussian(A: float, sigma: float, grid: RadialGrid) -> RadialField:
    phi = grid.evaluate(lambda r: A * np.exp(-((r / sigma) ** 2)))
    if abs(phi.values[-1]) > 1e-12 * abs(A):
        logger.warning(
            f"⚠️  Gaussian width {sigma} too large for r_max={grid.r_max}: "
            f"phi(r_max)={phi.values[-1]:.3e}"
        )
    return phi


def gaussian_bump(A: float, sigma: float, grid: RadialGrid) -> RadialField:
    """
    phi0 = A exp(-r^2/sigma^2).

    Raises:
        ParameterError: A = 0 (identically zero data) or sigma <= 0
    """
    if A == 0:
        raise ParameterError("scenario.amplitude must be nonzero")
    if not sigma > 0:
        raise ParameterError(f"scenario.width must be > 0, got {sigma}")
    return _gaussian(A, sigma, grid)


def monotone_negative(A: float, sigma: float, grid: RadialGrid) -> RadialField:
    """phi0 = -A exp(-r^2/sigma^2), monotone increasing to 0."""
    if not A > 0:
        raise ParameterError(f"scenario.amplitude must be > 0, got {A}")
    return -gaussian_bump(A, sigma, grid)


def concentration_ratio(phi: RadialField) -> float:
    """phi(0) / ||phi||_2."""
    norm = l2_norm(phi)
    return phi.origin / norm if norm > 0 else float("inf")


def concentrated_width(ratio_target: float, d: int) -> float:
    """Gaussian width whose ratio phi(0)/||phi||_2 = sigma^{-d/2} (2/pi)^{d/4} equals ratio_target."""
    return math.sqrt(2.0 / math.pi) * ratio_target ** (-2.0 / d)


def concentrated_positive(ratio_target: float, grid: RadialGrid) -> RadialField:
    """
    Unit-amplitude Gaussian concentrated enough that phi(0) >= ratio * ||phi||_2.

    Raises:
        ParameterError: ratio_target <= 0, or width below 4 grid spacings
    """
    if not ratio_target > 0:
        raise ParameterError(f"scenario.ratio_target must be > 0, got {ratio_target}")
    sigma = concentrated_width(ratio_target, grid.d)
    if sigma < MIN_RESOLVED_WIDTHS * grid.h:
        raise ParameterError(
            f"width {sigma:.3g} for ratio {ratio_target} is below {MIN_RESOLVED_WIDTHS:g}h={MIN_RESOLVED_WIDTHS * grid.h:.3g}"
        )
    return _gaussian(1.0, sigma, grid)


# ============================================================
# HYPOTHESIS VALIDATORS
# ============================================================


def validate_blowup_hypothesis(phi: RadialField) -> bool:
    """phi0(0) >= 0 and phi0 not identically zero."""
    if phi.origin < 0:
        logger.debug(f"Blowup hypothesis fails: phi0(0)={phi.origin:.3e} < 0")
        return False
    if phi.sup_norm() == 0:
        logger.debug("Blowup hypothesis fails: phi0 is identically zero")
        return False
    return True


def validate_global_hypothesis(phi: RadialField, tol: float = HYPOTHESIS_TOL) -> bool:
    """phi0(0) <= 0 and phi0 nondecreasing (phi0' >= -tol*scale)."""
    if phi.origin > 0:
        logger.debug(f"Global hypothesis fails: phi0(0)={phi.origin:.3e} > 0")
        return False
    slope = differentiate(phi).values
    scale = max(float(np.max(np.abs(slope))), 1.0)
    if np.min(slope[1:]) < -tol * scale:
        logger.debug(f"Global hypothesis fails: min phi0'={np.min(slope):.3e}")
        return False
    return True


def validate_concentration_hypothesis(phi: RadialField, ratio_target: float) -> bool:
    """phi0(0) >= ratio_target * ||phi0||_2 (within quadrature error)."""
    ratio = concentration_ratio(phi)
    if ratio < ratio_target * (1.0 - 1e-6):
        logger.debug(f"Concentration hypothesis fails: ratio {ratio:.6g} < {ratio_target}")
        return False
    return True


def validate_family_a_conditions(psi0: RadialField, c1: float, c2: float) -> bool:
    """
    Node-wise sign conditions on the seed:

        psi0(0) = 0;  psi0' <= 0 on [0, c1];  psi0' > 0 on (c2, 3 c2];  psi0 < 0 on (c1/2, 2 c2)
    """
    r = psi0.grid.nodes
    slope = differentiate(psi0).values
    slack = FAMILY_SLOPE_TOL * float(np.max(np.abs(slope)))
    checks = [
        ("psi0(0) = 0", psi0.origin == 0.0),
        ("psi0' <= 0 on [0, c1]", bool(np.all(slope[r <= c1] <= slack))),
        ("psi0' > 0 on (c2, 3c2]", bool(np.all(slope[(r > c2) & (r <= 3 * c2)] > 0.0))),
        ("psi0 < 0 on (c1/2, 2c2)", bool(np.all(psi0.values[(r > 0.5 * c1) & (r < 2 * c2)] < 0.0))),
    ]
    ok = True
    for name, passed in checks:
        if not passed:
            logger.debug(f"Family seed condition fails: {name}")
            ok = False
    return ok


# ============================================================
# FAMILY A
# ============================================================


def family_a_seed(c1: float, c2: float, grid: RadialGrid) -> RadialField:
    """
    psi0(r) = -(r^2/s^2) exp(1 - r^2/s^2) with s^2 = c1 c2.

    psi0(0) = 0, minimum -1 at r = s in [c1, c2], psi0 < 0 for r > 0.

    Raises:
        ParameterError: unless 0 < c1 < c2 and 2 c2 < r_max / 2
        ConstructionFailure: if a sign condition fails on the nodes
    """
    if not 0 < c1 < c2:
        raise ParameterError(f"need 0 < scenario.c1 < scenario.c2, got c1={c1} c2={c2}")
    if not 2 * c2 < grid.r_max / 2:
        raise ParameterError(f"need 2*c2 < r_max/2, got c2={c2} r_max={grid.r_max}")

    s2 = c1 * c2
    x = grid.nodes**2 / s2
    values = -x * np.exp(1.0 - x)
    values[0] = 0.0
    if abs(values[-1]) < SEED_MIN_TAIL:
        raise ParameterError(
            f"seed underflows at r_max={grid.r_max}; reduce r_max so data can stay strictly negative"
        )

    psi0 = RadialField(grid, values)
    if not validate_family_a_conditions(psi0, c1, c2):
        raise ConstructionFailure(f"family seed violates its sign conditions (c1={c1}, c2={c2})")
    return psi0


def transport_speed_bound(phi: RadialField) -> float:
    """B = ||g'||_inf + ||g''||_inf of the transport coefficient."""
    solve = solve_helmholtz(phi)
    return solve.gprime.sup_norm() + solve.gsecond().sup_norm()


def default_backward_time(c1: float, psi0: RadialField) -> float:
    """t0 = min(c1 / (8 B), 0.05)."""
    B = transport_speed_bound(psi0)
    return min(c1 / (8.0 * B), FAMILY_A_T0_CAP) if B > 0 else FAMILY_A_T0_CAP


@dataclass(frozen=True)
class FamilyAReport:
    t0: float
    speed_bound: float
    retries: int
    phi0_origin: float
    max_value: float
    max_radius: float
    seed: RadialField = field(repr=False)


def construct_family_a(
    c1: float,
    c2: float,
    t0: Optional[float],
    grid: RadialGrid,
    max_retries: int = FAMILY_A_MAX_RETRIES,
) -> Tuple[RadialField, FamilyAReport]:
    """
    Flow the seed backward to time -t0 and return strictly negative data.

    t0 defaults to min(c1/(8B), 0.05). When the result is not strictly
    negative, t0 is halved and the construction retried.

    Raises:
        NegativityFailure: after max_retries halvings
        NumericalFault: if the backward flow does not reach -t0
    """
    seed = family_a_seed(c1, c2, grid)
    bound = transport_speed_bound(seed)
    backward_time = default_backward_time(c1, seed) if t0 is None else float(t0)
    if not backward_time > 0:
        raise ParameterError(f"scenario.t0 must be > 0, got {t0}")

    failure: Optional[NegativityFailure] = None
    for attempt in range(max_retries + 1):
        control = StepControl(dt_init=FAMILY_A_DT, safety=1.0, horizon=-backward_time)
        trajectory, report = evolve(SimState(seed, 0.0), control)
        if report.reason is not TerminationReason.HORIZON_REACHED:
            raise NumericalFault(f"backward flow stopped: {report.reason.value} {report.message}")
        phi0 = trajectory.snapshots[-1].phi

        k = int(np.argmax(phi0.values))
        max_value = float(phi0.values[k])
        if max_value < 0.0:
            logger.info(
                f"✅ Family data built: t0={backward_time:.4g}, phi0(0)={phi0.origin:.4g}, "
                f"retries={attempt}"
            )
            return phi0, FamilyAReport(
                t0=backward_time,
                speed_bound=bound,
                retries=attempt,
                phi0_origin=phi0.origin,
                max_value=max_value,
                max_radius=float(grid.nodes[k]),
                seed=seed,
            )

        failure = NegativityFailure("backward data is not strictly negative", float(grid.nodes[k]))
        logger.warning(f"⚠️  {failure}; halving t0={backward_time:.4g}")
        backward_time *= 0.5

    raise failure


# ============================================================
# DISPATCH
# ============================================================


def build_initial_data(spec: ScenarioSpec, grid: RadialGrid) -> Tuple[RadialField, Optional[FamilyAReport]]:
    """Build (and validate) the initial field described by a ScenarioSpec."""
    spec.validate()
    report = None
    if spec.kind is ScenarioKind.ZERO_DATA:
        phi = grid.zeros()
    elif spec.kind is ScenarioKind.POSITIVE_BUMP:
        phi = gaussian_bump(spec.amplitude, spec.width, grid)
        _require(validate_blowup_hypothesis(phi), "positive bump fails phi0(0) >= 0")
    elif spec.kind is ScenarioKind.MONOTONE_NEGATIVE:
        phi = monotone_negative(spec.amplitude, spec.width, grid)
        _require(validate_global_hypothesis(phi), "monotone data is not nondecreasing")
    elif spec.kind is ScenarioKind.CONCENTRATED_POSITIVE:
        phi = concentrated_positive(spec.ratio_target, grid)
        _require(
            validate_concentration_hypothesis(phi, spec.ratio_target),
            "concentrated data misses its ratio target",
        )
    elif spec.kind is ScenarioKind.FAMILY_A_SEED:
        phi = family_a_seed(spec.c1, spec.c2, grid)
    elif spec.kind is ScenarioKind.FAMILY_A_DATA:
        phi, report = construct_family_a(spec.c1, spec.c2, spec.t0, grid)
    else:
        raise ParameterError(f"unknown scenario kind {spec.kind}")
    return phi, report


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConstructionFailure(message)
