"""
Time Integration of the Radial Flow

Method-of-lines integration of

    phi_t = phi^2/2 + int_r^inf phi'(s) g(s) ds - g' phi',   g = (1 - Delta)^{-1} phi

with classical RK4 and an adaptive step

    dt = safety * min(dt_init, 1/||phi||_inf, h / max(1, ||g'||_inf))

Runs go forward or backward in time (sign of the horizon). A run ends on
the horizon, on detected blowup (amplitude threshold AND collapsed step),
on step underflow, or on a numerical fault; every ending is reported in a
TerminationReport and never raised past evolve().
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from diagnostics import DiagnosticsRecord, record_diagnostics
from errors import FitFailure, NumericalError, NumericalFault, ParameterError
from grid import RadialField, differentiate, tail_integral
from helmholtz import HelmholtzSolve, solve_helmholtz

logger = logging.getLogger(__name__)


# ============================================================
# STEP CONTROL DEFAULTS
# ============================================================

DEFAULT_DT_INIT = 0.01
DEFAULT_DT_MIN = 1e-5
DEFAULT_SAFETY = 0.5
DEFAULT_BLOWUP_THRESHOLD = 1e3
DEFAULT_HORIZON = 10.0
SNAPSHOTS_PER_RUN = 200
BLOWUP_DT_FACTOR = 10.0

# Blowup-time fit
FIT_MIN_SAMPLES = 10
FIT_GROWTH_FACTOR = 5.0
FIT_WINDOW_FRACTIONS = (0.25, 0.5, 0.75)


class TerminationReason(str, Enum):
    HORIZON_REACHED = "HorizonReached"
    BLOWUP_DETECTED = "BlowupDetected"
    STEP_UNDERFLOW = "StepUnderflow"
    NUMERICAL_FAULT = "NumericalFault"


@dataclass(frozen=True)
class StepControl:
    dt_init: float = DEFAULT_DT_INIT
    dt_min: float = DEFAULT_DT_MIN
    safety: float = DEFAULT_SAFETY
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    horizon: float = DEFAULT_HORIZON

    def validate(self) -> None:
        """Raise ParameterError if the control is inconsistent."""
        if not self.dt_min > 0:
            raise ParameterError(f"dt_min must be > 0, got {self.dt_min}")
        if not self.dt_init >= self.dt_min:
            raise ParameterError(f"dt_init must be >= dt_min, got {self.dt_init}")
        if not 0 < self.safety <= 1:
            raise ParameterError(f"safety must lie in (0, 1], got {self.safety}")
        if not self.blowup_threshold > 1:
            raise ParameterError(f"blowup_threshold must be > 1, got {self.blowup_threshold}")
        if not math.isfinite(self.horizon):
            raise ParameterError(f"horizon must be finite, got {self.horizon}")


@dataclass(frozen=True, eq=False)
class SimState:
    """phi at time t with an optional cached Helmholtz solve of phi."""

    phi: RadialField
    t: float = 0.0
    cached_solve: Optional[HelmholtzSolve] = None

    def solve(self) -> HelmholtzSolve:
        if self.cached_solve is None:
            object.__setattr__(self, "cached_solve", solve_helmholtz(self.phi))
        return self.cached_solve


@dataclass(frozen=True)
class BlowupEstimate:
    value: float
    uncertainty: float


@dataclass(frozen=True)
class TerminationReport:
    reason: TerminationReason
    t_end: float
    t_star_estimate: Optional[BlowupEstimate]
    criterion_integral: float
    steps: int = 0
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "reason": self.reason.value,
            "t_end": self.t_end,
            "t_star_estimate": None
            if self.t_star_estimate is None
            else {
                "value": self.t_star_estimate.value,
                "uncertainty": self.t_star_estimate.uncertainty,
            },
            "criterion_integral": self.criterion_integral,
            "steps": self.steps,
            "message": self.message,
        }


@dataclass
class Trajectory:
    """Per-step diagnostics plus periodic field snapshots."""

    records: List[DiagnosticsRecord] = field(default_factory=list)
    snapshots: List[SimState] = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.records], dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.series("t")

    @property
    def phi0(self) -> np.ndarray:
        return self.series("phi0")

    @classmethod
    def from_series(cls, times: Sequence[float], phi0: Sequence[float]) -> "Trajectory":
        """Build a scalar-only trajectory from phi(0,t) samples."""
        nan = float("nan")
        records = [
            DiagnosticsRecord(
                t=float(t),
                phi0=float(p),
                sup_norm=abs(float(p)),
                l2_norm=nan,
                energy=nan,
                identity510_lhs=nan,
                identity510_rhs=nan,
                gap=nan,
                criterion_integral=nan,
                min_phi_prime=nan,
            )
            for t, p in zip(times, phi0)
        ]
        return cls(records=records)


# ============================================================
# RIGHT-HAND SIDE AND STEPPING
# ============================================================


def _rhs_values(phi: RadialField, solve: HelmholtzSolve) -> np.ndarray:
    phi_prime = differentiate(phi)
    tail = tail_integral(phi_prime, solve.g)
    return 0.5 * phi.values**2 + tail.values - solve.gprime.values * phi_prime.values


def rhs_at_origin(
    phi: RadialField, solve: HelmholtzSolve, phi_prime: Optional[RadialField] = None
) -> float:
    """phi(0)^2/2 + int_0^R phi' g ds; the transport term vanishes at r = 0."""
    if phi_prime is None:
        phi_prime = differentiate(phi)
    return float(0.5 * phi.origin**2 + tail_integral(phi_prime, solve.g).values[0])


def rhs(state: SimState) -> RadialField:
    """Right-hand side of the flow at the current state."""
    return RadialField(state.phi.grid, _rhs_values(state.phi, state.solve()))


def _stage(phi: RadialField, increment: np.ndarray) -> RadialField:
    return RadialField(phi.grid, phi.values + increment)


def step(state: SimState, dt: float, k1: Optional[RadialField] = None) -> SimState:
    """
    One classical RK4 step of size dt (negative for backward integration).

    Raises:
        NumericalFault: if any stage or the result is non-finite
    """
    phi = state.phi
    k1v = (rhs(state) if k1 is None else k1).values
    k2v = _rhs_values(*_with_solve(_stage(phi, 0.5 * dt * k1v)))
    k3v = _rhs_values(*_with_solve(_stage(phi, 0.5 * dt * k2v)))
    k4v = _rhs_values(*_with_solve(_stage(phi, dt * k3v)))
    new_values = phi.values + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    if not np.all(np.isfinite(new_values)):
        raise NumericalFault(f"non-finite state after step at t={state.t + dt:.6g}")
    return SimState(RadialField(phi.grid, new_values), state.t + dt)


def _with_solve(phi: RadialField) -> Tuple[RadialField, HelmholtzSolve]:
    return phi, solve_helmholtz(phi)


def _step_size(state: SimState, control: StepControl) -> float:
    solve = state.solve()
    sup = state.phi.sup_norm()
    gp_sup = solve.gprime.sup_norm()
    candidates = [control.dt_init, state.phi.grid.h / max(1.0, gp_sup)]
    if sup > 0:
        candidates.append(1.0 / sup)
    return control.safety * min(candidates)


def _snapshot_cadence(control: StepControl, snapshot_every: Optional[int]) -> int:
    if snapshot_every:
        return max(1, int(snapshot_every))
    estimated_steps = abs(control.horizon) / (control.safety * control.dt_init)
    return max(1, int(estimated_steps) // SNAPSHOTS_PER_RUN)


def evolve(
    state: SimState, control: StepControl, snapshot_every: Optional[int] = None
) -> Tuple[Trajectory, TerminationReport]:
    """
    Integrate from state to control.horizon (forward or backward).

    Args:
        state: Initial state
        control: Step control; a horizon below state.t integrates backward
        snapshot_every: Field snapshot cadence in steps (auto if None/0)

    Returns:
        (Trajectory, TerminationReport)
    """
    control.validate()
    direction = 1.0 if control.horizon >= state.t else -1.0
    cadence = _snapshot_cadence(control, snapshot_every)
    sup0 = state.phi.sup_norm()

    trajectory = Trajectory()
    criterion = 0.0
    steps = 0
    reason = TerminationReason.HORIZON_REACHED
    message = ""

    logger.debug(
        f"evolve: t0={state.t} horizon={control.horizon} n={state.phi.grid.n} cadence={cadence}"
    )

    try:
        current_rhs = rhs(state)
        trajectory.records.append(
            record_diagnostics(state.phi, state.t, criterion, state.solve(), current_rhs.values[0])
        )
        trajectory.snapshots.append(state)

        while direction * (control.horizon - state.t) > 0:
            dt = _step_size(state, control)
            sup = state.phi.sup_norm()

            if sup0 > 0 and sup >= control.blowup_threshold * sup0 and dt < BLOWUP_DT_FACTOR * control.dt_min:
                reason = TerminationReason.BLOWUP_DETECTED
                message = f"||phi||_inf={sup:.6g} with dt={dt:.3e}"
                break
            if dt < control.dt_min:
                reason = TerminationReason.STEP_UNDERFLOW
                message = f"dt={dt:.3e} below dt_min={control.dt_min:.1e}"
                break

            remaining = abs(control.horizon - state.t)
            dt = direction * min(dt, remaining)
            new_state = step(state, dt, current_rhs)
            if direction * (control.horizon - new_state.t) <= 0 or abs(control.horizon - new_state.t) < 1e-12 * max(1.0, abs(control.horizon)):
                new_state = replace(new_state, t=control.horizon)

            new_sup = new_state.phi.sup_norm()
            criterion += 0.5 * abs(dt) * (sup + new_sup)
            state = new_state
            steps += 1

            current_rhs = rhs(state)
            trajectory.records.append(
                record_diagnostics(state.phi, state.t, criterion, state.solve(), current_rhs.values[0])
            )
            if steps % cadence == 0:
                trajectory.snapshots.append(state)

    except NumericalError as e:
        reason = TerminationReason.NUMERICAL_FAULT
        message = str(e)
        logger.warning(f"⚠️  Numerical fault at t={state.t:.6g}: {e}")

    if trajectory.snapshots and trajectory.snapshots[-1] is not state:
        trajectory.snapshots.append(state)

    t_star = None
    if reason is TerminationReason.BLOWUP_DETECTED:
        try:
            t_star = estimate_blowup_time(trajectory)
        except FitFailure as e:
            logger.warning(f"⚠️  Blowup-time fit failed: {e}")
            t_star = BlowupEstimate(value=state.t, uncertainty=float("inf"))

    report = TerminationReport(
        reason=reason,
        t_end=float(state.t),
        t_star_estimate=t_star,
        criterion_integral=criterion,
        steps=steps,
        message=message,
    )
    logger.debug(f"evolve finished: {reason.value} at t={state.t:.6g} after {steps} steps")
    return trajectory, report


# ============================================================
# BLOWUP TIME
# ============================================================


def _zero_crossing(times: np.ndarray, inverse: np.ndarray) -> Tuple[float, float]:
    if len(times) >= 4:
        coeffs, cov = np.polyfit(times, inverse, 1, cov=True)
        slope, intercept = coeffs
        var_slope, var_intercept, cov_si = cov[0, 0], cov[1, 1], cov[0, 1]
    else:
        slope, intercept = np.polyfit(times, inverse, 1)
        var_slope = var_intercept = cov_si = 0.0
    if slope >= 0:
        raise FitFailure("1/phi(0,t) is not decreasing over the fit window")
    t_star = -intercept / slope
    # delta method on -b/a
    grad_a = intercept / slope**2
    grad_b = -1.0 / slope
    variance = grad_a**2 * var_slope + grad_b**2 * var_intercept + 2 * grad_a * grad_b * cov_si
    return float(t_star), float(math.sqrt(max(variance, 0.0)))


def estimate_blowup_time(traj: Trajectory) -> BlowupEstimate:
    """
    Extrapolate the blowup time from the Riccati profile phi(0,t) ~ 1/(c(T*-t)).

    Fits 1/phi(0,t) linearly in t over the final growth window: the samples
    where phi(0,t) exceeds 5x the initial sup-norm, or the last half of the
    positive samples when fewer than 10 qualify. The uncertainty combines
    the fit standard error and the spread over shortened windows.

    Raises:
        FitFailure: too few samples, or 1/phi(0,t) not decreasing
    """
    times = traj.series("t")
    phi0 = traj.series("phi0")
    reference = traj.records[0].sup_norm if traj.records else 0.0

    positive = np.flatnonzero(phi0 > 0)
    if positive.size < FIT_MIN_SAMPLES:
        raise FitFailure(f"only {positive.size} positive samples of phi(0,t)")

    window = np.flatnonzero(phi0 >= FIT_GROWTH_FACTOR * reference) if reference > 0 else positive
    if window.size < FIT_MIN_SAMPLES:
        window = positive[positive.size // 2 :]
    if window.size < FIT_MIN_SAMPLES:
        window = positive[-FIT_MIN_SAMPLES:]

    t_win = times[window]
    inverse = 1.0 / phi0[window]
    if np.any(np.diff(inverse) >= 0):
        raise FitFailure("1/phi(0,t) is not decreasing over the fit window")

    t_star, stderr = _zero_crossing(t_win, inverse)
    spread = 0.0
    for fraction in FIT_WINDOW_FRACTIONS:
        start = int(len(window) * fraction)
        if len(window) - start >= 3:
            variant, _ = _zero_crossing(t_win[start:], inverse[start:])
            spread = max(spread, abs(variant - t_star))
    return BlowupEstimate(value=t_star, uncertainty=stderr + spread)
