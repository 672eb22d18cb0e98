"""
Characteristic Lines and Sign Transport

f = phi' obeys the transport equation

    f_t + g' f_r + c f = 0,   c = -phi + g + g''

so along characteristics dz/dt = g'(z,t) it evolves as
f(z(t),t) = f(alpha,0) exp(-int_0^t c dt): its sign never changes and
|z(t) - alpha| <= t sup(||g'||_inf + ||g''||_inf).

characteristic_flow() integrates the characteristics through recorded
snapshots (Heun in time, linear interpolation in r and t) and checks both.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from dynamics import SimState
from errors import ParameterError
from grid import differentiate

logger = logging.getLogger(__name__)

SIGN_TOLERANCE = 1e-8
DISPLACEMENT_MARGIN = 0.10
SEED_EXTENT = 0.5
SNAPSHOT_GAP_FACTOR = 100.0


@dataclass(frozen=True)
class CharacteristicReport:
    seeds: int
    sign_flips: int
    max_displacement: float
    transport_bound: float
    bound_constant: float
    bound_holds: bool
    left_domain: int
    max_transport_residual: float
    elapsed: float
    max_snapshot_gap: float
    snapshots_dense: bool


@dataclass(frozen=True)
class _Frame:
    t: float
    velocity: np.ndarray
    slope: np.ndarray
    decay: np.ndarray
    transport_speed: float


def _frame(state: SimState) -> _Frame:
    solve = state.solve()
    gsecond = solve.gsecond().values
    decay = -state.phi.values + solve.g.values + gsecond
    return _Frame(
        t=float(state.t),
        velocity=solve.gprime.values,
        slope=differentiate(state.phi).values,
        decay=decay,
        transport_speed=float(np.max(np.abs(solve.gprime.values)) + np.max(np.abs(gsecond))),
    )


def snapshot_gap_limit(traj, factor: float = SNAPSHOT_GAP_FACTOR) -> float:
    """factor times the median time step recorded along traj."""
    steps = np.abs(np.diff(traj.times))
    steps = steps[steps > 0]
    if steps.size == 0:
        raise ParameterError("snapshot_gap_limit needs at least 2 distinct recorded times")
    return factor * float(np.median(steps))


def characteristic_flow(
    traj_states: Sequence[SimState],
    seeds: Optional[np.ndarray] = None,
    sign_tol: float = SIGN_TOLERANCE,
    max_snapshot_gap: Optional[float] = None,
) -> CharacteristicReport:
    """
    Follow characteristics dz/dt = g'(z,t) through snapshots.

    Args:
        traj_states: Snapshots in time order (forward or backward)
        seeds: Starting radii alpha (default: nodes in (0, r_max/2])
        sign_tol: Flip tolerance relative to max |phi'(., t_0)|
        max_snapshot_gap: Snapshots sparser than this are reported as not dense

    Returns:
        CharacteristicReport
    """
    if len(traj_states) < 2:
        raise ParameterError("characteristic_flow needs at least 2 snapshots")

    grid = traj_states[0].phi.grid
    r = grid.nodes
    if seeds is None:
        seeds = r[(r > 0) & (r <= SEED_EXTENT * grid.r_max)]
    alpha = np.asarray(seeds, dtype=float)

    frames: List[_Frame] = [_frame(state) for state in traj_states]
    gaps = np.abs(np.diff([frame.t for frame in frames]))
    dense = max_snapshot_gap is None or bool(np.all(gaps <= max_snapshot_gap))
    if not dense:
        logger.warning(
            f"⚠️  Snapshot gap {gaps.max():.3g} exceeds {max_snapshot_gap:.3g}; "
            "characteristics are interpolated coarsely"
        )

    bound_constant = max(frame.transport_speed for frame in frames)

    f0 = np.interp(alpha, r, frames[0].slope)
    scale = float(np.max(np.abs(frames[0].slope)))
    threshold = sign_tol * scale if scale > 0 else 0.0
    tracked = np.abs(f0) > threshold
    sign0 = np.sign(f0)

    z = alpha.copy()
    active = np.ones_like(alpha, dtype=bool)
    decay_integral = np.zeros_like(alpha)
    flipped = np.zeros_like(alpha, dtype=bool)
    max_disp = 0.0
    max_residual = 0.0
    worst_ratio = 0.0

    for previous, current in zip(frames[:-1], frames[1:]):
        dt = current.t - previous.t
        v_prev = np.interp(z, r, previous.velocity)
        z_pred = z + dt * v_prev
        v_next = np.interp(z_pred, r, current.velocity)
        z_new = z + 0.5 * dt * (v_prev + v_next)

        c_prev = np.interp(z, r, previous.decay)
        c_next = np.interp(z_new, r, current.decay)
        decay_integral = np.where(active, decay_integral + 0.5 * dt * (c_prev + c_next), decay_integral)

        leaving = active & ((z_new > grid.r_max) | (z_new < 0.0))
        if np.any(leaving):
            logger.debug(f"{int(leaving.sum())} characteristics left the domain at t={current.t:.4g}")
        active &= ~leaving
        z = np.where(active, np.clip(z_new, 0.0, grid.r_max), z)

        f_now = np.interp(z, r, current.slope)
        flipped |= active & tracked & (sign0 * f_now < -threshold)

        elapsed = abs(current.t - frames[0].t)
        disp = float(np.max(np.abs(z - alpha)[active])) if np.any(active) else 0.0
        max_disp = max(max_disp, disp)
        if elapsed > 0:
            worst_ratio = max(worst_ratio, disp / (elapsed * bound_constant) if bound_constant > 0 else 0.0)

        predicted = f0 * np.exp(-decay_integral)
        check = active & tracked
        if np.any(check):
            residual = np.abs(f_now[check] - predicted[check]) / scale
            max_residual = max(max_residual, float(np.max(residual)))

    elapsed = abs(frames[-1].t - frames[0].t)
    report = CharacteristicReport(
        seeds=int(alpha.size),
        sign_flips=int(np.count_nonzero(flipped)),
        max_displacement=max_disp,
        transport_bound=elapsed * bound_constant,
        bound_constant=bound_constant,
        bound_holds=worst_ratio <= 1.0 + DISPLACEMENT_MARGIN,
        left_domain=int(np.count_nonzero(~active)),
        max_transport_residual=max_residual,
        elapsed=elapsed,
        max_snapshot_gap=float(gaps.max()),
        snapshots_dense=dense,
    )
    logger.debug(f"characteristic_flow: {report}")
    return report
