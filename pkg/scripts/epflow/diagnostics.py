"""
Scalar Diagnostics, Inequality Monitors and Envelope Checks

Everything here is a pure function of fields or of recorded time series:

- per-step DiagnosticsRecord (phi(0,t), norms, energy, both sides of the
  origin identity, dispersion gap, running criterion integral, sign monitor)
- origin identity  d phi(0)/dt = (d-1) int (g')^2/r dr + (phi(0) - g(0))^2 / 2
- decay and growth envelopes along long runs
- Poincare-gap studies: gap ratio, Gaussian probe, constructive bound
- blowup mechanism estimates and the concentration inequality monitor
"""

import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, trapezoid

from errors import MonotonicityViolation, ParameterError, UnsupportedDimension
from grid import RadialField, differentiate, make_grid, shell_integral, sphere_area, tail_admissible
from helmholtz import (
    HelmholtzSolve,
    dispersion_gap,
    energy,
    h_half_norm,
    solve_helmholtz,
)

logger = logging.getLogger(__name__)


# ============================================================
# TOLERANCES
# ============================================================

IDENTITY_REL_TOL = 1e-3
IDENTITY_MIN_FRACTION = 0.99
MONOTONE_TOL = 1e-6
ENVELOPE_REL_TOL = 1e-9
RICCATI_BOUND_TOL = 1e-3
POINCARE_ADMISSIBILITY_TOL = 1e-12
GROWTH_FIT_WINDOW = 1.0
GAUSSIAN_PROBE_NODES = 4096
GAUSSIAN_PROBE_EXTENT = 10.0
CONSTRUCTIVE_CHAIN_CONSTANT = 2.0


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar diagnostics of one recorded state."""

    t: float
    phi0: float
    sup_norm: float
    l2_norm: float
    energy: float
    identity510_lhs: float
    identity510_rhs: float
    gap: float
    criterion_integral: float
    min_phi_prime: float
    tail_warning: bool = False

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list:
        return [getattr(self, name) for name in self.columns()]

    def as_dict(self) -> dict:
        return asdict(self)


def l2_norm(phi: RadialField) -> float:
    """||phi||_{L^2(R^d)} by shell quadrature."""
    return math.sqrt(max(shell_integral(RadialField(phi.grid, phi.values**2)), 0.0))


def identity_510_rhs(phi: RadialField, solve: Optional[HelmholtzSolve] = None) -> float:
    """
    (d-1) int_0^R (g')^2/r dr + (phi(0) - g(0))^2 / 2.

    The integrand (g')^2/r tends to r g''(0)^2 at the origin, so it is
    taken as 0 at node 0. The first term vanishes identically in d = 1.
    """
    solve = solve or solve_helmholtz(phi)
    grid = phi.grid
    gap = solve.g.origin - phi.origin
    origin_term = 0.5 * gap * gap
    if grid.d == 1:
        return origin_term

    gp = solve.gprime.values
    integrand = np.zeros(grid.n)
    integrand[1:] = gp[1:] ** 2 / grid.nodes[1:]
    radial_term = float(trapezoid(integrand, dx=grid.h))
    return (grid.d - 1) * radial_term + origin_term


def record_diagnostics(
    phi: RadialField,
    t: float,
    criterion_integral: float,
    solve: Optional[HelmholtzSolve] = None,
    rhs_origin: Optional[float] = None,
) -> DiagnosticsRecord:
    """
    Compute the DiagnosticsRecord of a state.

    Args:
        phi: Current field
        t: Current time
        criterion_integral: Running int ||phi||_inf dt
        solve: Helmholtz solve of phi (computed if omitted)
        rhs_origin: Scheme value of d phi(0)/dt (computed if omitted)
    """
    solve = solve or solve_helmholtz(phi)
    phi_prime = differentiate(phi)
    if rhs_origin is None:
        # local import: dynamics depends on this module
        from dynamics import rhs_at_origin

        rhs_origin = rhs_at_origin(phi, solve, phi_prime)

    return DiagnosticsRecord(
        t=float(t),
        phi0=phi.origin,
        sup_norm=phi.sup_norm(),
        l2_norm=l2_norm(phi),
        energy=energy(phi, solve),
        identity510_lhs=float(rhs_origin),
        identity510_rhs=identity_510_rhs(phi, solve),
        gap=dispersion_gap(phi, solve),
        criterion_integral=float(criterion_integral),
        min_phi_prime=float(np.min(phi_prime.values)),
        tail_warning=not tail_admissible(phi_prime, solve.g),
    )


# ============================================================
# TRAJECTORY MONITORS
# ============================================================


@dataclass(frozen=True)
class IdentityReport:
    fraction_within: float
    max_residual: float
    steps: int
    passed: bool


def identity_510_residuals(traj) -> np.ndarray:
    """
    Relative residual of the origin identity along a trajectory.

    The time derivative of phi(0,t) is taken by second-order finite
    differences across recorded steps, normalized by max(1, rhs).
    """
    times = traj.series("t")
    phi0 = traj.series("phi0")
    rhs = traj.series("identity510_rhs")
    if len(times) < 3:
        raise ParameterError("identity residual needs at least 3 recorded steps")
    fd = np.gradient(phi0, times, edge_order=2)
    return np.abs(fd - rhs) / np.maximum(1.0, np.abs(rhs))


def identity_510_check(
    traj, rel_tol: float = IDENTITY_REL_TOL, min_fraction: float = IDENTITY_MIN_FRACTION
) -> IdentityReport:
    residuals = identity_510_residuals(traj)
    fraction = float(np.mean(residuals <= rel_tol))
    report = IdentityReport(
        fraction_within=fraction,
        max_residual=float(np.max(residuals)),
        steps=len(residuals),
        passed=fraction >= min_fraction,
    )
    logger.debug(f"Identity residual: {fraction:.4f} of {report.steps} steps within {rel_tol}")
    return report


def energy_drift(traj, until: Optional[float] = None) -> float:
    """max |E(t) - E(0)| / E(0) over records with |t| <= until."""
    times = traj.series("t")
    values = traj.series("energy")
    if until is not None:
        values = values[np.abs(times) <= until + 1e-12]
    reference = values[0]
    if reference == 0.0:
        return float(np.max(np.abs(values)))
    return float(np.max(np.abs(values - reference)) / reference)


def origin_growth_rates(traj) -> np.ndarray:
    """Finite-difference d phi(0,t)/dt across recorded steps."""
    return np.gradient(traj.series("phi0"), traj.series("t"), edge_order=1)


@dataclass(frozen=True)
class OriginRateReport:
    min_scaled_rate: float
    worst_t: float
    holds: bool


def origin_rate_check(traj, tol: float = MONOTONE_TOL) -> OriginRateReport:
    """
    d phi(0,t)/dt against -tol*max(1, phi(0,t)^2) at every recorded step.

    Raises:
        ParameterError: if fewer than 2 steps were recorded
    """
    phi0 = traj.series("phi0")
    if len(phi0) < 2:
        raise ParameterError("origin_rate_check needs at least 2 recorded steps")
    scaled = origin_growth_rates(traj) / np.maximum(1.0, phi0**2)
    worst = int(np.argmin(scaled))
    report = OriginRateReport(
        min_scaled_rate=float(scaled[worst]),
        worst_t=float(traj.series("t")[worst]),
        holds=bool(scaled[worst] >= -tol),
    )
    if not report.holds:
        logger.debug(f"phi(0,t) rate {report.min_scaled_rate:.3e} below -{tol:g} at t={report.worst_t:.6g}")
    return report


def is_nondecreasing(values: np.ndarray, tol: float = MONOTONE_TOL) -> bool:
    """True if consecutive decreases stay within tol*max(1, |value|)."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return True
    drops = values[:-1] - values[1:]
    scale = np.maximum(1.0, np.abs(values[1:]))
    return bool(np.all(drops <= tol * scale))


@dataclass(frozen=True)
class EnvelopeReport:
    sup: float
    consistent: bool
    negative: bool
    monotone: bool
    decay_exponent: float
    window_start: float
    weight: str


def _decay_weight(d: int, t: np.ndarray) -> Tuple[np.ndarray, str]:
    if d >= 3:
        return 1.0 + t, "1+t"
    if d == 2:
        return np.log(10.0 + t), "log(10+t)"
    raise UnsupportedDimension(d, "decay_envelope_check", supported=">= 2")


def decay_envelope_check(
    traj, d: int, tol: float = MONOTONE_TOL, rel_tol: float = ENVELOPE_REL_TOL
) -> EnvelopeReport:
    """
    Check the decay envelope of phi(0,t) < 0 on the last half of a global run.

    The weighted amplitude w(t)|phi(0,t)| uses w = 1+t for d >= 3 and
    log(10+t) for d = 2. The envelope is consistent when the weighted
    amplitude is non-increasing over the window.

    Raises:
        ParameterError: if phi(0,0) >= 0
        MonotonicityViolation: if phi(0,t) decreases beyond tolerance
    """
    times = traj.series("t")
    phi0 = traj.series("phi0")
    if phi0[0] >= 0.0:
        raise ParameterError(f"decay envelope needs phi(0,0) < 0, got {phi0[0]:.6g}")

    drops = phi0[:-1] - phi0[1:]
    scale = np.maximum(1.0, np.abs(phi0[1:]))
    bad = np.flatnonzero(drops > tol * scale)
    if bad.size:
        t_bad = float(times[bad[0] + 1])
        raise MonotonicityViolation(f"phi(0,t) decreased at t={t_bad:.6g}", t=t_bad)

    window = times >= 0.5 * times[-1]
    w, label = _decay_weight(d, times[window])
    weighted = w * np.abs(phi0[window])
    sup = float(np.max(weighted))
    consistent = bool(np.all(np.diff(weighted) <= rel_tol * sup))

    amplitude = np.abs(phi0[window])
    if np.all(amplitude > 0) and len(amplitude) >= 2:
        slope = np.polyfit(np.log1p(times[window]), np.log(amplitude), 1)[0]
    else:
        slope = float("nan")

    return EnvelopeReport(
        sup=sup,
        consistent=consistent,
        negative=bool(np.all(phi0 < 0.0)),
        monotone=True,
        decay_exponent=float(slope),
        window_start=float(times[window][0]),
        weight=label,
    )


@dataclass(frozen=True)
class RiccatiDecayReport:
    epsilon: float
    window_start: float
    window_end: float
    implied_bound: float
    observed: float
    holds: bool


def riccati_decay_check(traj, window_start: Optional[float] = None) -> RiccatiDecayReport:
    """
    Riccati lower rate of phi(0,t) < 0 on [t_a, t_end].

    epsilon = min (d phi(0)/dt) / phi(0)^2 over the window. When epsilon > 0,
    |phi(0,t)| <= 1 / (1/|phi(0,t_a)| + epsilon (t - t_a)) on the window;
    the check holds when epsilon > 0 and the recorded amplitudes respect
    that bound. Defaults to the last half of the run.

    Raises:
        ParameterError: if the window has fewer than 3 steps or phi(0,t) >= 0 in it
    """
    times = traj.series("t")
    phi0 = traj.series("phi0")
    t_a = 0.5 * times[-1] if window_start is None else window_start
    window = times >= t_a
    if np.count_nonzero(window) < 3:
        raise ParameterError(f"riccati_decay_check needs 3 steps in [{t_a:.6g}, {times[-1]:.6g}]")
    t_w, phi_w = times[window], phi0[window]
    if np.any(phi_w >= 0.0):
        raise ParameterError("riccati_decay_check needs phi(0,t) < 0 on the window")

    rates = np.gradient(phi_w, t_w, edge_order=2)
    epsilon = float(np.min(rates / phi_w**2))
    amplitude = np.abs(phi_w)
    if epsilon > 0.0:
        bound = 1.0 / (1.0 / amplitude[0] + epsilon * (t_w - t_w[0]))
        holds = bool(np.all(amplitude <= bound * (1.0 + RICCATI_BOUND_TOL)))
    else:
        bound = np.full_like(amplitude, amplitude[0])
        holds = False

    report = RiccatiDecayReport(
        epsilon=epsilon,
        window_start=float(t_w[0]),
        window_end=float(t_w[-1]),
        implied_bound=float(bound[-1]),
        observed=float(amplitude[-1]),
        holds=holds,
    )
    logger.debug(f"riccati_decay_check: {report}")
    return report


@dataclass(frozen=True)
class GrowthReport:
    bound: float
    max_ratio: float
    holds: bool
    weight: str
    linear_holds: bool


def growth_envelope_check(traj, d: int, fit_window: float = GROWTH_FIT_WINDOW) -> GrowthReport:
    """
    ||phi(t)||_2 against B(1+t) (d >= 3) or B(1+t)^{1/2} (d = 2).

    B is the smallest constant making the envelope hold on [0, fit_window].
    The (1+t) envelope, valid in every dimension, is evaluated too.
    """
    times = np.abs(traj.series("t"))
    l2 = traj.series("l2_norm")
    if d == 2:
        weight, label = np.sqrt(1.0 + times), "(1+t)^1/2"
    else:
        weight, label = 1.0 + times, "1+t"

    fit = times <= fit_window
    bound = float(np.max(l2[fit] / weight[fit]))
    ratios = l2 / (bound * weight) if bound > 0 else np.zeros_like(l2)
    linear_bound = float(np.max(l2[fit] / (1.0 + times[fit])))
    linear_ok = bool(np.all(l2 <= linear_bound * (1.0 + times) * (1.0 + ENVELOPE_REL_TOL)))
    return GrowthReport(
        bound=bound,
        max_ratio=float(np.max(ratios)),
        holds=bool(np.all(ratios <= 1.0 + ENVELOPE_REL_TOL)),
        weight=label,
        linear_holds=linear_ok,
    )


@dataclass(frozen=True)
class ConcentrationReport:
    constant: float
    fraction_holding: float
    steps: int


def concentration_check(traj, fit_window: float = GROWTH_FIT_WINDOW) -> ConcentrationReport:
    """
    Monitor d phi0/dt >= phi0^2/4 - C ||phi0||_2 (1+t) phi0.

    C is the smallest constant for which the inequality holds on the
    initial segment; the report gives the fraction of all steps obeying it.
    """
    times = np.abs(traj.series("t"))
    phi0 = traj.series("phi0")
    rate = traj.series("identity510_lhs")
    l2_initial = traj.records[0].l2_norm

    scale = l2_initial * (1.0 + times) * phi0
    deficit = 0.25 * phi0**2 - rate
    usable = (times <= fit_window) & (scale > 0)
    if np.any(usable):
        constant = float(max(np.max(deficit[usable] / scale[usable]), 0.0))
    else:
        constant = 0.0
    holds = rate >= 0.25 * phi0**2 - constant * scale - MONOTONE_TOL * np.maximum(1.0, phi0**2)
    return ConcentrationReport(
        constant=constant, fraction_holding=float(np.mean(holds)), steps=len(holds)
    )


# ============================================================
# POINCARE-GAP STUDIES
# ============================================================


def poincare_ratio(f: RadialField) -> float:
    """
    |g(0) - f(0)| / |f(0)| for admissible 0 <= f <= f(0).

    Raises:
        ParameterError: if f(0) = 0 or f leaves [0, f(0)]
    """
    f0 = f.origin
    if f0 <= 0.0:
        raise ParameterError(f"poincare_ratio needs f(0) > 0, got {f0:.6g}")
    tol = POINCARE_ADMISSIBILITY_TOL * f0
    if np.min(f.values) < -tol or np.max(f.values) > f0 + tol:
        raise ParameterError("poincare_ratio needs 0 <= f <= f(0) on every node")
    return abs(dispersion_gap(f)) / f0


@dataclass(frozen=True)
class GaussianProbe:
    t: float
    d: int
    h_half: float
    gap: float
    tail_ok: bool


def gaussian_probe(t: float, d: int, n: int = GAUSSIAN_PROBE_NODES) -> GaussianProbe:
    """
    Evaluate (h_half_norm, |gap|) on f_t = exp(-t r^2).

    The grid radius scales as 10 t^{-1/2} so the probe resolves the same
    number of widths for every t.
    """
    if not t > 0:
        raise ParameterError(f"gaussian_probe needs t > 0, got {t}")
    if d not in (1, 2, 3):
        raise UnsupportedDimension(d, "gaussian_probe")

    grid = make_grid(d, GAUSSIAN_PROBE_EXTENT / math.sqrt(t), n)
    f = grid.evaluate(lambda r: np.exp(-t * r**2))
    solve = solve_helmholtz(f)
    tail_ok = tail_admissible(differentiate(f), solve.g) and abs(f.values[-1]) < 1e-12
    if not tail_ok:
        logger.warning(f"⚠️  Gaussian probe t={t} d={d}: grid tail condition fails")
    return GaussianProbe(
        t=t,
        d=d,
        h_half=h_half_norm(f, solve),
        gap=abs(dispersion_gap(f, solve)),
        tail_ok=tail_ok,
    )


def _radial_fourier_moment(m: int, a: float) -> float:
    """int_0^inf k^m/(1+k^2) exp(-k^2/a^2) dk, substituted k = a x."""
    value, _ = quad(lambda x: x**m / (1.0 + (a * x) ** 2) * math.exp(-x * x), 0.0, math.inf)
    return a ** (m + 1) * value


def gaussian_probe_closed_form(t: float, d: int) -> Tuple[float, float]:
    """
    Exact (h_half_norm, |gap|) of f_t = exp(-t r^2) from its Fourier transform.

    f^(k) = (pi/t)^{d/2} exp(-k^2/4t), so with c_d = omega_d / (2 pi)^d:

        energy = (pi/t)^d c_d int k^{d+1}/(1+k^2) exp(-k^2/2t) dk
        g(0)   = (pi/t)^{d/2} c_d int k^{d-1}/(1+k^2) exp(-k^2/4t) dk
    """
    if not t > 0:
        raise ParameterError(f"gaussian_probe_closed_form needs t > 0, got {t}")
    c_d = sphere_area(d) / (2.0 * math.pi) ** d
    energy_value = (math.pi / t) ** d * c_d * _radial_fourier_moment(d + 1, math.sqrt(2.0 * t))
    g0 = (math.pi / t) ** (d / 2.0) * c_d * _radial_fourier_moment(d - 1, 2.0 * math.sqrt(t))
    return math.sqrt(energy_value), abs(g0 - 1.0)


def _conjugate_exponent(p: float) -> float:
    return p / (p - 1.0)


def constructive_bound(C1: float, p: float, R: float) -> float:
    """
    Constructive upper bound b(R) on int K f / ||f||_inf in d = 3.

    b(R) = 1 - (R+1) e^{-R} + C1 [C (4 pi)^{1-p'} R^{2-p'} e^{-p'R}]^{1/p'}
    with C = 2 from (R+1) <= 2R on R > 1.

    Raises:
        ParameterError: for p <= 1 or R <= 1
    """
    if not p > 1.0:
        raise ParameterError(f"constructive_bound needs p > 1, got {p}")
    if not R > 1.0:
        raise ParameterError(f"constructive_bound needs R > 1, got {R}")
    q = _conjugate_exponent(p)
    near = 1.0 - (R + 1.0) * math.exp(-R)
    far = (CONSTRUCTIVE_CHAIN_CONSTANT * (4.0 * math.pi) ** (1.0 - q)) ** (1.0 / q)
    return near + C1 * far * R ** ((2.0 - q) / q) * math.exp(-R)


@dataclass(frozen=True)
class ConstructiveEpsilon:
    R_min: float
    b_min: float
    epsilon: float


def constructive_epsilon(
    C1: float, p: float, radii: Optional[Sequence[float]] = None
) -> ConstructiveEpsilon:
    """Scan b(R) over radii (default [2, 30]) and return eps0 = 1 - min b."""
    if radii is None:
        radii = np.linspace(2.0, 30.0, 281)
    values = np.array([constructive_bound(C1, p, float(R)) for R in radii])
    k = int(np.argmin(values))
    b_min = float(values[k])
    return ConstructiveEpsilon(R_min=float(radii[k]), b_min=b_min, epsilon=max(1.0 - b_min, 0.0))


# ============================================================
# BLOWUP MECHANISM ESTIMATES
# ============================================================


@dataclass(frozen=True)
class MechanismEstimate:
    name: str
    measured: float
    bound: float
    holds: bool


def mechanism_estimates(phi: RadialField, R: float) -> List[MechanismEstimate]:
    """
    Quantities of the Riccati blowup mechanism at radius R.

    - oscillation: |g(0) - g(R)| <= R (int_0^R (g')^2/r dr)^{1/2}
    - riccati: identity rhs >= (phi(0) - g(R))^2 / (100 R^2)     (d >= 2)
    - far_field: |g(R)| R^{(d-2)/2} / ||grad g||_2, reported    (d >= 3)
    """
    grid = phi.grid
    if not 0.0 < R <= grid.r_max:
        raise ParameterError(f"R must lie in (0, r_max], got {R}")
    if grid.d < 2:
        raise UnsupportedDimension(grid.d, "mechanism_estimates", supported=">= 2")

    solve = solve_helmholtz(phi)
    g = solve.g.values
    gp = solve.gprime.values
    k = int(round(R / grid.h))
    R_node = float(grid.nodes[k])
    g_R = float(g[k])

    integrand = np.zeros(grid.n)
    integrand[1:] = gp[1:] ** 2 / grid.nodes[1:]
    inner = float(np.sum(0.5 * (integrand[1 : k + 1] + integrand[:k])) * grid.h)

    estimates = []
    oscillation = abs(g[0] - g_R)
    chain = R_node * math.sqrt(inner)
    estimates.append(
        MechanismEstimate("oscillation", oscillation, chain, oscillation <= chain * (1 + 1e-6) + 1e-14)
    )

    rhs = identity_510_rhs(phi, solve)
    riccati = (phi.origin - g_R) ** 2 / (100.0 * R_node**2)
    estimates.append(MechanismEstimate("riccati", rhs, riccati, rhs >= riccati * (1 - 1e-6)))

    if grid.d >= 3:
        grad_norm = math.sqrt(max(shell_integral(RadialField(grid, gp**2)), 0.0))
        ratio = abs(g_R) * R_node ** ((grid.d - 2) / 2.0) / grad_norm if grad_norm > 0 else 0.0
        estimates.append(MechanismEstimate("far_field", ratio, float("nan"), math.isfinite(ratio)))
    return estimates
