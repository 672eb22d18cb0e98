#!/usr/bin/env python3
"""
Verification Suites

Named bundles of checks that run the simulator at reference resolution and
compare measured values against their tolerances:

    helmholtz     manufactured solution and convergence order of the solver
    conservation  energy drift of Gaussian data over t in [0, 1]
    identity510   origin identity along a blowup run
    thm13         blowup of nonnegative-origin data, T* under refinement
    thm14         global monotone-negative run, sign transport, growth envelope
    cor15         decay envelopes of phi(0,t) in d = 3 and d = 2
    thm16         strictly negative family data that still blows up
    thm21         concentrated data in d = 1
    lemma-gap     Poincare-gap ratio and the Besov interpolation constant
    remark25      Gaussian counterexample family
    remark23      constructive epsilon_0 in d = 3

Usage:
    results = run_suite("remark23")
    log_results_table("remark23", results)
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from besov import besov_b01inf, interpolation_ratio
from characteristics import characteristic_flow, snapshot_gap_limit
from common_utils import banner
from diagnostics import (
    constructive_epsilon,
    decay_envelope_check,
    energy_drift,
    gaussian_probe,
    gaussian_probe_closed_form,
    growth_envelope_check,
    identity_510_check,
    identity_510_rhs,
    is_nondecreasing,
    origin_rate_check,
    poincare_ratio,
    riccati_decay_check,
)
from dynamics import SimState, StepControl, TerminationReason, TerminationReport, Trajectory, evolve
from errors import EpflowError, MonotonicityViolation, ParameterError
from grid import RadialField, make_grid
from helmholtz import dispersion_gap, helmholtz_oracle, solve_helmholtz
from scenarios import (
    concentrated_positive,
    concentrated_width,
    construct_family_a,
    gaussian_bump,
    monotone_negative,
)

logger = logging.getLogger(__name__)


# ============================================================
# REFERENCE SETTINGS
# ============================================================

REFERENCE_R_MAX = 20.0
REFERENCE_NODES = 2048
REFINEMENT_NODES = (1024, 2048, 4096)
IDENTITY_SAFETY = 0.05
MANUFACTURED_R_MAX = 10.0
MANUFACTURED_TOL = 1e-5
CONVERGENCE_NODES = (512, 1024, 2048, 4096)
ENERGY_TOL = 1e-5
TSTAR_AGREEMENT = 0.05
CRITERION_GROWTH = 10.0
MONOTONE_HORIZON = 50.0
D2_DECAY_HORIZON = 200.0
FAMILY_C1 = 1.0
FAMILY_C2 = 2.0
FAMILY_NODES = 1024
FAMILY_ORIGIN_TOL = 1e-3
CONCENTRATED_WIDTH = 0.1
CONCENTRATED_R_MAX = 5.0
CONCENTRATED_NODES = 1024
GAP_RATIO_BOUND = 0.06
H_HALF_RATIO_RANGE = (1.0 / 3.0, 3.0)
CLOSED_FORM_TOL = 5e-3
PROBE_TIMES = (1.0, 0.1, 0.01)
POINCARE_REFINEMENT_TOL = 0.20
BESOV_WIDTHS = (0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: str
    tolerance: str
    passed: bool


def _check(name: str, measured: object, tolerance: str, passed: bool) -> CheckResult:
    if isinstance(measured, str):
        text = measured
    elif isinstance(measured, float) and math.isfinite(measured):
        text = f"{measured:.6g}"
    else:
        text = str(measured)
    return CheckResult(name=name, measured=text, tolerance=tolerance, passed=bool(passed))


def _run(phi: RadialField, control: StepControl, snapshot_every: Optional[int] = None) -> Tuple[Trajectory, TerminationReport]:
    trajectory, report = evolve(SimState(phi, 0.0), control, snapshot_every)
    logger.info(
        f"  run d={phi.grid.d} n={phi.grid.n}: {report.reason.value} at t={report.t_end:.6g} "
        f"({report.steps} steps)"
    )
    return trajectory, report


def _strictly_increasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) > 0.0))


# ============================================================
# SUITES
# ============================================================


def suite_helmholtz() -> List[CheckResult]:
    """Manufactured solution phi = (7 - 4r^2) e^{-r^2} -> g = e^{-r^2} in d = 3."""
    results = []
    errors = []
    for n in CONVERGENCE_NODES:
        grid = make_grid(3, REFERENCE_R_MAX, n)
        phi = grid.evaluate(lambda r: (7.0 - 4.0 * r**2) * np.exp(-(r**2)))
        g = solve_helmholtz(phi).g.values
        errors.append(float(np.max(np.abs(g - np.exp(-grid.nodes**2)))))
    slope = -np.polyfit(np.log(CONVERGENCE_NODES), np.log(errors), 1)[0]
    results.append(_check("convergence order", float(slope), "2.0 +/- 0.3", abs(slope - 2.0) <= 0.3))

    grid = make_grid(3, MANUFACTURED_R_MAX, 4096)
    phi = grid.evaluate(lambda r: (7.0 - 4.0 * r**2) * np.exp(-(r**2)))
    solve = solve_helmholtz(phi)
    err = float(np.max(np.abs(solve.g.values - np.exp(-grid.nodes**2))))
    results.append(_check("manufactured g error (n=4096)", err, f"<= {MANUFACTURED_TOL:g}", err <= MANUFACTURED_TOL))

    rhs = identity_510_rhs(phi, solve)
    results.append(_check("origin identity rhs", rhs, "20 +/- 1e-3", abs(rhs - 20.0) <= 1e-3))
    return results


def suite_conservation() -> List[CheckResult]:
    results = []
    grid = make_grid(3, MANUFACTURED_R_MAX, 4096)
    for amplitude in (1.0, -1.0):
        phi = gaussian_bump(amplitude, 1.0, grid)
        trajectory, report = _run(phi, StepControl(horizon=1.0))
        drift = energy_drift(trajectory, until=1.0)
        results.append(
            _check(f"energy drift A={amplitude:+g}", drift, f"<= {ENERGY_TOL:g}", drift <= ENERGY_TOL)
        )
    return results


def suite_identity510() -> List[CheckResult]:
    grid = make_grid(3, REFERENCE_R_MAX, REFERENCE_NODES)
    trajectory, report = _run(
        gaussian_bump(1.0, 1.0, grid), StepControl(safety=IDENTITY_SAFETY, horizon=10.0)
    )
    check = identity_510_check(trajectory)
    return [
        _check("blowup reached", report.reason.value, "BlowupDetected", report.reason is TerminationReason.BLOWUP_DETECTED),
        _check(
            "steps within 1e-3",
            check.fraction_within,
            ">= 0.99",
            check.passed,
        ),
    ]


def suite_thm13() -> List[CheckResult]:
    results = []
    for d in (2, 3):
        estimates = []
        for n in REFINEMENT_NODES:
            grid = make_grid(d, REFERENCE_R_MAX, n)
            trajectory, report = _run(gaussian_bump(1.0, 1.0, grid), StepControl(horizon=10.0))
            blowup = report.reason is TerminationReason.BLOWUP_DETECTED
            results.append(_check(f"d={d} n={n} blowup", report.reason.value, "BlowupDetected", blowup))
            if not blowup:
                continue
            results.append(
                _check(f"d={d} n={n} phi(0,t) increasing", "yes" if _strictly_increasing(trajectory.phi0) else "no",
                       "strict", _strictly_increasing(trajectory.phi0))
            )
            results.append(origin_rate_row(f"d={d} n={n}", trajectory))
            t_star = report.t_star_estimate.value
            estimates.append(t_star)
            if n == REFERENCE_NODES:
                half = np.interp(0.5 * t_star, trajectory.times, trajectory.series("criterion_integral"))
                growth = report.criterion_integral / half if half > 0 else float("inf")
                results.append(
                    _check(f"d={d} criterion growth", growth, f"> {CRITERION_GROWTH:g}", growth > CRITERION_GROWTH)
                )
        if len(estimates) == len(REFINEMENT_NODES):
            spread = (max(estimates) - min(estimates)) / min(estimates)
            results.append(
                _check(f"d={d} T* agreement ({min(estimates):.4g}..{max(estimates):.4g})", spread,
                       f"<= {TSTAR_AGREEMENT:g}", spread <= TSTAR_AGREEMENT)
            )
    return results


@lru_cache(maxsize=None)
def _monotone_negative_run(d: int, horizon: float, r_max: float, n: int, dt_init: float):
    grid = make_grid(d, r_max, n)
    control = StepControl(dt_init=dt_init, horizon=horizon)
    return _run(monotone_negative(1.0, 1.0, grid), control, snapshot_every=20)


def suite_thm14() -> List[CheckResult]:
    trajectory, report = _monotone_negative_run(3, MONOTONE_HORIZON, REFERENCE_R_MAX, REFERENCE_NODES, 0.01)
    min_slope = float(np.min(trajectory.series("min_phi_prime")))
    growth = growth_envelope_check(trajectory, 3)
    gap_limit = snapshot_gap_limit(trajectory)
    transport = characteristic_flow(trajectory.snapshots, max_snapshot_gap=gap_limit)
    return [
        _check("horizon reached", report.reason.value, "HorizonReached", report.reason is TerminationReason.HORIZON_REACHED),
        _check("min phi'(r,t)", min_slope, ">= -1e-6", min_slope >= -1e-6),
        _check("phi(0,t) nondecreasing", "yes" if is_nondecreasing(trajectory.phi0) else "no", "tol 1e-6",
               is_nondecreasing(trajectory.phi0)),
        origin_rate_row("d=3", trajectory),
        _check("||phi||_2 / B(1+t)", growth.max_ratio, "<= 1", growth.holds),
        _check("sign flips along characteristics", transport.sign_flips, "0", transport.sign_flips == 0),
        _check("max displacement", transport.max_displacement, f"<= t*B ({transport.transport_bound:.4g}) +10%",
               transport.bound_holds),
        _check("snapshot gap", transport.max_snapshot_gap, f"<= 100 dt ({gap_limit:.4g})", transport.snapshots_dense),
    ]


def origin_rate_row(label: str, trajectory: Trajectory) -> CheckResult:
    rate = origin_rate_check(trajectory)
    return _check(
        f"{label} min dphi(0,t)/dt / max(1, phi(0,t)^2)",
        rate.min_scaled_rate,
        f">= -1e-6 (worst t={rate.worst_t:.4g})",
        rate.holds,
    )


def envelope_checks(label: str, trajectory: Trajectory, d: int) -> List[CheckResult]:
    try:
        envelope = decay_envelope_check(trajectory, d)
    except MonotonicityViolation as e:
        return [_check(f"{label} phi(0,t) monotone", f"decrease at t={e.t:.4g}", "nondecreasing", False)]
    results = [
        _check(
            f"{label} sup {envelope.weight}|phi(0,t)| (non-increasing: {'yes' if envelope.consistent else 'no'}, "
            f"|phi(0)|~(1+t)^{envelope.decay_exponent:.3g})",
            envelope.sup,
            "finite",
            math.isfinite(envelope.sup),
        ),
        _check(f"{label} phi(0,t) < 0", "yes" if envelope.negative else "no", "throughout", envelope.negative),
        _check(f"{label} phi(0,t) monotone", "yes", "nondecreasing", envelope.monotone),
    ]
    try:
        riccati = riccati_decay_check(trajectory, envelope.window_start)
    except ParameterError as e:
        results.append(_check(f"{label} Riccati rate", str(e), "> 0", False))
        return results
    results.append(
        _check(
            f"{label} Riccati rate min (dphi(0)/dt)/phi(0)^2 on [{riccati.window_start:.4g}, {riccati.window_end:.4g}]",
            riccati.epsilon,
            f"> 0; |phi(0,{riccati.window_end:.4g})| = {riccati.observed:.4g} <= {riccati.implied_bound:.4g}",
            riccati.holds,
        )
    )
    return results


def suite_cor15() -> List[CheckResult]:
    results = []
    trajectory, _ = _monotone_negative_run(3, MONOTONE_HORIZON, REFERENCE_R_MAX, REFERENCE_NODES, 0.01)
    results.extend(envelope_checks("d=3", trajectory, 3))
    trajectory, report = _monotone_negative_run(2, D2_DECAY_HORIZON, 30.0, 1024, 0.05)
    results.append(
        _check("d=2 horizon reached", report.reason.value, "HorizonReached", report.reason is TerminationReason.HORIZON_REACHED)
    )
    results.extend(envelope_checks("d=2", trajectory, 2))
    growth = growth_envelope_check(trajectory, 2)
    results.append(_check("d=2 ||phi||_2 / B(1+t)^1/2", growth.max_ratio, "<= 1", growth.holds))
    return results


def suite_thm16() -> List[CheckResult]:
    grid = make_grid(3, REFERENCE_R_MAX, FAMILY_NODES)
    phi0, family = construct_family_a(FAMILY_C1, FAMILY_C2, None, grid)
    results = [
        _check("max phi0 over nodes", family.max_value, "< 0", family.max_value < 0.0),
        _check("backward time t0", family.t0, "> 0", family.t0 > 0.0),
    ]
    trajectory, report = _run(phi0, StepControl(horizon=20.0))
    origin_at_t0 = float(np.interp(family.t0, trajectory.times, trajectory.phi0))
    scale = family.seed.sup_norm()
    results.extend(
        [
            _check("phi(0, t0)", origin_at_t0, f"0 +/- {FAMILY_ORIGIN_TOL:g}", abs(origin_at_t0) <= FAMILY_ORIGIN_TOL * scale),
            _check("blowup reached", report.reason.value, "BlowupDetected", report.reason is TerminationReason.BLOWUP_DETECTED),
            _check("phi(0,t) increasing", "yes" if is_nondecreasing(trajectory.phi0) else "no", "tol 1e-6",
                   is_nondecreasing(trajectory.phi0)),
            origin_rate_row("d=3", trajectory),
        ]
    )
    if report.t_star_estimate is not None:
        t_star = report.t_star_estimate.value
        results.append(_check("T* after t0", t_star, f"> {family.t0:.4g}", t_star > family.t0))
    return results


def suite_thm21() -> List[CheckResult]:
    grid = make_grid(1, CONCENTRATED_R_MAX, CONCENTRATED_NODES)
    ratio = (math.sqrt(2.0 / math.pi) / CONCENTRATED_WIDTH) ** 0.5
    phi = concentrated_positive(ratio, grid)
    _, report = _run(phi, StepControl(horizon=10.0))
    width = concentrated_width(ratio, 1)
    return [
        _check("width", width, f"{CONCENTRATED_WIDTH:g}", abs(width - CONCENTRATED_WIDTH) <= 1e-12),
        _check("blowup reached", report.reason.value, "BlowupDetected", report.reason is TerminationReason.BLOWUP_DETECTED),
    ]


def suite_lemma_gap() -> List[CheckResult]:
    results = []
    grid = make_grid(3, REFERENCE_R_MAX, REFERENCE_NODES)
    f = grid.evaluate(lambda r: np.exp(-(r**2)))
    ratio = poincare_ratio(f)
    results.append(_check("poincare_ratio(e^{-r^2}), d=3", ratio, "in (0, 1)", 0.0 < ratio < 1.0))

    phi = gaussian_bump(1.0, 1.0, grid)
    solve = solve_helmholtz(phi)
    rhs = identity_510_rhs(phi, solve)
    half_gap = 0.5 * dispersion_gap(phi, solve) ** 2
    results.append(_check("identity rhs - gap^2/2", rhs - half_gap, ">= 0", rhs >= half_gap))

    grid2 = make_grid(2, 40.0, 1024)
    constants = [
        interpolation_ratio(grid2.evaluate(lambda r, s=s: np.exp(-((r / s) ** 2)))) for s in BESOV_WIDTHS
    ]
    spread = max(constants) / min(constants)
    results.append(
        _check(
            f"interpolation constant over widths ({min(constants):.3g}..{max(constants):.3g})",
            spread,
            "single C (max/min <= 2)",
            all(math.isfinite(c) for c in constants) and spread <= 2.0,
        )
    )
    linear = besov_b01inf(grid2.evaluate(lambda r: 3.0 * np.exp(-(r**2)))) / besov_b01inf(
        grid2.evaluate(lambda r: np.exp(-(r**2)))
    )
    results.append(_check("besov homogeneity", linear, "3 +/- 1e-9", abs(linear - 3.0) <= 1e-9))
    return results


def suite_remark25() -> List[CheckResult]:
    results = []
    coarse, fine = gaussian_probe(1.0, 2), gaussian_probe(0.01, 2)
    gap_ratio = fine.gap / coarse.gap
    h_ratio = fine.h_half / coarse.h_half
    low, high = H_HALF_RATIO_RANGE
    results.append(_check("d=2 gap(0.01)/gap(1)", gap_ratio, f"<= {GAP_RATIO_BOUND:g}", gap_ratio <= GAP_RATIO_BOUND))
    results.append(_check("d=2 h_half(0.01)/h_half(1)", h_ratio, "in [1/3, 3]", low <= h_ratio <= high))

    exact_fine, exact_coarse = gaussian_probe_closed_form(0.01, 1), gaussian_probe_closed_form(1.0, 1)
    exact = exact_fine[0] / exact_coarse[0]
    measured = gaussian_probe(0.01, 1).h_half / gaussian_probe(1.0, 1).h_half
    results.append(
        _check(f"d=1 h_half ratio (exact {exact:.4g})", measured, f"rel {CLOSED_FORM_TOL:g}",
               abs(measured - exact) <= CLOSED_FORM_TOL * exact)
    )

    ratios = {}
    for n in (2048, 4096):
        ratios[n] = [
            poincare_ratio(make_grid(3, 10.0 / math.sqrt(t), n).evaluate(lambda r, t=t: np.exp(-t * r**2)))
            for t in PROBE_TIMES
        ]
    lower = min(ratios[4096])
    stability = abs(min(ratios[2048]) - lower) / lower
    results.append(_check("d=3 min poincare_ratio over t", lower, "> 0", lower > 0.0))
    results.append(
        _check("d=3 lower bound under refinement", stability, f"<= {POINCARE_REFINEMENT_TOL:g}",
               stability <= POINCARE_REFINEMENT_TOL)
    )
    return results


def suite_remark23() -> List[CheckResult]:
    scan = constructive_epsilon(1.0, 2.0)
    return [
        _check(f"min b(R) for C1=1, p=2 (R={scan.R_min:.3g})", scan.b_min, "< 1", scan.b_min < 1.0),
        _check("implied epsilon_0", scan.epsilon, "> 0", scan.epsilon > 0.0),
    ]


SUITES: Dict[str, Callable[[], List[CheckResult]]] = {
    "helmholtz": suite_helmholtz,
    "conservation": suite_conservation,
    "identity510": suite_identity510,
    "thm13": suite_thm13,
    "thm14": suite_thm14,
    "cor15": suite_cor15,
    "thm16": suite_thm16,
    "thm21": suite_thm21,
    "lemma-gap": suite_lemma_gap,
    "remark25": suite_remark25,
    "remark23": suite_remark23,
}


def available_suites() -> List[str]:
    return list(SUITES)


def run_suite(name: str) -> List[CheckResult]:
    """
    Run a named suite.

    Raises:
        ParameterError: unknown suite name
    """
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    banner(f"Verification suite: {name}")
    try:
        return SUITES[name]()
    except EpflowError as e:
        logger.error(f"❌ Suite {name} aborted: {e}")
        return [_check("suite completed", type(e).__name__, "no error", False)]


def log_results_table(name: str, results: List[CheckResult]) -> bool:
    """Log a pass/fail table; return True iff every check passed."""
    width = max([len(r.name) for r in results] + [5])
    logger.info("=" * 60)
    logger.info(f"{'check'.ljust(width)}  {'measured':>14}  tolerance")
    for result in results:
        mark = "✓" if result.passed else "✗"
        logger.info(f"{mark} {result.name.ljust(width)}  {result.measured:>14}  {result.tolerance}")
    passed = sum(r.passed for r in results)
    logger.info("=" * 60)
    ok = passed == len(results)
    if ok:
        logger.info(f"✅ {name}: all {len(results)} checks passed")
    else:
        logger.error(f"❌ {name}: {len(results) - passed} of {len(results)} checks failed")
    return ok


# ============================================================
# ORACLE COMPARISON
# ============================================================

ORACLE_FIELDS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gaussian": lambda r: np.exp(-(r**2)),
    "mexican-hat": lambda r: (1.0 - r**2) * np.exp(-(r**2)),
    "damped-cosine": lambda r: np.cos(r) * np.exp(-(r**2) / 4.0),
    "sech-squared": lambda r: 1.0 / np.cosh(r) ** 2,
    "ring": lambda r: r**2 * np.exp(-(r**2)),
}
ORACLE_REL_TOL = 1e-3


def oracle_results(
    dimensions: Tuple[int, ...] = (1, 2, 3), r_max: float = REFERENCE_R_MAX, n: int = REFERENCE_NODES
) -> List[CheckResult]:
    """Compare the solver's g(0) with kernel quadrature on fixed smooth fields."""
    results = []
    for d in dimensions:
        grid = make_grid(d, r_max, n)
        for name, func in ORACLE_FIELDS.items():
            phi = grid.evaluate(func)
            difference = abs(solve_helmholtz(phi).g.origin - helmholtz_oracle(phi))
            tolerance = ORACLE_REL_TOL * phi.sup_norm()
            results.append(
                _check(f"d={d} {name}", difference, f"<= {tolerance:.3g}", difference <= tolerance)
            )
    return results
