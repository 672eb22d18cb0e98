"""Shared fixtures: put scripts/epflow on sys.path and cache small reference runs."""

import sys
from pathlib import Path

import pytest

SCRIPTS_DIR = Path(__file__).resolve().parent.parent / "scripts" / "epflow"
if str(SCRIPTS_DIR) not in sys.path:
    sys.path.insert(0, str(SCRIPTS_DIR))

from dynamics import SimState, StepControl, evolve  # noqa: E402
from grid import make_grid  # noqa: E402
from scenarios import gaussian_bump, monotone_negative  # noqa: E402


@pytest.fixture(scope="session")
def grid3():
    """d=3 grid resolving unit-width Gaussians."""
    return make_grid(3, 20.0, 1024)


@pytest.fixture(scope="session")
def blowup_run():
    """Gaussian bump A=1, sigma=1, d=3 on a coarse grid: blows up near t = 2.4."""
    grid = make_grid(3, 10.0, 256)
    phi0 = gaussian_bump(1.0, 1.0, grid)
    return evolve(SimState(phi0, 0.0), StepControl(horizon=10.0))


@pytest.fixture(scope="session")
def monotone_run():
    """Monotone negative data, d=3, over t in [0, 2] with dense snapshots."""
    grid = make_grid(3, 20.0, 512)
    phi0 = monotone_negative(1.0, 1.0, grid)
    return evolve(SimState(phi0, 0.0), StepControl(horizon=2.0), snapshot_every=5)
