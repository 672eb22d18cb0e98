"""
Parameter Sweeps

Runs one simulation per (amplitude, width, dimension) cell and writes
phase.csv. A positive amplitude selects PositiveBump, a negative one
MonotoneNegative with |A|. Rows come out in lexicographic parameter order
whatever order the cells finish in; a failing cell is recorded in its
row and never aborts the sweep.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence

from common_utils import atomic_write_text
from config import RunConfig, SweepConfig
from dynamics import SimState, evolve
from errors import EpflowError
from grid import make_grid
from outputs import csv_text, prepare_output_dir
from scenarios import ScenarioKind, build_initial_data

logger = logging.getLogger(__name__)

PHASE_FILE = "phase.csv"
PHASE_COLUMNS = ("amplitude", "width", "d", "kind", "reason", "t_star", "t_star_uncertainty", "t_end", "final_phi0", "error")


@dataclass(frozen=True, order=True)
class SweepCell:
    amplitude: float
    width: float
    d: int


@dataclass(frozen=True)
class CellResult:
    cell: SweepCell
    kind: str
    reason: str
    t_star: Optional[float] = None
    t_star_uncertainty: Optional[float] = None
    t_end: Optional[float] = None
    final_phi0: Optional[float] = None
    error: str = ""

    def as_row(self) -> list:
        return [
            self.cell.amplitude,
            self.cell.width,
            self.cell.d,
            self.kind,
            self.reason,
            self.t_star,
            self.t_star_uncertainty,
            self.t_end,
            self.final_phi0,
            self.error,
        ]


def sweep_cells(sweep: SweepConfig) -> List[SweepCell]:
    """Cartesian product of the sweep axes, deduplicated and sorted."""
    cells = [
        SweepCell(float(a), float(w), int(d))
        for a in sweep.amplitudes
        for w in sweep.widths
        for d in sweep.dimensions
    ]
    unique = sorted(set(cells))
    if len(unique) < len(cells):
        logger.warning(f"⚠️  Dropped {len(cells) - len(unique)} duplicate sweep cell(s)")
    return unique


def cell_config(base: RunConfig, cell: SweepCell) -> RunConfig:
    kind = ScenarioKind.POSITIVE_BUMP if cell.amplitude >= 0 else ScenarioKind.MONOTONE_NEGATIVE
    scenario = replace(base.scenario, kind=kind, amplitude=abs(cell.amplitude), width=cell.width)
    return replace(base, scenario=scenario, grid=replace(base.grid, d=cell.d))


def run_cell(base: RunConfig, cell: SweepCell) -> CellResult:
    """Run one cell; errors become part of the result."""
    config = cell_config(base, cell)
    kind = config.scenario.kind.value
    try:
        grid = make_grid(config.grid.d, config.grid.r_max, config.grid.n)
        phi0, _ = build_initial_data(config.scenario, grid)
        trajectory, report = evolve(SimState(phi0, 0.0), config.control, snapshot_every=1 << 30)
    except (EpflowError, ValueError) as e:
        logger.error(f"❌ Cell {cell}: {e}")
        return CellResult(cell=cell, kind=kind, reason="Error", error=str(e))

    estimate = report.t_star_estimate
    logger.info(f"✓ Cell A={cell.amplitude:g} sigma={cell.width:g} d={cell.d}: {report.reason.value}")
    return CellResult(
        cell=cell,
        kind=kind,
        reason=report.reason.value,
        t_star=estimate.value if estimate else None,
        t_star_uncertainty=estimate.uncertainty if estimate else None,
        t_end=report.t_end,
        final_phi0=trajectory.records[-1].phi0 if trajectory.records else None,
        error=report.message if report.reason.value in ("NumericalFault", "StepUnderflow") else "",
    )


def run_sweep(sweep: SweepConfig, workers: Optional[int] = None) -> List[CellResult]:
    """Run every cell (concurrently) and return results in cell order."""
    cells = sweep_cells(sweep)
    workers = workers or sweep.workers
    logger.info(f"Sweep: {len(cells)} cell(s) on {workers} worker(s)")
    if not cells:
        return []
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda cell: run_cell(sweep.base, cell), cells))


def write_phase_csv(directory: Path, results: Sequence[CellResult]) -> Path:
    directory = prepare_output_dir(Path(directory))
    path = directory / PHASE_FILE
    atomic_write_text(path, csv_text(PHASE_COLUMNS, (result.as_row() for result in results)))
    logger.info(f"✓ Wrote {path} ({len(results)} rows)")
    return path
