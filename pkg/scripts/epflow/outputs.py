"""
Run Artifacts

Writes the files of one simulate run into its output directory:

    series.csv                    one DiagnosticsRecord per recorded step
    snapshots/snapshot_NNNNN.csv  r, phi, g at each snapshot
    report.json                   termination report, config echo, version, grid hash

Numbers carry 17 significant digits with '.' as decimal separator and
'\\n' line endings. Every file is written atomically.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from common_utils import atomic_write_text, format_number, grid_hash
from config import VERSION, RunConfig, config_echo
from diagnostics import DiagnosticsRecord
from dynamics import SimState, TerminationReport, Trajectory
from errors import ConfigError
from grid import RadialGrid

logger = logging.getLogger(__name__)

SERIES_FILE = "series.csv"
REPORT_FILE = "report.json"
SNAPSHOT_DIR = "snapshots"
SNAPSHOT_COLUMNS = ("r", "phi", "g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Render rows as CSV with bit-stable number formatting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
    return buffer.getvalue()


def write_series(directory: Path, records: Sequence[DiagnosticsRecord]) -> Path:
    path = Path(directory) / SERIES_FILE
    atomic_write_text(path, csv_text(DiagnosticsRecord.columns(), (rec.as_row() for rec in records)))
    return path


def write_snapshots(directory: Path, snapshots: Sequence[SimState]) -> List[Path]:
    """One CSV per snapshot, numbered in time order."""
    paths = []
    for index, state in enumerate(snapshots):
        solve = state.solve()
        rows = zip(state.phi.grid.nodes, state.phi.values, solve.g.values)
        path = Path(directory) / SNAPSHOT_DIR / f"snapshot_{index:05d}.csv"
        atomic_write_text(path, csv_text(SNAPSHOT_COLUMNS, rows))
        paths.append(path)
    return paths


def _json_number(value):
    if isinstance(value, float) and value != value:
        return None
    if isinstance(value, float) and value in (float("inf"), float("-inf")):
        return format_number(value)
    return value


def _clean(obj):
    if isinstance(obj, dict):
        return {key: _clean(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(value) for value in obj]
    return _json_number(obj)


def build_report(
    config: RunConfig,
    report: TerminationReport,
    grid: RadialGrid,
    extra: Optional[dict] = None,
) -> dict:
    document = {
        "version": VERSION,
        "grid_hash": grid_hash(grid.d, grid.n, grid.r_max, grid.nodes),
        "termination": report.as_dict(),
        "config": config_echo(config),
    }
    if extra:
        document.update(extra)
    return _clean(document)


def write_report(directory: Path, document: dict) -> Path:
    path = Path(directory) / REPORT_FILE
    atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")
    return path


def prepare_output_dir(directory: Path) -> Path:
    """
    Create the output directory.

    Raises:
        ConfigError: the directory cannot be created or is not writable
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create {directory}: {e.strerror or e}", field="outputs.directory") from e
    probe = directory / ".epflow-write-test"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise ConfigError(f"{directory} is not writable: {e.strerror or e}", field="outputs.directory") from e
    return directory


def write_run(
    config: RunConfig,
    trajectory: Trajectory,
    report: TerminationReport,
    grid: RadialGrid,
    extra: Optional[dict] = None,
) -> Path:
    """Write every artifact of a run selected by outputs.formats; returns the directory."""
    directory = prepare_output_dir(Path(config.outputs.directory))
    formats = set(config.outputs.formats)

    if "csv" in formats:
        write_series(directory, trajectory.records)
        paths = write_snapshots(directory, trajectory.snapshots)
        logger.info(f"✓ Wrote {SERIES_FILE} ({len(trajectory.records)} rows) and {len(paths)} snapshots")
    if "json" in formats:
        write_report(directory, build_report(config, report, grid, extra))
        logger.info(f"✓ Wrote {REPORT_FILE}")
    return directory
