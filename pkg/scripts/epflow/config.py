#!/usr/bin/env python3
"""
Configuration Management for epflow

Run and sweep configurations are plain KEY=VALUE files: one key per line,
'#' starts a comment, blank lines are ignored. Every key maps onto one
dotted field path of RunConfig, and every error names that field and the
line it came from.

Usage:
    from config import load_run_config, serialize_config

    config = load_run_config(Path("configs/thm13.env"))
    text = serialize_config(config)     # canonical form, parses back to config

Keys:
    SCENARIO_KIND             PositiveBump | MonotoneNegative | ConcentratedPositive |
                              FamilyASeed | FamilyAData | ZeroData
    SCENARIO_AMPLITUDE        Gaussian amplitude A (default: 1.0)
    SCENARIO_WIDTH            Gaussian width sigma (default: 1.0)
    SCENARIO_RATIO_TARGET     phi(0)/||phi||_2 target for ConcentratedPositive
    SCENARIO_C1, SCENARIO_C2  Family radii, 0 < c1 < c2
    SCENARIO_T0               Family backward time (default: automatic)
    GRID_DIMENSION            d (default: 3)
    GRID_R_MAX                Outer radius (default: 20.0)
    GRID_NODES                Node count n (default: 2048)
    CONTROL_DT_INIT           Initial step (default: 0.01)
    CONTROL_DT_MIN            Step floor (default: 1e-5)
    CONTROL_SAFETY            Step safety factor in (0, 1] (default: 0.5)
    CONTROL_BLOWUP_THRESHOLD  Amplitude growth factor for blowup (default: 1000)
    CONTROL_HORIZON           Final time; negative integrates backward (default: 10.0)
    OUTPUT_DIR                Output directory (default: out)
    OUTPUT_SNAPSHOT_EVERY     Snapshot cadence in steps, 0 = automatic (default: 0)
    OUTPUT_FORMATS            Comma-separated subset of csv,json (default: csv,json)

Sweep files add:
    SWEEP_AMPLITUDE           Comma-separated signed amplitudes (negative -> MonotoneNegative)
    SWEEP_WIDTH               Comma-separated widths
    SWEEP_DIMENSION           Comma-separated dimensions
    SWEEP_WORKERS             Concurrent cells (default: 4)

Environment Variables:
    EPFLOW_OUT                Overrides OUTPUT_DIR for simulate and sweep
"""

import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from dynamics import StepControl
from errors import ConfigError
from grid import MIN_NODES
from scenarios import ScenarioKind, ScenarioSpec

logger = logging.getLogger(__name__)

VERSION = "0.1.0"


# ============================================================
# KEY NAMES
# ============================================================

ENV_SCENARIO_KIND = "SCENARIO_KIND"
ENV_SCENARIO_AMPLITUDE = "SCENARIO_AMPLITUDE"
ENV_SCENARIO_WIDTH = "SCENARIO_WIDTH"
ENV_SCENARIO_RATIO_TARGET = "SCENARIO_RATIO_TARGET"
ENV_SCENARIO_C1 = "SCENARIO_C1"
ENV_SCENARIO_C2 = "SCENARIO_C2"
ENV_SCENARIO_T0 = "SCENARIO_T0"

ENV_GRID_DIMENSION = "GRID_DIMENSION"
ENV_GRID_R_MAX = "GRID_R_MAX"
ENV_GRID_NODES = "GRID_NODES"

ENV_CONTROL_DT_INIT = "CONTROL_DT_INIT"
ENV_CONTROL_DT_MIN = "CONTROL_DT_MIN"
ENV_CONTROL_SAFETY = "CONTROL_SAFETY"
ENV_CONTROL_BLOWUP_THRESHOLD = "CONTROL_BLOWUP_THRESHOLD"
ENV_CONTROL_HORIZON = "CONTROL_HORIZON"

ENV_OUTPUT_DIR = "OUTPUT_DIR"
ENV_OUTPUT_SNAPSHOT_EVERY = "OUTPUT_SNAPSHOT_EVERY"
ENV_OUTPUT_FORMATS = "OUTPUT_FORMATS"

ENV_SWEEP_AMPLITUDE = "SWEEP_AMPLITUDE"
ENV_SWEEP_WIDTH = "SWEEP_WIDTH"
ENV_SWEEP_DIMENSION = "SWEEP_DIMENSION"
ENV_SWEEP_WORKERS = "SWEEP_WORKERS"

ENV_EPFLOW_OUT = "EPFLOW_OUT"


# ============================================================
# DEFAULTS
# ============================================================

DEFAULT_DIMENSION = 3
DEFAULT_R_MAX = 20.0
DEFAULT_NODES = 2048
DEFAULT_OUTPUT_DIR = "out"
DEFAULT_FORMATS = ("csv", "json")
DEFAULT_SWEEP_WORKERS = 4
SUPPORTED_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class GridConfig:
    d: int = DEFAULT_DIMENSION
    r_max: float = DEFAULT_R_MAX
    n: int = DEFAULT_NODES


@dataclass(frozen=True)
class OutputConfig:
    directory: str = DEFAULT_OUTPUT_DIR
    snapshot_every: int = 0
    formats: Tuple[str, ...] = DEFAULT_FORMATS


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    grid: GridConfig = field(default_factory=GridConfig)
    control: StepControl = field(default_factory=StepControl)
    outputs: OutputConfig = field(default_factory=OutputConfig)


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    amplitudes: Tuple[float, ...]
    widths: Tuple[float, ...]
    dimensions: Tuple[int, ...]
    workers: int = DEFAULT_SWEEP_WORKERS


# ============================================================
# KEY TABLE
# ============================================================


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text}")
    return value


def _parse_int(text: str) -> int:
    return int(text)


def _parse_formats(text: str) -> Tuple[str, ...]:
    return tuple(item.strip().lower() for item in text.split(",") if item.strip())


@dataclass(frozen=True)
class _Key:
    name: str
    section: str
    attribute: str
    parse: Callable[[str], object]

    @property
    def field_path(self) -> str:
        return f"{self.section}.{self.attribute}"


RUN_KEYS: List[_Key] = [
    _Key(ENV_SCENARIO_KIND, "scenario", "kind", ScenarioKind),
    _Key(ENV_SCENARIO_AMPLITUDE, "scenario", "amplitude", _parse_float),
    _Key(ENV_SCENARIO_WIDTH, "scenario", "width", _parse_float),
    _Key(ENV_SCENARIO_RATIO_TARGET, "scenario", "ratio_target", _parse_float),
    _Key(ENV_SCENARIO_C1, "scenario", "c1", _parse_float),
    _Key(ENV_SCENARIO_C2, "scenario", "c2", _parse_float),
    _Key(ENV_SCENARIO_T0, "scenario", "t0", _parse_float),
    _Key(ENV_GRID_DIMENSION, "grid", "d", _parse_int),
    _Key(ENV_GRID_R_MAX, "grid", "r_max", _parse_float),
    _Key(ENV_GRID_NODES, "grid", "n", _parse_int),
    _Key(ENV_CONTROL_DT_INIT, "control", "dt_init", _parse_float),
    _Key(ENV_CONTROL_DT_MIN, "control", "dt_min", _parse_float),
    _Key(ENV_CONTROL_SAFETY, "control", "safety", _parse_float),
    _Key(ENV_CONTROL_BLOWUP_THRESHOLD, "control", "blowup_threshold", _parse_float),
    _Key(ENV_CONTROL_HORIZON, "control", "horizon", _parse_float),
    _Key(ENV_OUTPUT_DIR, "outputs", "directory", str),
    _Key(ENV_OUTPUT_SNAPSHOT_EVERY, "outputs", "snapshot_every", _parse_int),
    _Key(ENV_OUTPUT_FORMATS, "outputs", "formats", _parse_formats),
]
SWEEP_KEYS = (ENV_SWEEP_AMPLITUDE, ENV_SWEEP_WIDTH, ENV_SWEEP_DIMENSION, ENV_SWEEP_WORKERS)

_KEYS_BY_NAME: Dict[str, _Key] = {key.name: key for key in RUN_KEYS}
_KEYS_BY_FIELD: Dict[str, _Key] = {key.field_path: key for key in RUN_KEYS}


# ============================================================
# PARSING
# ============================================================

Entries = Dict[str, Tuple[str, int]]


def parse_env_text(text: str, source: str = "<config>") -> Entries:
    """
    Parse KEY=VALUE lines into {key: (value, line_number)}.

    Raises:
        ConfigError: malformed line or duplicated key
    """
    entries: Entries = {}
    for line_num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()

        # Skip empty lines and comments
        if not line or line.startswith("#"):
            continue

        if "=" not in line:
            raise ConfigError(f"invalid line format in {source}: {line!r}", line=line_num)
        key, value = line.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ConfigError(
                f"duplicate key {key} (first set on line {entries[key][1]})",
                field=_field_of(key),
                line=line_num,
            )
        entries[key] = (value.strip(), line_num)
    return entries


def load_env_file(file_path: Path) -> Entries:
    """
    Load a configuration file.

    Raises:
        ConfigError: missing or unreadable file, malformed line
    """
    file_path = Path(file_path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {file_path}: {e.strerror or e}") from e
    return parse_env_text(text, source=str(file_path))


def _field_of(key: str) -> Optional[str]:
    known = _KEYS_BY_NAME.get(key)
    return known.field_path if known else None


def _run_config_from_entries(entries: Entries, allow_sweep: bool) -> RunConfig:
    sections: Dict[str, Dict[str, object]] = {"scenario": {}, "grid": {}, "control": {}, "outputs": {}}

    for name, (value, line_num) in entries.items():
        if name in SWEEP_KEYS and allow_sweep:
            continue
        key = _KEYS_BY_NAME.get(name)
        if key is None:
            raise ConfigError(f"unknown key {name}", line=line_num)
        if value == "" and key.attribute in ("ratio_target", "c1", "c2", "t0"):
            continue
        try:
            sections[key.section][key.attribute] = key.parse(value)
        except ValueError:
            if key.parse is ScenarioKind:
                allowed = ", ".join(kind.value for kind in ScenarioKind)
                raise ConfigError(f"unknown scenario kind {value!r} (expected one of: {allowed})", key.field_path, line_num)
            raise ConfigError(f"invalid value {value!r}", key.field_path, line_num)

    config = RunConfig(
        scenario=ScenarioSpec(**sections["scenario"]),
        grid=GridConfig(**sections["grid"]),
        control=StepControl(**sections["control"]),
        outputs=OutputConfig(**sections["outputs"]),
    )
    _validate_run_config(config, entries)
    return config


def _fail(field_path: str, message: str, entries: Entries) -> None:
    key = _KEYS_BY_FIELD[field_path]
    line = entries[key.name][1] if key.name in entries else None
    raise ConfigError(message, field=field_path, line=line)


def _validate_run_config(config: RunConfig, entries: Entries) -> None:
    s, g, c, o = config.scenario, config.grid, config.control, config.outputs

    if s.kind in (ScenarioKind.POSITIVE_BUMP, ScenarioKind.MONOTONE_NEGATIVE):
        if not s.amplitude > 0:
            _fail("scenario.amplitude", f"must be > 0, got {s.amplitude}", entries)
        if not s.width > 0:
            _fail("scenario.width", f"must be > 0, got {s.width}", entries)
    if s.kind is ScenarioKind.CONCENTRATED_POSITIVE:
        if s.ratio_target is None:
            _fail("scenario.ratio_target", f"required for {s.kind.value}", entries)
        if not s.ratio_target > 0:
            _fail("scenario.ratio_target", f"must be > 0, got {s.ratio_target}", entries)
    if s.kind in (ScenarioKind.FAMILY_A_SEED, ScenarioKind.FAMILY_A_DATA):
        if s.c1 is None:
            _fail("scenario.c1", f"required for {s.kind.value}", entries)
        if s.c2 is None:
            _fail("scenario.c2", f"required for {s.kind.value}", entries)
        if not s.c1 > 0:
            _fail("scenario.c1", f"must be > 0, got {s.c1}", entries)
        if not s.c2 > s.c1:
            _fail("scenario.c2", f"must exceed scenario.c1 ({s.c2} <= {s.c1})", entries)
        if not 2 * s.c2 < g.r_max / 2:
            _fail("scenario.c2", f"2*c2 must be below r_max/2 = {g.r_max / 2}", entries)
        if s.t0 is not None and not s.t0 > 0:
            _fail("scenario.t0", f"must be > 0, got {s.t0}", entries)

    if not g.d >= 1:
        _fail("grid.d", f"must be >= 1, got {g.d}", entries)
    if not g.r_max > 0:
        _fail("grid.r_max", f"must be > 0, got {g.r_max}", entries)
    if not g.n >= MIN_NODES:
        _fail("grid.n", f"must be >= {MIN_NODES}, got {g.n}", entries)

    if not c.dt_min > 0:
        _fail("control.dt_min", f"must be > 0, got {c.dt_min}", entries)
    if not c.dt_init >= c.dt_min:
        _fail("control.dt_init", f"must be >= control.dt_min, got {c.dt_init}", entries)
    if not 0 < c.safety <= 1:
        _fail("control.safety", f"must lie in (0, 1], got {c.safety}", entries)
    if not c.blowup_threshold > 1:
        _fail("control.blowup_threshold", f"must be > 1, got {c.blowup_threshold}", entries)

    if not o.directory:
        _fail("outputs.directory", "must not be empty", entries)
    if o.snapshot_every < 0:
        _fail("outputs.snapshot_every", f"must be >= 0, got {o.snapshot_every}", entries)
    unknown = [fmt for fmt in o.formats if fmt not in SUPPORTED_FORMATS]
    if unknown:
        _fail("outputs.formats", f"unsupported format(s) {', '.join(unknown)}", entries)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse run-configuration text into a validated RunConfig."""
    return _run_config_from_entries(parse_env_text(text, source), allow_sweep=False)


def load_run_config(file_path: Path) -> RunConfig:
    """Load and validate a run configuration file."""
    config = _run_config_from_entries(load_env_file(file_path), allow_sweep=False)
    log_configuration(config, source=str(file_path))
    return config


def _parse_list(entries: Entries, name: str, parse: Callable[[str], object], fallback: tuple) -> tuple:
    if name not in entries:
        return fallback
    value, line_num = entries[name]
    try:
        return tuple(parse(item.strip()) for item in value.split(",") if item.strip())
    except ValueError:
        raise ConfigError(f"invalid list {value!r}", field=f"sweep.{name[len('SWEEP_'):].lower()}", line=line_num)


def parse_sweep_config(text: str, source: str = "<sweep>") -> SweepConfig:
    """
    Parse a sweep file: the base RunConfig plus SWEEP_* axes.

    An absent axis key falls back to the base value; a key with an empty
    value is an empty axis (and therefore an empty grid).
    """
    entries = parse_env_text(text, source)
    base = _run_config_from_entries(entries, allow_sweep=True)

    amplitudes = _parse_list(entries, ENV_SWEEP_AMPLITUDE, _parse_float, (base.scenario.amplitude,))
    widths = _parse_list(entries, ENV_SWEEP_WIDTH, _parse_float, (base.scenario.width,))
    dimensions = _parse_list(entries, ENV_SWEEP_DIMENSION, _parse_int, (base.grid.d,))

    workers = DEFAULT_SWEEP_WORKERS
    if ENV_SWEEP_WORKERS in entries:
        value, line_num = entries[ENV_SWEEP_WORKERS]
        try:
            workers = int(value)
        except ValueError:
            raise ConfigError(f"invalid value {value!r}", field="sweep.workers", line=line_num)
        if workers < 1:
            raise ConfigError(f"must be >= 1, got {workers}", field="sweep.workers", line=line_num)

    return SweepConfig(base=base, amplitudes=amplitudes, widths=widths, dimensions=dimensions, workers=workers)


def load_sweep_config(file_path: Path) -> SweepConfig:
    """Load and validate a sweep configuration file."""
    file_path = Path(file_path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {file_path}: {e.strerror or e}") from e
    return parse_sweep_config(text, source=str(file_path))


# ============================================================
# SERIALIZATION AND ENVIRONMENT
# ============================================================


def _format_value(value: object) -> str:
    if isinstance(value, ScenarioKind):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Canonical text form: every key on its own line; parse_config() inverts it."""
    lines = [f"# epflow {VERSION} run configuration"]
    for key in RUN_KEYS:
        value = getattr(getattr(config, key.section), key.attribute)
        if value is None:
            continue
        lines.append(f"{key.name}={_format_value(value)}")
    return "\n".join(lines) + "\n"


def config_echo(config: RunConfig) -> Dict[str, object]:
    """Nested JSON-ready view of the config for report.json."""
    echo: Dict[str, Dict[str, object]] = {}
    for key in RUN_KEYS:
        value = getattr(getattr(config, key.section), key.attribute)
        if isinstance(value, ScenarioKind):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        echo.setdefault(key.section, {})[key.attribute] = value
    return echo


def apply_env_overrides(config: RunConfig, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Apply EPFLOW_OUT to outputs.directory."""
    environ = os.environ if environ is None else environ
    directory = environ.get(ENV_EPFLOW_OUT)
    if not directory:
        return config
    logger.debug(f"{ENV_EPFLOW_OUT} overrides output directory: {directory}")
    return replace(config, outputs=replace(config.outputs, directory=directory))


def log_configuration(config: RunConfig, source: str = "") -> None:
    """Log the loaded configuration."""
    logger.info(f"Configuration loaded{' from ' + source if source else ''}:")
    for key in RUN_KEYS:
        value = getattr(getattr(config, key.section), key.attribute)
        if value is not None:
            logger.info(f"  {key.field_path}: {_format_value(value)}")
