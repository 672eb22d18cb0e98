"""Tests for run and sweep configuration parsing."""

from pathlib import Path

import pytest

from config import (
    GridConfig,
    OutputConfig,
    RunConfig,
    apply_env_overrides,
    config_echo,
    load_run_config,
    parse_config,
    parse_env_text,
    parse_sweep_config,
    serialize_config,
)
from dynamics import StepControl
from errors import ConfigError
from scenarios import ScenarioKind, ScenarioSpec


class TestParseEnvText:
    def test_comments_and_blank_lines(self):
        entries = parse_env_text("# header\n\nGRID_NODES=512\n  # indented comment\nGRID_R_MAX = 10\n")
        assert entries == {"GRID_NODES": ("512", 3), "GRID_R_MAX": ("10", 5)}

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_env_text("GRID_NODES=512\nnot a key value pair\n")
        assert excinfo.value.line == 2

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_env_text("GRID_NODES=512\nGRID_NODES=1024\n")
        assert excinfo.value.line == 2
        assert excinfo.value.field == "grid.n"


class TestParseConfig:
    def test_defaults(self):
        config = parse_config("SCENARIO_KIND=PositiveBump\n")
        assert config.scenario == ScenarioSpec()
        assert config.grid == GridConfig()
        assert config.control == StepControl()
        assert config.outputs == OutputConfig()

    def test_full_round_trip(self):
        config = RunConfig(
            scenario=ScenarioSpec(kind=ScenarioKind.FAMILY_A_DATA, c1=1.0, c2=2.0, t0=0.025),
            grid=GridConfig(d=2, r_max=15.5, n=1000),
            control=StepControl(dt_init=0.002, dt_min=1e-6, safety=0.25, blowup_threshold=500.0, horizon=-0.1),
            outputs=OutputConfig(directory="out/run 1", snapshot_every=7, formats=("json",)),
        )
        assert parse_config(serialize_config(config)) == config

    def test_round_trip_of_defaults(self):
        assert parse_config(serialize_config(RunConfig())) == RunConfig()

    def test_c1_above_c2_names_field_and_line(self):
        text = "SCENARIO_KIND=FamilyAData\nSCENARIO_C1=2\nSCENARIO_C2=1\n"
        with pytest.raises(ConfigError) as excinfo:
            parse_config(text)
        assert excinfo.value.field == "scenario.c2"
        assert excinfo.value.line == 3
        assert "scenario.c2" in str(excinfo.value)

    def test_invalid_number(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("GRID_R_MAX=ten\n")
        assert excinfo.value.field == "grid.r_max"
        assert excinfo.value.line == 1

    def test_non_finite_number(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("CONTROL_HORIZON=inf\n")
        assert excinfo.value.field == "control.horizon"

    def test_unknown_kind_lists_kinds(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("SCENARIO_KIND=Tsunami\n")
        assert excinfo.value.field == "scenario.kind"
        assert "MonotoneNegative" in str(excinfo.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("GRID_NODES=512\nGRID_SPACING=0.1\n")
        assert excinfo.value.line == 2

    def test_sweep_keys_are_rejected_in_run_files(self):
        with pytest.raises(ConfigError):
            parse_config("SWEEP_AMPLITUDE=1,2\n")

    @pytest.mark.parametrize(
        "text, field",
        [
            ("GRID_NODES=8\n", "grid.n"),
            ("GRID_DIMENSION=0\n", "grid.d"),
            ("CONTROL_SAFETY=1.5\n", "control.safety"),
            ("CONTROL_DT_INIT=1e-7\n", "control.dt_init"),
            ("SCENARIO_WIDTH=-1\n", "scenario.width"),
            ("SCENARIO_KIND=ConcentratedPositive\n", "scenario.ratio_target"),
            ("OUTPUT_FORMATS=csv,xml\n", "outputs.formats"),
            ("SCENARIO_KIND=FamilyASeed\nSCENARIO_C1=1\nSCENARIO_C2=6\n", "scenario.c2"),
        ],
    )
    def test_validation_names_field(self, text, field):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(text)
        assert excinfo.value.field == field

    def test_empty_optional_value_is_unset(self):
        config = parse_config("SCENARIO_KIND=FamilyAData\nSCENARIO_C1=1\nSCENARIO_C2=2\nSCENARIO_T0=\n")
        assert config.scenario.t0 is None

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "absent.env")

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("SCENARIO_KIND=ZeroData\nGRID_NODES=64\n")
        config = load_run_config(path)
        assert config.scenario.kind is ScenarioKind.ZERO_DATA
        assert config.grid.n == 64


class TestEchoAndOverrides:
    def test_config_echo(self):
        echo = config_echo(RunConfig())
        assert echo["scenario"]["kind"] == "PositiveBump"
        assert echo["grid"] == {"d": 3, "r_max": 20.0, "n": 2048}
        assert echo["outputs"]["formats"] == ["csv", "json"]
        assert echo["scenario"]["t0"] is None

    def test_epflow_out_override(self):
        config = apply_env_overrides(RunConfig(), {"EPFLOW_OUT": "/tmp/elsewhere"})
        assert config.outputs.directory == "/tmp/elsewhere"

    def test_no_override(self):
        assert apply_env_overrides(RunConfig(), {}) == RunConfig()


class TestSweepConfig:
    def test_axes(self):
        sweep = parse_sweep_config("GRID_NODES=128\nSWEEP_AMPLITUDE=-1,0.5, 1\nSWEEP_DIMENSION=2,3\nSWEEP_WORKERS=2\n")
        assert sweep.amplitudes == (-1.0, 0.5, 1.0)
        assert sweep.widths == (1.0,)
        assert sweep.dimensions == (2, 3)
        assert sweep.workers == 2
        assert sweep.base.grid.n == 128

    def test_empty_axis(self):
        sweep = parse_sweep_config("SWEEP_AMPLITUDE=\n")
        assert sweep.amplitudes == ()

    def test_invalid_axis(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_sweep_config("SWEEP_WIDTH=1,wide\n")
        assert excinfo.value.field == "sweep.width"
        assert excinfo.value.line == 1

    def test_invalid_workers(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_sweep_config("SWEEP_WORKERS=0\n")
        assert excinfo.value.field == "sweep.workers"

    def test_shipped_configs_parse(self):
        configs = Path(__file__).resolve().parent.parent / "configs"
        for path in sorted(configs.glob("*.env")):
            if path.name.startswith("sweep"):
                continue
            load_run_config(path)
        parse_sweep_config((configs / "sweep.env").read_text())
