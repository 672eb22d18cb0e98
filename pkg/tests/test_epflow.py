"""End-to-end tests of the epflow command line and its artifacts."""

import csv
import json
import math

import numpy as np
import pytest

import epflow
from common_utils import atomic_write_text, format_number, grid_hash
from config import VERSION, config_echo, load_run_config
from diagnostics import DiagnosticsRecord
from epflow import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from errors import ConfigError
from outputs import REPORT_FILE, SERIES_FILE, SNAPSHOT_DIR, csv_text, prepare_output_dir


def write_config(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body)
    return path


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


@pytest.fixture
def zero_config(tmp_path):
    out = tmp_path / "out"
    body = f"SCENARIO_KIND=ZeroData\nGRID_NODES=64\nCONTROL_HORIZON=0.1\nOUTPUT_DIR={out}\n"
    return write_config(tmp_path, "zero.env", body), out


class TestFormatting:
    @pytest.mark.parametrize(
        "value, text",
        [(0.1, "0.10000000000000001"), (1.0, "1"), (-2.5, "-2.5"), (1e22, "1e+22"), (3, "3"),
         (True, "1"), (False, "0"), (None, ""), (float("nan"), "nan"), (float("inf"), "inf")],
    )
    def test_format_number(self, value, text):
        assert format_number(value) == text

    def test_format_number_round_trips(self):
        for value in (math.pi, 1e-300, -123456.789, 2.0**-40):
            assert float(format_number(value)) == value

    def test_csv_text(self):
        text = csv_text(("t", "name", "flag"), [(0.5, "a,b", False), (1.0, "c", True)])
        assert text == 't,name,flag\n0.5,"a,b",0\n1,c,1\n'

    def test_atomic_write_creates_parents(self, tmp_path):
        path = tmp_path / "a" / "b" / "file.txt"
        atomic_write_text(path, "x\ny\n")
        assert path.read_bytes() == b"x\ny\n"
        assert [p.name for p in path.parent.iterdir()] == ["file.txt"]

    def test_grid_hash_depends_on_grid(self):
        nodes = np.linspace(0.0, 10.0, 64)
        first = grid_hash(3, 64, 10.0, nodes)
        assert first == grid_hash(3, 64, 10.0, nodes.copy())
        assert first != grid_hash(2, 64, 10.0, nodes)
        assert len(first) == 64

    def test_prepare_output_dir_rejects_files(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(ConfigError) as excinfo:
            prepare_output_dir(blocker / "out")
        assert excinfo.value.field == "outputs.directory"


class TestSimulate:
    def test_zero_data_run(self, zero_config):
        path, out = zero_config
        assert main(["simulate", str(path)]) == EXIT_OK

        rows = read_rows(out / SERIES_FILE)
        header = rows[0]
        assert header == DiagnosticsRecord.columns()
        phi0 = header.index("phi0")
        assert len(rows) > 2
        assert all(float(row[phi0]) == 0.0 for row in rows[1:])
        assert b"\r" not in (out / SERIES_FILE).read_bytes()

        report = json.loads((out / REPORT_FILE).read_text())
        assert report["version"] == VERSION
        assert len(report["grid_hash"]) == 64
        assert report["termination"]["reason"] == "HorizonReached"
        assert report["termination"]["t_star_estimate"] is None
        assert report["config"] == config_echo(load_run_config(path))

        snapshots = sorted((out / SNAPSHOT_DIR).glob("snapshot_*.csv"))
        assert snapshots
        assert read_rows(snapshots[0])[0] == ["r", "phi", "g"]
        assert len(read_rows(snapshots[0])) == 65

    def test_epflow_out_overrides_directory(self, zero_config, tmp_path, monkeypatch):
        path, out = zero_config
        override = tmp_path / "override"
        monkeypatch.setenv("EPFLOW_OUT", str(override))
        assert main(["simulate", str(path)]) == EXIT_OK
        assert (override / SERIES_FILE).exists()
        assert not out.exists()

    def test_json_only(self, tmp_path):
        out = tmp_path / "out"
        body = f"SCENARIO_KIND=ZeroData\nGRID_NODES=64\nCONTROL_HORIZON=0.05\nOUTPUT_DIR={out}\nOUTPUT_FORMATS=json\n"
        assert main(["simulate", str(write_config(tmp_path, "json.env", body))]) == EXIT_OK
        assert (out / REPORT_FILE).exists()
        assert not (out / SERIES_FILE).exists()

    def test_blowup_run(self, tmp_path):
        out = tmp_path / "out"
        body = f"SCENARIO_KIND=PositiveBump\nGRID_R_MAX=10\nGRID_NODES=256\nOUTPUT_DIR={out}\nOUTPUT_FORMATS=json\n"
        assert main(["simulate", str(write_config(tmp_path, "bump.env", body))]) == EXIT_OK
        termination = json.loads((out / REPORT_FILE).read_text())["termination"]
        assert termination["reason"] == "BlowupDetected"
        assert 2.2 < termination["t_star_estimate"]["value"] < 2.7

    def test_output_is_bit_stable(self, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            body = f"GRID_R_MAX=10\nGRID_NODES=64\nCONTROL_HORIZON=0.2\nOUTPUT_DIR={out}\n"
            assert main(["simulate", str(write_config(tmp_path, f"{name}.env", body))]) == EXIT_OK
            outputs.append((out / SERIES_FILE).read_bytes())
        assert outputs[0] == outputs[1]

    def test_invalid_config_exits_1(self, tmp_path):
        body = "SCENARIO_KIND=FamilyAData\nSCENARIO_C1=2\nSCENARIO_C2=1\n"
        assert main(["simulate", str(write_config(tmp_path, "bad.env", body))]) == EXIT_CONFIG

    def test_missing_config_exits_1(self, tmp_path):
        assert main(["simulate", str(tmp_path / "absent.env")]) == EXIT_CONFIG

    def test_step_underflow_exits_2(self, tmp_path):
        out = tmp_path / "out"
        body = (
            f"GRID_R_MAX=10\nGRID_NODES=64\nCONTROL_DT_INIT=0.01\nCONTROL_DT_MIN=0.01\n"
            f"OUTPUT_DIR={out}\n"
        )
        assert main(["simulate", str(write_config(tmp_path, "underflow.env", body))]) == EXIT_NUMERICAL
        termination = json.loads((out / REPORT_FILE).read_text())["termination"]
        assert termination["reason"] == "StepUnderflow"

    def test_unwritable_output_exits_1(self, zero_config, monkeypatch, caplog):
        path, _ = zero_config

        def refuse(*args, **kwargs):
            raise PermissionError("read-only file system")

        monkeypatch.setattr(epflow, "write_run", refuse)
        assert main(["simulate", str(path)]) == EXIT_CONFIG
        assert "Could not write run outputs" in caplog.text


class TestOtherCommands:
    def test_no_command_exits_1(self):
        assert main([]) == EXIT_CONFIG

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert VERSION in capsys.readouterr().out

    def test_unknown_subcommand_exits_1(self):
        assert main(["explode"]) == EXIT_CONFIG

    def test_unknown_suite_exits_1(self):
        assert main(["verify", "no-such-suite"]) == EXIT_CONFIG

    def test_constructive_suite_passes(self):
        assert main(["verify", "remark23"]) == EXIT_OK

    def test_oracle_check_passes(self):
        assert main(["oracle-check"]) == EXIT_OK
