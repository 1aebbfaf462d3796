"""Config parsing and artifact I/O: validation, determinism, round-trips."""

import json
import math
import os

import numpy as np
import pytest

from qkdv.config import RunConfig, parse_config
from qkdv.convergence import run_sweep
from qkdv.errors import ConfigurationError, IOFailureError
from qkdv.grid import Field, make_grid
from qkdv.io import (
    read_field_csv,
    write_errors_csv,
    write_field_csv,
    write_plot_script,
    write_report_json,
)


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestParseConfig:
    def test_minimal_file_fills_defaults(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, "[grid]\nL = 32\nN = 256\n"))
        assert cfg.L == 32.0 and cfg.N == 256
        assert cfg.H == 1.0 and cfg.order == 1
        assert cfg.epsilons == (0.1, 0.05, 0.025)

    def test_comments_and_inline_comments(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, (
            "# full-line comment\n"
            "[grid]\n"
            "L = 16  # inline comment\n"
            "N = 64\n")))
        assert cfg.L == 16.0 and cfg.N == 64

    def test_odd_N_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="N must be even"):
            parse_config(write_cfg(tmp_path, "[grid]\nN = 255\n"))

    def test_unknown_key_named(self, tmp_path):
        with pytest.raises(ConfigurationError, match="epsilonn"):
            parse_config(write_cfg(tmp_path, "[model]\nepsilonn = 0.1\n"))

    def test_unknown_section_named(self, tmp_path):
        with pytest.raises(ConfigurationError, match="mode1"):
            parse_config(write_cfg(tmp_path, "[mode1]\nH = 1\n"))

    def test_syntax_error_reports_line(self, tmp_path):
        with pytest.raises(ConfigurationError, match="line"):
            parse_config(write_cfg(tmp_path, "[grid]\nL 32\n"))

    def test_missing_file(self):
        with pytest.raises(IOFailureError):
            parse_config("/nonexistent/qkdv.cfg")

    def test_range_violations_name_key(self, tmp_path):
        cases = [
            ("[grid]\nL = -3\n", "L"),
            ("[model]\nepsilon = 2\n", "epsilon"),
            ("[model]\nepsilons = 0.05, 0.1\n", "epsilons"),
            ("[run]\ntau = 0\n", "tau"),
            ("[run]\norder = 3\n", "order"),
            ("[dispersion]\nk_mode = 0\n", "k_mode"),
        ]
        for text, key in cases:
            with pytest.raises(ConfigurationError, match=key):
                parse_config(write_cfg(tmp_path, text))

    def test_nonexistent_initial_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="does not exist"):
            parse_config(write_cfg(
                tmp_path, "[initial]\nprofile = csv\npath = nothere.csv\n"))

    def test_csv_profile_requires_path(self, tmp_path):
        with pytest.raises(ConfigurationError, match="path"):
            parse_config(write_cfg(tmp_path, "[initial]\nprofile = csv\n"))

    def test_relative_paths_resolve_next_to_config(self, tmp_path):
        g = make_grid(2.0 * math.pi, 64)
        write_field_csv(str(tmp_path / "init.csv"), Field(g, np.sin(g.x)))
        cfg = parse_config(write_cfg(
            tmp_path, "[initial]\nprofile = csv\npath = init.csv\n"))
        assert os.path.isabs(cfg.path)

    def test_frame_validation(self, tmp_path):
        with pytest.raises(ConfigurationError, match="frame"):
            parse_config(write_cfg(tmp_path, "[model]\nframe = galilean\n"))


class TestFieldCSV:
    def test_round_trip_exact(self, tmp_path):
        g = make_grid(7.5, 64)
        f = Field(g, np.sin(2.0 * math.pi * g.x / 7.5) * 1.0 / 3.0)
        path = str(tmp_path / "f.csv")
        write_field_csv(path, f)
        back = read_field_csv(path)
        assert back.grid.N == 64
        assert back.grid.L == pytest.approx(7.5, rel=1e-12)
        assert np.array_equal(back.samples, f.samples)  # 17 digits: exact

    def test_rejects_nonuniform(self, tmp_path):
        path = str(tmp_path / "bad.csv")
        rows = ["x,value"] + [f"{x},{0.0}" for x in
                              [0.0, 0.1, 0.2, 0.35, 0.4, 0.5, 0.6, 0.7]]
        (tmp_path / "bad.csv").write_text("\n".join(rows))
        with pytest.raises(IOFailureError):
            read_field_csv(path)

    def test_deterministic_bytes(self, tmp_path):
        g = make_grid(2.0 * math.pi, 64)
        f = Field(g, np.cos(g.x) / 7.0)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        write_field_csv(p1, f)
        write_field_csv(p2, f)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_atomic_no_partial_file_on_failure(self, tmp_path):
        # writing into a nonexistent, uncreatable location fails cleanly
        with pytest.raises(IOFailureError):
            write_field_csv("/proc/qkdv-cannot-write/f.csv",
                            Field.zeros(make_grid(1.0, 8)))


@pytest.fixture(scope="module")
def report():
    g = make_grid(32.0, 128)
    n1 = Field(g, 0.1 * np.cos(2.0 * math.pi * g.x / 32.0))
    return run_sweep((0.1, 0.05, 0.025), 0.5, n1, 1.0, n_samples=2,
                     kdv_dt=5e-3)


class TestReportArtifacts:

    def test_report_json_schema(self, tmp_path, report):
        path = str(tmp_path / "report.json")
        write_report_json(path, report)
        data = json.loads(open(path).read())
        assert data["epsilons"] == [0.1, 0.05, 0.025]
        assert len(data["sup_errors"]) == 3
        assert isinstance(data["fitted_slope"], float)
        assert isinstance(data["fit_residual"], float)
        assert len(data["per_epsilon"]) == 3
        assert data["per_epsilon"][0]["ok"] is True
        assert data["config"]["N"] == 128

    def test_errors_csv_two_columns(self, tmp_path, report):
        path = str(tmp_path / "errors.csv")
        write_errors_csv(path, report)
        lines = open(path).read().strip().split("\n")
        assert lines[0] == "epsilon,sup_h2_error"
        assert len(lines) == 4
        eps, err = lines[1].split(",")
        assert float(eps) == 0.1 and float(err) > 0

    def test_plot_script_references_data(self, tmp_path, report):
        path = str(tmp_path / "plot.gp")
        write_plot_script(path, "errors.csv", report.fitted_slope)
        text = open(path).read()
        assert "errors.csv" in text and "logscale" in text

    def test_json_deterministic(self, tmp_path, report):
        p1, p2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
        write_report_json(p1, report)
        write_report_json(p2, report)
        assert open(p1, "rb").read() == open(p2, "rb").read()
