"""
Test unitari per la scrittura dei file di risultato.
"""

import csv
import json
import math

import numpy as np
import pytest

from iosuav.models.optimization_result import ConvergenceReport, SchemeResult
from iosuav.models.trajectory import PhaseSchedule, Trajectory
from iosuav.utils import reports


def make_result(scheme: str = "IA", n: int = 3, m: int = 2) -> SchemeResult:
    trace = ConvergenceReport(converged=True, stop_reason="tolerance")
    trace.add(0, 1.5, 0.0, 0)
    trace.add(1, 1.75, 12.5, 40)
    return SchemeResult(
        scheme=scheme,
        trajectory=Trajectory(np.column_stack([np.linspace(-10.0, 10.0, n), np.full(n, 20.0)])),
        phases=PhaseSchedule(np.full((n, m), 0.5)),
        det_rate=1.75, mc_rate=1.7, mc_half_width=0.01,
        trace=trace, seed=42, warm_start="straight",
    )


def read_rows(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0], list(csv.reader(lines[1:]))


@pytest.mark.unit
class TestFormatting:

    def test_fmt(self):
        assert reports.fmt(3) == "3"
        assert reports.fmt(True) == "1"
        assert reports.fmt(0.1) == "0.1"
        assert reports.fmt(1.0 / 3.0) == "0.333333333333"
        assert reports.fmt(60.0) == "60"
        assert reports.fmt("IA-FT") == "IA-FT"

    def test_sweep_tag(self):
        assert reports.sweep_tag(60.0) == "60"
        assert reports.sweep_tag(2.5) == "2p5"
        assert reports.sweep_tag(-1.0) == "m1"

    def test_header_comment(self):
        assert reports.header_comment(7, "desk") == "# iosuav seed=7 profile=desk"


@pytest.mark.unit
class TestWriters:

    def setup_method(self):
        self.cells = [(60.0, make_result("IA")), (60.0, make_result("CUC", m=0))]

    def test_rates_csv(self, tmp_path):
        path = reports.write_rates_csv(tmp_path / "rates.csv", self.cells, 7, "desk")
        header, rows = read_rows(path)
        assert header == "# iosuav seed=7 profile=desk"
        assert tuple(rows[0]) == reports.RATES_COLUMNS
        assert rows[1] == ["IA", "60", "1.75", "1.7", "0.01"]
        assert [r[0] for r in rows[1:]] == ["IA", "CUC"]

    def test_trajectory_csv(self, tmp_path):
        path = reports.write_trajectory_csv(tmp_path / "trajectory.csv", self.cells, 7, "desk")
        _, rows = read_rows(path)
        assert tuple(rows[0]) == reports.TRAJECTORY_COLUMNS
        assert len(rows) == 1 + 2 * 3
        assert tuple(rows[0][:4]) == ("scheme", "n", "x", "y")
        assert rows[1] == ["IA", "0", "-10", "20", "60"]

    def test_convergence_csv(self, tmp_path):
        path = reports.write_convergence_csv(tmp_path / "convergence.csv", self.cells, 7, "desk")
        _, rows = read_rows(path)
        assert tuple(rows[0]) == reports.CONVERGENCE_COLUMNS
        assert rows[2] == ["IA", "60", "1", "1.75", "12.5", "40"]

    def test_result_json(self, tmp_path):
        path = reports.write_result_json(tmp_path, 60.0, self.cells[0][1], "desk")
        assert path.name == "result_IA_60.json"
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["profile"] == "desk"
        assert data["seed"] == 42
        assert data["trace"]["iterations"] == 1
        assert len(data["trajectory"]) == 3

    def test_result_json_is_strict_with_infinite_values(self, tmp_path):
        result = make_result("IA")
        result.mc_half_width = math.inf
        result.params = {"rician_k": math.inf, "n_slots": 3}
        path = reports.write_result_json(tmp_path, 60.0, result, "desk")
        text = path.read_text(encoding="utf-8")
        assert "Infinity" not in text and "NaN" not in text
        data = json.loads(text, parse_constant=lambda name: pytest.fail(f"non-standard constant {name}"))
        assert data["mc_half_width"] is None
        assert data["params"] == {"rician_k": None, "n_slots": 3}
        assert data["det_rate"] == 1.75

    def test_experiment_files(self, tmp_path):
        written = reports.write_experiment(tmp_path, self.cells, 7, "desk", export_phases=True)
        names = sorted(p.name for p in written)
        assert "rates.csv" in names and "convergence.csv" in names
        assert "phases_IA_60.csv" in names
        assert "phases_CUC_60.csv" not in names
        _, rows = read_rows(tmp_path / "phases_IA_60.csv")
        assert tuple(rows[0]) == reports.PHASES_COLUMNS
        assert len(rows) == 1 + 3 * 2

    def test_no_phases_by_default(self, tmp_path):
        written = reports.write_experiment(tmp_path, self.cells, 7, "desk")
        assert not any(p.name.startswith("phases_") for p in written)
