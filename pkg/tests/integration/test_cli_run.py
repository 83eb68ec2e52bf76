"""
Test di integrazione: `iosuav run`, `validate` e `init-config` end-to-end
su uno scenario ridotto.
"""

import csv
import json

import pytest
import yaml

from iosuav.config.settings import load_config
from iosuav.interfaces.cli import IosUavCLI

TINY_SCENE = {
    "uav_start": [-120.0, 20.0],
    "uav_end": [120.0, 20.0],
    "n_slots": 12,
    "n_elements": 4,
    "ground_node": [-40.0, -10.0],
    "experiment": {"mc_draws": 32, "max_alternations": 2},
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY_SCENE), encoding="utf-8")
    return path


def run_cli(*args) -> int:
    return IosUavCLI().run(list(args))


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# iosuav seed=")
    return list(csv.DictReader(lines[1:]))


@pytest.mark.integration
class TestRunCommand:

    def test_all_schemes(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("run", "-q", "--config", str(tiny_config), "--seed", "7", "--out", str(out)) == 0

        rates = read_csv(out / "rates.csv")
        assert [r["scheme"] for r in rates] == ["IA", "RA", "IA-FT", "CUC"]
        assert {r["sweep_value"] for r in rates} == {"12"}
        by_scheme = {r["scheme"]: float(r["det_rate"]) for r in rates}
        assert all(by_scheme["IA"] >= v - 1e-8 for v in by_scheme.values())

        trajectory = read_csv(out / "trajectory.csv")
        assert len(trajectory) == 4 * 12
        assert (out / "convergence.csv").exists()

        document = json.loads((out / "result_IA_12.json").read_text(encoding="utf-8"))
        assert document["seed"] == 7
        assert len(document["trajectory"]) == 12

    def test_output_is_deterministic(self, tiny_config, tmp_path):
        common = ["run", "-q", "--config", str(tiny_config), "--seed", "3", "--sweep-t", "12,14"]
        assert run_cli(*common, "--out", str(tmp_path / "a"), "--workers", "1") == 0
        assert run_cli(*common, "--out", str(tmp_path / "b"), "--workers", "2") == 0
        for name in ("rates.csv", "trajectory.csv", "convergence.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    @pytest.mark.slow
    def test_time_sweep(self, tiny_config, tmp_path):
        out = tmp_path / "sweep"
        assert run_cli("run", "-q", "--config", str(tiny_config), "--sweep-t", "12,14,16",
                       "--schemes", "IA,RA,IA-FT,CUC", "--out", str(out)) == 0
        rates = read_csv(out / "rates.csv")
        assert len(rates) == 12
        assert [r["sweep_value"] for r in rates[::4]] == ["12", "14", "16"]
        trajectory = read_csv(out / "trajectory.csv")
        assert len(trajectory) == 4 * (12 + 14 + 16)

    def test_element_sweep_with_phases(self, tiny_config, tmp_path):
        out = tmp_path / "sweep_m"
        assert run_cli("run", "-q", "--config", str(tiny_config), "--sweep-m", "1,4",
                       "--schemes", "IA,CUC", "--export-phases", "--out", str(out)) == 0
        rates = read_csv(out / "rates.csv")
        assert [(r["scheme"], r["sweep_value"]) for r in rates] == [
            ("IA", "1"), ("CUC", "1"), ("IA", "4"), ("CUC", "4")]
        phases = read_csv(out / "phases_IA_4.csv")
        assert len(phases) == 12 * 4
        assert not (out / "phases_CUC_4.csv").exists()

    def test_infeasible_cell(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "bad"
        code = run_cli("run", "-q", "--config", str(tiny_config), "--sweep-t", "8", "--out", str(out))
        assert code == 1
        assert "error:" in capsys.readouterr().err
        assert not (out / "rates.csv").exists()


@pytest.mark.integration
class TestOtherCommands:

    def test_init_config_roundtrip(self, tmp_path):
        path = tmp_path / "config.yaml"
        assert run_cli("init-config", "-q", str(path)) == 0
        cfg, settings = load_config(str(path), "desk")
        assert cfg.n_slots == 50
        assert cfg.n_elements == 64
        assert cfg.epsilon == 3.55
        assert settings.mc_draws == 1000
        assert run_cli("init-config", "-q", str(path)) == 1

    @pytest.mark.slow
    def test_validate_fast(self, capsys):
        assert run_cli("validate", "-q", "--level", "fast") == 0
        assert "6/6 checks passed" in capsys.readouterr().out
