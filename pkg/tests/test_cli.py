import json
import os

import pytest

from fcfp_ris.cli import main
from fcfp_ris.experiments import ExperimentSpec, run_experiment


@pytest.fixture
def cfg_file(tmp_path):
    def make(obj):
        p = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        p.write_text(json.dumps(obj))
        return str(p)
    return make


def test_validate_config_ok(cfg_file, capsys):
    assert main(["validate-config", cfg_file({})]) == 0
    assert "M=8 N=100 K=3" in capsys.readouterr().out
    assert main(["validate-config", cfg_file({}), "--desk"]) == 0


@pytest.mark.parametrize("bad", [
    {"noise_power": "-90"},
    {"bs_antennas": 2},
    {"experiment": {"sweep": []}},
    {"experiment": {"solver": "simplex"}},
    {"experiment": {"trials": 0}},
    {"experiment": {"bogus": 1}},
])
def test_validate_config_errors(cfg_file, bad, capsys):
    assert main(["validate-config", cfg_file(bad), "--experiment", "mse-vs-power"]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path):
    assert main(["validate-config", str(tmp_path / "nope.json")]) == 2
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert main(["validate-config", str(p)]) == 2


def test_bad_worker_env(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("FCFP_RIS_WORKERS", "many")
    assert main(["run", "bcrlb-vs-sinr", "--config", cfg_file({}), "--seed", "0", "--desk", "--out", str(tmp_path / "o")]) == 2


def _files(d):
    return sorted(f for f in os.listdir(d))


def test_run_is_deterministic_and_manifest_complete(cfg_file, tmp_path, capsys):
    cfg = cfg_file({"experiment": {"sweep": [-5, 0], "methods": ["cmlt"]}})
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["run", "bcrlb-vs-sinr", "--config", cfg, "--seed", "3", "--desk", "--out", str(o)]) == 0
    capsys.readouterr()
    for o in outs:
        man = json.loads((o / "manifest.json").read_text())
        listed = sorted(f["path"] for f in man["files"])
        assert listed + ["manifest.json"] == _files(o)
        assert {"bcrlb_vs_sinr.csv", "bcrlb_vs_sinr.svg"} <= set(listed)
        assert man["seed"] == 3 and man["desk"] and len(man["spec_hash"]) == 64
        assert {"fcfp_ris", "numpy", "scipy", "python"} <= set(man["versions"])
    assert (outs[0] / "bcrlb_vs_sinr.csv").read_bytes() == (outs[1] / "bcrlb_vs_sinr.csv").read_bytes()
    rows = (outs[0] / "bcrlb_vs_sinr.csv").read_text().splitlines()
    assert rows[0] == "sinr_threshold_db,method,bcrlb_deg2,status" and len(rows) == 3


def test_parallel_workers_match_sequential(tmp_path):
    opts = {"sweep": [-5, 0], "methods": ["cmlt"]}
    paths = []
    for w in (1, 2):
        spec = ExperimentSpec("bcrlb-vs-sinr", {}, 5, str(tmp_path / f"w{w}"), desk=True, plots=False, options=opts)
        status, _ = run_experiment(spec, workers=w)
        assert status == 0
        paths.append(tmp_path / f"w{w}" / "bcrlb_vs_sinr.csv")
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_infeasible_points_are_recorded(tmp_path):
    opts = {"sweep": [40], "methods": ["cmlt"]}
    spec = ExperimentSpec("bcrlb-vs-sinr", {}, 0, str(tmp_path / "inf"), desk=True, plots=False,
                          options={**opts, "solver_options": {"init_restarts": 1}})
    status, man = run_experiment(spec, workers=1)
    assert status == 3
    assert man["infeasible"] and (tmp_path / "inf" / "bcrlb_vs_sinr.csv").exists()
