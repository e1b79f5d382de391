"""End-to-end runs of every named experiment with reduced sweeps."""

import csv
import json

import numpy as np
import pytest

from fcfp_ris.experiments import ExperimentSpec, run_experiment, validate_experiment
from fcfp_ris.scenario import ConfigError


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _run(tmp_path, name, desk=True, **options):
    spec = ExperimentSpec(name, {}, 0, str(tmp_path / name), desk=desk, plots=True, options=options)
    status, man = run_experiment(spec, workers=1)
    listed = {f["path"] for f in man["files"]}
    assert listed | {"manifest.json"} == {p.name for p in (tmp_path / name).iterdir()}
    assert json.loads((tmp_path / name / "manifest.json").read_text())["experiment"] == name
    return status, tmp_path / name


def test_validate_rejects_bad_sweeps():
    with pytest.raises(ConfigError):
        validate_experiment("runtime-bench", {"sweep": [50]})
    with pytest.raises(ConfigError):
        validate_experiment("table2", {"sweep": [4]})
    with pytest.raises(ConfigError):
        validate_experiment("bcrlb-vs-rician", {"sweep": [-1]})
    with pytest.raises(ConfigError):
        validate_experiment("mse-vs-power", {"sweep": [float("nan")]})
    with pytest.raises(ConfigError):
        validate_experiment("nope", {})


def test_mse_vs_power_smoke(tmp_path):
    status, out = _run(tmp_path, "mse-vs-power", sweep=[15], trials=20)
    rows = _rows(out / "mse_vs_power.csv")
    assert status == 0 and {r["design"] for r in rows} == {"bcrlb", "crlb"}
    assert all(float(r["mse_deg2"]) > 0 and int(r["trials"]) == 20 for r in rows)


def test_bcrlb_vs_power_smoke(tmp_path):
    status, out = _run(tmp_path, "bcrlb-vs-power", sweep=[12, 18], methods=["cmlt"])
    b = [float(r["bcrlb_deg2"]) for r in _rows(out / "bcrlb_vs_power.csv")]
    assert status == 0 and b[1] < b[0]


def test_bcrlb_vs_rician_smoke(tmp_path):
    status, out = _run(tmp_path, "bcrlb-vs-rician", sweep=[0, 5])
    assert status == 0 and len(_rows(out / "bcrlb_vs_rician.csv")) == 2
    assert len(_rows(out / "rician_monotone.csv")) == 1


def test_runtime_bench_smoke(tmp_path):
    status, out = _run(tmp_path, "runtime-bench", sweep=[36])
    rows = _rows(out / "runtime_bench.csv")
    assert status == 0 and [r["method"] for r in rows] == ["cmlt", "pnqt"]
    assert all(float(r["per_iter_s"]) > 0 for r in rows)


def test_table2_smoke(tmp_path):
    status, out = _run(tmp_path, "table2", sweep=[1], realizations=1)
    runs = _rows(out / "table2_runs.csv")
    assert status == 0 and {r["method"] for r in runs} == {"cmlt", "pnqt", "ipga", "ao"}
    assert _rows(out / "table2_ordering.csv")[0]["realizations"] == "1"


def test_posterior_known_smoke(tmp_path):
    status, out = _run(tmp_path, "posterior-evolution", sweep=["known"], iterations=1)
    (row,) = _rows(out / "posterior_summary.csv")
    assert status == 0 and 0 <= float(row["mass_within_2deg"]) <= 1


@pytest.mark.slow
def test_beampattern_peaks_at_user_angles(tmp_path):
    # full-scale pattern: each communication combiner should peak within 2 deg of its user
    status, out = _run(tmp_path, "beampattern", desk=False, sweep=["uniform"])
    rows = _rows(out / "beampattern_uniform.csv")
    phi = np.array([float(r["phi_deg"]) for r in rows])
    peaks = [phi[np.argmax([float(r[f"Q_dB_user{k}"]) for r in rows])] for k in (1, 2, 3)]
    sense = phi[np.argmax([float(r["Q_dB_sensing"]) for r in rows])]
    assert status == 0 and 40 <= sense <= 80
    assert np.all(np.abs(np.array(peaks) - [110, 120, 130]) <= 2), f"peaks at {peaks}"
