import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from reduxsim.cli import main

import schemas


def run(argv, capsys=None):
    code = main(argv)
    out = capsys.readouterr() if capsys else None
    return code, out


def _load(path):
    return json.loads(path.read_text())


def test_simulate_observed_sequential(tmp_path):
    out = tmp_path / "log.json"
    assert main(["simulate", "--config", "observed_sequential", "--out", str(out)]) == 0
    log = _load(out)
    jsonschema.validate(log, schemas.SIMULATE)
    assert [h["code"] for h in log["hits"]] == ["01", "11"]
    assert [c["label"] for c in log["final_state"]] == ["D1B1_D1B1_"]


def test_simulate_round_trip(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["simulate", "--config", "mixed", "--seed", "42", "--out", str(a)])
    main(["simulate", "--config", "mixed", "--seed", "42", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_simulate_objective_dual(tmp_path):
    out = tmp_path / "log.json"
    assert main(["simulate", "--config", "objective_dual", "--out", str(out)]) == 0
    log = _load(out)
    jsonschema.validate(log, schemas.SIMULATE)
    assert len(log["hits"]) == 1 and log["hits"][0]["dual"]


def test_seed_env_fallback(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"currents": {"00->10": {"kind": "constant", "rate": 0.5}}, "t_end": 2.0}))
    monkeypatch.setenv("REDUXSIM_SEED", "9")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["simulate", "--config", str(cfg), "--out", str(a)])
    main(["simulate", "--config", str(cfg), "--seed", "9", "--out", str(b)])
    assert _load(a)["seed"] == 9
    assert _load(a)["hits"] == _load(b)["hits"]


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "mode": "observed",\n  "t_end": "later"\n}\n')
    code, out = run(["simulate", "--config", str(cfg)], capsys)
    assert code == 2
    assert f"{cfg}:3:" in out.err


def test_bad_seed_env_exit_2(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    monkeypatch.setenv("REDUXSIM_SEED", "abc")
    code, _ = run(["simulate", "--config", str(cfg)], capsys)
    assert code == 2


def test_step_guard_exit_3(tmp_path, capsys):
    cfg = tmp_path / "fast.json"
    cfg.write_text(json.dumps({"currents": {"00->10": {"kind": "constant", "rate": 20.0}}, "dt": 0.01}))
    code, out = run(["simulate", "--config", str(cfg)], capsys)
    assert code == 3 and "reduce dt" in out.err


def _csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"t", "x", "label"}
    return rows


def test_regionmap_hk_four_labels(tmp_path):
    out = tmp_path / "hk.csv"
    assert main(["regionmap", "--config", "regions_spacelike", "--grid=-12,12,-2,12,49,57",
                 "--out", str(out)]) == 0
    labels = {r["label"] for r in _csv(out)}
    assert labels == {"PreBoth", "PostAOnly", "PostBOnly", "PostBoth"}


def test_regionmap_hk_boundaries_are_light_cones(tmp_path):
    out = tmp_path / "hk.csv"
    main(["regionmap", "--config", "regions_single", "--grid=0,3,-2,4,31,61", "--out", str(out)])
    for r in _csv(out):
        t, x = float(r["t"]), float(r["x"])
        assert (r["label"] == "PostAOnly") == (t >= 1.0 - abs(x))


def test_regionmap_single_hit(tmp_path):
    out = tmp_path / "one.csv"
    main(["regionmap", "--config", "regions_single", "--out", str(out)])
    assert {r["label"] for r in _csv(out)} == {"PreBoth", "PostAOnly"}


def test_regionmap_aa_two_frames(tmp_path):
    out = tmp_path / "aa.csv"
    assert main(["regionmap", "--config", "aa_event_x", "--grid=-0.1,-0.1,0,0,1,1", "--out", str(out)]) == 0
    home = _csv(tmp_path / "aa_v+0.000.csv")
    moving = _csv(tmp_path / "aa_v+0.500.csv")
    assert home[0]["label"] == "PreBoth" and moving[0]["label"] == "PostBOnly"


def test_regionmap_missing_hits(tmp_path, capsys):
    code, out = run(["regionmap", "--config", "no_capture", "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 2 and "no hits" in out.err


def test_regionmap_from_simulated_run(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["regionmap", "--config", "observed_sequential", "--grid=0,3,-2,12,7,8",
                 "--out", str(out)]) == 0
    assert len(_csv(out)) == 56


def test_invariance_observed(tmp_path):
    out = tmp_path / "inv.json"
    assert main(["invariance", "--config", "observed_sequential", "--out", str(out)]) == 0
    rep = _load(out)
    jsonschema.validate(rep, schemas.INVARIANCE)
    assert rep["invariant"] is True and rep["count"] == 2


def test_invariance_objective_dual(tmp_path):
    out = tmp_path / "inv.json"
    main(["invariance", "--config", "objective_dual", "--out", str(out)])
    rep = _load(out)
    jsonschema.validate(rep, schemas.INVARIANCE)
    assert rep["invariant"] is False
    assert rep["anomalies"][0]["kind"] == "simultaneous dual capture"


def test_invariance_empty_frames(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"currents": {"00->10": {"kind": "constant", "rate": 0.5}}, "t_end": 3.0}))
    out = tmp_path / "inv.json"
    main(["invariance", "--config", str(cfg), "--seed", "1", "--out", str(out)])
    rep = _load(out)
    assert rep["frames"] == [0.0] and rep["invariant"] is True


def test_invariance_bad_frame(capsys):
    code, _ = run(["invariance", "--config", "observed_sequential", "--frame", "1.2"], capsys)
    assert code == 2


def test_ensemble_output(tmp_path):
    out = tmp_path / "ens.json"
    assert main(["ensemble", "--config", "ratio_2to1", "--runs", "5000", "--seed", "3", "--out", str(out)]) == 0
    rep = _load(out)
    jsonschema.validate(rep, schemas.ENSEMBLE)
    assert sum(rep["counts"].values()) == 5000
    assert rep["oracle"]["10"] == pytest.approx(2 * rep["oracle"]["01"])


def test_ensemble_objective_without_oracle(tmp_path):
    out = tmp_path / "ens.json"
    main(["ensemble", "--config", "objective_second_order", "--runs", "1000", "--out", str(out)])
    rep = _load(out)
    jsonschema.validate(rep, schemas.ENSEMBLE)
    assert rep["oracle"] is None


def test_ensemble_causality(tmp_path):
    out = tmp_path / "c.json"
    assert main(["ensemble", "--config", "causality", "--runs", "1", "--out", str(out)]) == 0
    rep = _load(out)
    jsonschema.validate(rep, schemas.CAUSALITY)
    assert rep["conclusive"] is False


def test_ensemble_runs_validated(capsys):
    code, _ = run(["ensemble", "--config", "symmetric", "--runs", "0"], capsys)
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "reduxsim", "simulate", "--config", "no_capture"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["hits"] == []
