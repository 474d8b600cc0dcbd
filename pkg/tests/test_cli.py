import json

import numpy as np
import pytest

from structured_harvest import cli, runs
from structured_harvest.config import RunConfig, SweepSpec, config_from_dict
from structured_harvest.io import read_csv


def run(argv, capsys=None):
    code = cli.main(argv)
    return code


def load(path):
    return json.loads(path.read_text())


def write_cfg(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_steady_default(tmp_path):
    assert run(["steady", "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "steady_summary.json")
    assert s["E_star"] == pytest.approx(103108.17, rel=5e-3)
    assert s["N_star"] == pytest.approx(237004.87, rel=5e-3)
    assert s["R_at_E_star"] == pytest.approx(1.474679, rel=1e-3)
    prof = read_csv(tmp_path / "steady_profile.csv")
    assert list(prof) == ["l", "x"] and prof["l"].size == 401
    assert list(read_csv(tmp_path / "closure_curve.csv")) == ["E", "F"]


def test_steady_zero_inflow(tmp_path):
    cfg = write_cfg(tmp_path, {"params": {"p": 0.0}})
    assert run(["steady", "--config", cfg, "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "steady_summary.json")
    assert s["E_star"] == 0.0 and s["warnings"]


def test_steady_refined_grid(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["steady", "--out", str(a)])
    run(["steady", "--out", str(b), "--cells", "800"])
    sa, sb = load(a / "steady_summary.json"), load(b / "steady_summary.json")
    for key in ("E_star", "N_star", "R_at_E_star"):
        assert sb[key] == pytest.approx(sa[key], rel=1e-2)
    assert sb["n_cells"] == 800


def test_replacement_default(tmp_path):
    assert run(["replacement", "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "replacement_summary.json")
    assert s["E_crit"] == pytest.approx(179008.21, rel=5e-3)
    curve = read_csv(tmp_path / "replacement_curve.csv")
    assert np.all(np.diff(curve["R"]) < 0)
    assert np.any(np.isclose(curve["E"], s["E_crit"], rtol=0, atol=0))
    assert np.any(np.isclose(curve["E"], s["E_star"], rtol=0, atol=0))


def test_replacement_without_fertility(tmp_path):
    cfg = write_cfg(tmp_path, {"params": {"m0": 0.0}})
    assert run(["replacement", "--config", cfg, "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "replacement_summary.json")
    assert s["E_crit"] is None
    assert not read_csv(tmp_path / "replacement_curve.csv")["R"].any()


def test_simulate_threshold_40(tmp_path):
    assert run(["simulate", "--threshold", "40", "--out", str(tmp_path), "--snapshot", "5"]) == 0
    s = load(tmp_path / "trajectory_l40.json")
    assert s["conv_time_E"] == pytest.approx(9.75, abs=1)
    assert s["conv_time_N"] == pytest.approx(7.76, abs=1)
    traj = read_csv(tmp_path / "trajectory_l40.csv")
    assert list(traj) == ["t", "E", "N", "harvest_value_rate"]
    snaps = list(tmp_path.glob("trajectory_l40_snapshot_*.csv"))
    assert len(snaps) == 1 and list(read_csv(snaps[0])) == ["l", "x"]


def test_simulate_no_policy_flat(tmp_path):
    assert run(["simulate", "--out", str(tmp_path), "--horizon", "10"]) == 0
    E = read_csv(tmp_path / "trajectory.csv")["E"]
    assert np.ptp(E) / E[0] < 1e-6


def test_simulate_threshold_80(tmp_path):
    run(["simulate", "--threshold", "80", "--out", str(tmp_path)])
    assert load(tmp_path / "trajectory_l80.json")["E_terminal"] == pytest.approx(60697.30, rel=1e-2)


def test_sweep_restricted_boundary(tmp_path):
    assert run(["sweep", "--start", "100", "--stop", "130", "--step", "10", "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "optimum.json")
    assert s["coarse_argmax"] == 100.0
    assert any("boundary" in w for w in s["warnings"])
    rows = read_csv(tmp_path / "sweep.csv")
    assert list(rows) == ["l_star", "J_T", "E_terminal", "N_terminal", "R_terminal", "viable",
                          "conv_time_E", "conv_time_N"]


def test_sweep_byte_identical(tmp_path):
    args = ["sweep", "--start", "60", "--stop", "66", "--step", "3"]
    run(args + ["--out", str(tmp_path / "a")])
    run(args + ["--out", str(tmp_path / "b"), "--jobs", "2"])
    for name in ("sweep.csv", "optimum.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_adjoint_without_harvest(tmp_path):
    assert run(["adjoint", "--threshold", "130", "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "switching.json")
    assert s["case"] == "all-harvest"
    data = read_csv(tmp_path / "adjoint.csv")
    assert list(data) == ["l", "lambda", "S"]
    assert not data["lambda"].any()
    assert np.allclose(data["S"], 1e-5 * data["l"] ** 3)


def test_adjoint_default(tmp_path):
    assert run(["adjoint", "--threshold", "66.45", "--out", str(tmp_path)]) == 0
    s = load(tmp_path / "switching.json")
    assert {"case", "adjoint_l_star", "weak_coupling_ratio", "monotone_S"} <= set(s)
    assert s["case"] == "threshold" and 20 < s["adjoint_l_star"] < 130


def test_adjoint_no_density_dependence(tmp_path):
    cfg = write_cfg(tmp_path, {"params": {"alpha": 0.0, "mu1": 0.0}})
    assert run(["adjoint", "--threshold", "66.45", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert load(tmp_path / "switching.json")["weak_coupling_ratio"] == 0.0


def test_validation_exit(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"params": {"L_inf": 130.0, "K": -1}})
    assert run(["steady", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "L_inf" in err and "K must be strictly positive" in err


def test_unknown_config_key(tmp_path):
    cfg = write_cfg(tmp_path, {"nonsense": 1})
    assert run(["steady", "--config", cfg]) == cli.EXIT_VALIDATION


def test_cfl_failure_exit(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"params": {"u_max": 200.0}})
    code = run(["simulate", "--threshold", "20", "--config", cfg, "--out", str(tmp_path)])
    assert code == cli.EXIT_NUMERICAL
    assert "max g" in capsys.readouterr().err


def test_jobs_from_env(monkeypatch):
    monkeypatch.setenv("STRUCTURED_HARVEST_JOBS", "3")
    assert cli._jobs(None) == 3
    assert cli._jobs(2) == 2
    monkeypatch.delenv("STRUCTURED_HARVEST_JOBS")
    assert cli._jobs(None) == 1


def test_config_roundtrip_and_defaults():
    cfg = RunConfig()
    again = config_from_dict({k: v for k, v in cfg.to_dict().items()})
    assert again.digest() == cfg.digest()
    assert cfg.params.to_dict()["L_inf"] == 135.3 and cfg.n_cells == 400
    assert cfg.with_overrides(output_dir="elsewhere").digest() == cfg.digest()
    assert cfg.with_overrides(n_cells=800).digest() != cfg.digest()


def test_sweep_spec_grid():
    from structured_harvest.model import ModelParams
    assert SweepSpec().grid(ModelParams()).tolist() == list(np.arange(20.0, 131.0))
    assert SweepSpec(40, 41, 0.4).grid(ModelParams()).tolist() == pytest.approx([40, 40.4, 40.8, 41])


def test_custom_initial_file(tmp_path):
    prof = tmp_path / "x0.csv"
    prof.write_text("l,x\n20,100\n130,100\n")
    cfg = write_cfg(tmp_path, {"initial_condition": "custom-file", "initial_file": str(prof)})
    assert run(["simulate", "--config", cfg, "--out", str(tmp_path), "--horizon", "0.1"]) == 0
    traj = read_csv(tmp_path / "trajectory.csv")
    assert traj["N"][0] == pytest.approx(100 * 110)


def test_partial_report(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise ValueError("forced failure")

    monkeypatch.setattr(runs, "run_replacement_curve", boom)
    monkeypatch.setattr(runs, "run_sweep", boom)
    manifest = runs.run_report(RunConfig(), tmp_path, figures=False)
    assert manifest["status"] == "partial"
    assert manifest["stages"]["replacement"]["status"] == "failed"
    assert manifest["stages"]["adjoint"]["status"] == "skipped"
    assert manifest["stages"]["steady"]["status"] == "ok"


def test_report_manifest(report_dirs):
    out = report_dirs[0]
    m = load(out / "manifest.json")
    assert m["status"] == "ok"
    assert set(m["stages"]) == {"steady", "replacement", "table", "sweep", "adjoint", "comparison"}
    for item in m["headline"].values():
        assert item["config_hash"] == m["config_hash"] and item["n_cells"] == 400
    for stage in m["stages"].values():
        assert stage["anchor"]
        for f in stage["files"]:
            assert (out / f).exists()
    assert len(list((out / "figures").glob("*.png"))) == 6


def test_report_profile_comparison(report_dirs):
    out = report_dirs[0]
    l_opt = load(out / "optimum.json")["l_star_opt"]
    d = read_csv(out / "profile_comparison.csv")
    above = d["l"] > l_opt + 0.5
    assert np.all(d["x_optimal"][above] < d["x_baseline"][above])
    below = d["l"] < l_opt
    # below the threshold the harvested stock sits at the same order as the baseline (less crowding)
    ratio = d["x_optimal"][below] / d["x_baseline"][below]
    assert np.all((ratio > 0.5) & (ratio < 2.0))


def test_report_figures_identical(report_dirs):
    a, b = report_dirs
    for png in sorted((a / "figures").glob("*.png")):
        assert png.read_bytes() == (b / "figures" / png.name).read_bytes()
