"""Command-line entry points (fast paths only)."""

import json
import os

from followup.cli import main


def test_simulate_prints_trace_and_passes_self_check(capsys):
    rc = main(["simulate", "--policy", "random", "--seed", "4"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "total_cost=" in out and "status=horizon" in out or "status=death" in out


def test_simulate_pomcp_small(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "planner": {"n_search": 16, "k_root": 8, "precision": 0.1}}))
    rc = main(["simulate", "--policy", "pomcp", "--config", str(cfg),
               "--seed", "1"])
    assert rc == 0


def test_evaluate_writes_reports(tmp_path, capsys):
    out_dir = str(tmp_path / "out")
    rc = main(["evaluate", "--policy", "random", "--n", "30",
               "--out-dir", out_dir, "--seed", "0"])
    assert rc == 0
    assert os.path.exists(os.path.join(out_dir, "summary.csv"))
    assert os.path.exists(os.path.join(out_dir, "radar.json"))
    rc = main(["evaluate", "--policy", "mode", "--n", "5",
               "--out-dir", out_dir, "--seed", "0", "--v0", "40.0"])
    assert rc == 0
    radar = json.load(open(os.path.join(out_dir, "radar.json")))
    assert radar["baselines"]["v0"] == 40.0
    assert len(radar["strategies"]) == 2


def test_build_cache(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "filter": {"kind": "conditional", "tensor_mc": 100,
                   "grid_remission": 9, "grid_disease1": 5,
                   "grid_disease2": 7}}))
    cache = str(tmp_path / "cache")
    rc = main(["build-cache", "--config", str(cfg), "--out-dir", cache])
    assert rc == 0
    files = os.listdir(cache)
    assert any(f.startswith("cf_tensor_") and f.endswith(".npz") for f in files)
