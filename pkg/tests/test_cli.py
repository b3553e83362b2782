import json
import math
from pathlib import Path

import numpy as np
import pytest

from sit2stand.cli import main, reference_scenario_path
from sit2stand.grf_analysis import parse_stats_csv
from sit2stand.kinematics import PhaseTimings, generate_sts_trajectory
from sit2stand.perception import format_skeleton

from conftest import chain_skeleton


def _hashes(out_dir: Path) -> dict:
    import hashlib

    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(out_dir.iterdir())
    }


@pytest.fixture(scope="module")
def sim_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--out", str(out)]) == 0
    return out


def test_bundled_scenario_exists():
    assert reference_scenario_path().exists()


def test_simulate_outputs_present(sim_run):
    names = {p.name for p in sim_run.iterdir()}
    assert {
        "episode_control.csv",
        "episode_assisted.csv",
        "grf_control.csv",
        "grf_assisted.csv",
        "loads_control.csv",
        "loads_assisted.csv",
        "parameters_control.csv",
        "parameters_assisted.csv",
        "parameters_compare.csv",
        "grf.png",
        "manifest.json",
    } <= names


def test_simulate_deterministic(sim_run, tmp_path):
    out2 = tmp_path / "again"
    assert main(["simulate", "--out", str(out2)]) == 0
    assert _hashes(sim_run) == _hashes(out2)


def test_simulate_manifest_structure(sim_run):
    manifest = json.loads((sim_run / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert set(manifest["outputs"]) == {
        p.name for p in sim_run.iterdir() if p.name != "manifest.json"
    }
    assert all(len(h) == 64 for h in manifest["inputs"].values())


def test_simulate_assisted_f2_smaller(sim_run):
    mean_a, _ = parse_stats_csv((sim_run / "parameters_assisted.csv").read_text())
    mean_c, _ = parse_stats_csv((sim_run / "parameters_control.csv").read_text())
    assert mean_a["F2"] < mean_c["F2"]
    assert abs(mean_a["V1"]) < abs(mean_c["V1"])


def test_simulate_rejects_bad_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("chair.height = 3.0\n")
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "unreachable" in capsys.readouterr().err


def test_simulate_rejects_malformed_scenario(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("chair.height 0.4\n")
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_unknown_flag_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--bogus", "--out", str(tmp_path)])
    assert err.value.code == 2


def test_help_lists_flags(capsys):
    for cmd in ("simulate", "analyze", "compare"):
        with pytest.raises(SystemExit) as err:
            main([cmd, "--help"])
        assert err.value.code == 0
        text = capsys.readouterr().out
        assert "--out" in text


def test_analyze_trials_and_stats(sim_run, tmp_path):
    out = tmp_path / "an"
    grf = str(sim_run / "grf_control.csv")
    assert main(["analyze", "--grf", grf, grf, grf, "--out", str(out)]) == 0
    text = (out / "parameters.csv").read_text()
    mean, sd = parse_stats_csv(text)
    assert sd["F2"] == 0.0  # identical trials
    summary = dict(
        line.split(",", 1) for line in (out / "summary.csv").read_text().splitlines()[1:]
    )
    assert summary["n_trials"] == "3"


def test_analyze_with_skeleton(sim_run, tmp_path, model):
    traj = generate_sts_trajectory(model, PhaseTimings(1.2, 0.4, 0.6), rate=60.0)
    frames = [chain_skeleton(float(traj.t[i]), traj.frame(i)) for i in range(traj.n_frames)]
    sk = tmp_path / "sk.txt"
    sk.write_text(format_skeleton(frames))
    out = tmp_path / "an"
    code = main(
        [
            "analyze",
            "--grf",
            str(sim_run / "grf_control.csv"),
            "--skeleton",
            str(sk),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    lines = (out / "mc_compare.csv").read_text().splitlines()
    assert lines[0] == "t,mc_model,mc_measured"
    assert len(lines) > 100
    summary = dict(
        line.split(",", 1) for line in (out / "summary.csv").read_text().splitlines()[1:]
    )
    assert math.isfinite(float(summary["mc_rms"]))


def test_analyze_malformed_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,fz\n0.0,1.0\n0.01,nope\n")
    assert main(["analyze", "--grf", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_compare_identical_runs_zero_deltas(sim_run, tmp_path):
    out = tmp_path / "cmp"
    code = main(
        ["compare", "--run-a", str(sim_run), "--run-b", str(sim_run), "--out", str(out)]
    )
    assert code == 0
    lines = (out / "compare.csv").read_text().splitlines()
    assert lines[0] == "param,a,b,delta,delta_pct_bw"
    for line in lines[1:]:
        assert float(line.split(",")[3]) == 0.0


def test_compare_flags_reductions(sim_run, tmp_path):
    """Assisted-vs-control deltas mirror the expected orderings."""
    rows = (sim_run / "parameters_compare.csv").read_text().splitlines()[1:]
    delta = {r.split(",")[0]: float(r.split(",")[3]) for r in rows}
    for name in ("F1", "F2", "V1", "T3"):
        assert delta[name] < 0.0, name
    assert abs(delta["V2"]) > 0.0  # control V2 magnitude removed by assist


def test_compare_missing_parameter_file(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["compare", "--run-a", str(empty), "--run-b", str(empty),
                 "--out", str(tmp_path / "o")]) == 2


def test_compare_schema_mismatch(tmp_path):
    run = tmp_path / "run"
    run.mkdir()
    (run / "parameters.csv").write_text("param,mean,sd\nF1,1.0,0.0\n")
    assert main(["compare", "--run-a", str(run), "--run-b", str(run),
                 "--out", str(tmp_path / "o")]) == 2


def test_no_writes_outside_out_dir(tmp_path, monkeypatch):
    workdir = tmp_path / "cwd"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    out = tmp_path / "only_here"
    assert main(["simulate", "--out", str(out)]) == 0
    assert list(workdir.iterdir()) == []


def test_table_override_via_env(tmp_path, monkeypatch, sim_run):
    from sit2stand.anthro import default_table, format_table

    table_path = tmp_path / "table.cfg"
    table_path.write_text(format_table(default_table()))
    monkeypatch.setenv("SIT2STAND_CONFIG", str(table_path))
    out = tmp_path / "env_run"
    assert main(["simulate", "--out", str(out)]) == 0
    # default table through the env var: bit-identical results
    assert (out / "grf_control.csv").read_bytes() == (
        sim_run / "grf_control.csv"
    ).read_bytes()
