import json
import os

import pytest

from duelopt.cli import main

SMALL = {
    "sampler": {"kind": "dts_copeland"},
    "rounds": 3,
    "duels_per_round": 4,
    "seed": 11,
    "batch": {"mode": "fixed", "m": 1},
    "world": {"type": "latent", "k": 4, "n_inputs": 20},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def test_validate_config_ok(config_path, capsys):
    assert main(["validate-config", "--config", config_path]) == 0
    assert "config ok" in capsys.readouterr().out


def test_validate_config_reports_field(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"sampler": {"kind": "bogus"}}))
    assert main(["validate-config", "--config", str(path)]) == 1
    assert "sampler.kind" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["validate-config", "--config", str(tmp_path / "absent.json")]) == 1


def test_malformed_json_config(tmp_path, capsys):
    path = tmp_path / "mangled.json"
    path.write_text("{oops")
    assert main(["validate-config", "--config", str(path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_simulate_writes_artifacts(config_path, tmp_path, capsys):
    out = str(tmp_path / "artifacts")
    assert main(["simulate", "--config", config_path, "--out", out]) == 0
    for name in ("duel_log.csv", "trace.csv", "result.json"):
        assert os.path.exists(os.path.join(out, name))
    stdout = capsys.readouterr().out
    assert "best arm: p0" in stdout and "judge calls: 12" in stdout
    doc = json.load(open(os.path.join(out, "result.json")))
    assert doc["rounds_completed"] == 3
    assert len(open(os.path.join(out, "duel_log.csv")).readlines()) == 1 + 12


def test_simulate_deterministic_across_invocations(config_path, tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    main(["simulate", "--config", config_path, "--out", out_a, "--quiet"])
    main(["simulate", "--config", config_path, "--out", out_b, "--quiet"])
    log_a = open(os.path.join(out_a, "duel_log.csv"), "rb").read()
    log_b = open(os.path.join(out_b, "duel_log.csv"), "rb").read()
    assert log_a == log_b


def test_seed_flag_changes_run(config_path, tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    main(["simulate", "--config", config_path, "--out", out_a, "--quiet"])
    main(["simulate", "--config", config_path, "--out", out_b, "--quiet", "--seed", "99"])
    assert open(os.path.join(out_a, "duel_log.csv")).read() != open(
        os.path.join(out_b, "duel_log.csv")
    ).read()


def test_set_overrides_apply(config_path, tmp_path):
    out = str(tmp_path / "o")
    code = main([
        "simulate", "--config", config_path, "--out", out, "--quiet",
        "--set", "rounds=1", "--set", "duels_per_round=2",
    ])
    assert code == 0
    doc = json.load(open(os.path.join(out, "result.json")))
    assert doc["rounds_completed"] == 1 and doc["cost"]["judge_calls"] >= 2


def test_simulate_rejects_live_judges(config_path, capsys):
    code = main(["simulate", "--config", config_path, "--set", "judge.type=remote"])
    assert code == 1
    assert "optimize verb" in capsys.readouterr().err


def test_optimize_rejects_human_judge(config_path, capsys):
    code = main(["optimize", "--config", config_path, "--set", "judge.type=human"])
    assert code == 1
    assert "serve verb" in capsys.readouterr().err


def test_optimize_abort_writes_snapshot(tmp_path, capsys, monkeypatch):
    from duelopt import cli
    from duelopt.engine import EngineAborted

    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(SMALL))
    out = str(tmp_path / "aborted")

    class FakeEngine:
        def __init__(self, doc, transport=None, snapshot=None):
            pass

        def run(self):
            raise EngineAborted("judge unavailable: 401", {"schema_version": 1, "config": SMALL})

    monkeypatch.setattr(cli, "Engine", FakeEngine)
    code = main(["optimize", "--config", str(cfg), "--out", out])
    assert code == 2
    assert "snapshot" in capsys.readouterr().err
    snap = json.load(open(os.path.join(out, "snapshot.json")))
    assert snap["schema_version"] == 1


def test_report_replays_run(config_path, tmp_path, capsys):
    out = str(tmp_path / "run_dir")
    main(["simulate", "--config", config_path, "--out", out, "--quiet"])
    assert main(["report", "--run", out]) == 0
    assert "matches" in capsys.readouterr().out
    assert os.path.exists(os.path.join(out, "trace_replay.csv"))
    assert os.path.exists(os.path.join(out, "replay.json"))
    original = open(os.path.join(out, "trace.csv")).read()
    replayed = open(os.path.join(out, "trace_replay.csv")).read()
    assert original == replayed


def test_report_detects_mismatch(config_path, tmp_path, capsys):
    out = str(tmp_path / "run_dir")
    main(["simulate", "--config", config_path, "--out", out, "--quiet"])
    trace_path = os.path.join(out, "trace.csv")
    lines = open(trace_path).readlines()
    lines[1] = lines[1].replace(lines[1].split(",")[1], "0.123456789", 1)
    open(trace_path, "w").writelines(lines)
    assert main(["report", "--run", out]) == 2
    assert "differs" in capsys.readouterr().err


def test_report_missing_artifacts(tmp_path, capsys):
    assert main(["report", "--run", str(tmp_path)]) == 1
    assert "missing artifact" in capsys.readouterr().err


def test_compare_runs_and_writes(config_path, tmp_path, capsys):
    out = str(tmp_path / "cmp")
    code = main([
        "compare", "--config", config_path, "--out", out,
        "--samplers", "rucb,random", "--n-seeds", "2",
        "--set", "rounds=2", "--set", "duels_per_round=3",
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "rucb:" in stdout and "random:" in stdout
    rows = open(os.path.join(out, "compare.csv")).readlines()
    assert rows[0].strip() == "sampler,seed,t,r_t,R_t,leader_rank,epsilon_t"
    assert len(rows) == 1 + 2 * 2 * 2
    doc = json.load(open(os.path.join(out, "compare.json")))
    assert set(doc["summary"]) == {"rucb", "random"}


def test_compare_rejects_empty_samplers(config_path):
    assert main(["compare", "--config", config_path, "--samplers", ","]) == 1
