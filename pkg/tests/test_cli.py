"""The fso-sim command: subcommands, outputs, exit codes."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from fso_sim import cli

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run_cli(*argv):
    return cli.main(list(argv))


def test_validate_accepts_fixtures(capsys):
    code = run_cli("validate", "--scenario", str(SCENARIOS / "little_sister.json"))
    assert code == 0
    assert "scenario ok" in capsys.readouterr().out


def test_validate_rejects_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"roles": []}')
    code = run_cli("validate", "--scenario", str(bad))
    assert code == 1
    assert "missing keys" in capsys.readouterr().err


def test_validate_rejects_missing_file(capsys):
    code = run_cli("validate", "--scenario", "/nowhere/nothing.json")
    assert code == 1
    assert "cannot read scenario" in capsys.readouterr().err


def test_enumerate_prints_the_state_count(capsys):
    code = run_cli("enumerate", "--scenario", str(SCENARIOS / "nine_actors.json"))
    assert code == 0
    assert capsys.readouterr().out.strip() == "512"


def test_run_prints_metrics(capsys):
    code = run_cli("run", "--scenario", str(SCENARIOS / "minimal.json"), "--seed", "0")
    assert code == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["sons_formed"] == 2
    assert set(metrics) == {
        "events_published",
        "sons_formed",
        "mean_hop_count",
        "mean_response_latency",
        "unresolved_requests",
        "permanentifications",
        "prunings",
        "final_partition_sizes",
    }


def test_run_writes_trace_and_metrics_files(tmp_path, capsys):
    trace_path = tmp_path / "out.trace"
    metrics_path = tmp_path / "metrics.json"
    code = run_cli(
        "run",
        "--scenario",
        str(SCENARIOS / "little_sister.json"),
        "--seed",
        "1",
        "--trace",
        str(trace_path),
        "--metrics",
        str(metrics_path),
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    lines = trace_path.read_text().splitlines()
    assert lines and all(set(json.loads(line)) == {"tick", "kind", "payload"} for line in lines)
    metrics = json.loads(metrics_path.read_text())
    assert metrics["sons_formed"] == 1


def test_run_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.trace", tmp_path / "b.trace"
    for out in (a, b):
        assert run_cli(
            "run", "--scenario", str(SCENARIOS / "nine_actors.json"), "--seed", "7", "--trace", str(out)
        ) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.trace"
    assert run_cli(
        "run", "--scenario", str(SCENARIOS / "nine_actors.json"), "--seed", "8", "--trace", str(c)
    ) == 0
    assert a.read_bytes() != c.read_bytes()


def test_run_horizon_override(tmp_path, capsys):
    code = run_cli(
        "run", "--scenario", str(SCENARIOS / "nine_actors.json"), "--seed", "7", "--horizon", "0"
    )
    assert code == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["events_published"] == 0
    assert metrics["final_partition_sizes"] == {"L": 0, "R": 0}


def test_report_recomputes_metrics(tmp_path, capsys):
    trace_path = tmp_path / "out.trace"
    run_cli("run", "--scenario", str(SCENARIOS / "minimal.json"), "--seed", "0", "--trace", str(trace_path))
    direct = json.loads(capsys.readouterr().out)
    code = run_cli("report", "--trace", str(trace_path))
    assert code == 0
    assert json.loads(capsys.readouterr().out) == direct


def test_report_rejects_malformed_traces(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    bad.write_text('{"tick": 0, "kind": "Wat", "payload": {}}\n')
    assert run_cli("report", "--trace", str(bad)) == 1
    assert "malformed trace" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("run", "--scenario", "x.json", "--seed", "not-a-number")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run_cli("run", "--scenario", "x.json")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run_cli("frobnicate")
    assert exc.value.code == 1


def test_seed_is_required_and_bounded(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("run", "--scenario", str(SCENARIOS / "minimal.json"), "--seed", str(1 << 64))
    assert exc.value.code == 1
