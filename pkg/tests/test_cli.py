import json

import pytest
import yaml

from harmonia.cli import TRACE_DIR_ENV, main
from harmonia.engine import TraceRecord, run
from harmonia.scenario import fixture_path, load_scenario

FIG3 = str(fixture_path("figure3_trade"))
CYCLE = str(fixture_path("self_sustaining_cycle"))


def test_validate_ok(capsys):
    assert main(["validate", FIG3]) == 0
    assert capsys.readouterr().out.strip().endswith(": ok")


def test_validate_broken(tmp_path, capsys):
    doc = yaml.safe_load(open(FIG3))
    doc["systems"][0]["context"] = "missing"
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump(doc))
    assert main(["validate", str(bad)]) == 1
    assert "$.systems[0].context" in capsys.readouterr().err
    garbled = tmp_path / "garbled.yaml"
    garbled.write_text("systems: [\n")
    assert main(["validate", str(garbled)]) == 1


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["freq", "--sbj", "1", "--s", "1", "--c", "1", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv,out", [
    (["helix", "mul", "-3", "4"], "-12"),
    (["helix", "add", "-3", "4"], "1"),
    (["helix", "sub", "2", "5"], "-3"),
    (["freq", "--sbj", "10", "--s", "4", "--c", "3"], "3"),
    (["eval", "and", "--scores", "1", "-1"], "-1 not-expanded"),
    (["eval", "and", "--scores", "1", "-1", "--inject", "1.5"], "0.5 expanded"),
    (["eval", "or", "--scores", "1", "-1"], "1 expanded"),
])
def test_one_shot_commands(capsys, argv, out):
    assert main(argv) == 0
    assert capsys.readouterr().out.strip() == out


def test_inject_with_or_is_usage_error(capsys):
    assert main(["eval", "or", "--scores", "1", "--inject", "2"]) == 2


def test_bad_capacity_is_usage_error(capsys):
    assert main(["freq", "--sbj", "1", "--s", "0", "--c", "1"]) == 2


def test_hv_report(capsys):
    assert main(["hv", FIG3]) == 0
    out = capsys.readouterr().out
    for sid in ("A", "B", "C"):
        assert f"system {sid} " in out
    assert "significance" in out and "*" in out


def test_run_writes_trace_matching_library(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    state = tmp_path / "s.json"
    assert main(["run", CYCLE, "--trace", str(trace), "--state-out", str(state)]) == 0
    lines = trace.read_text().splitlines()
    assert lines == run(load_scenario(CYCLE)).trace_lines()
    assert all(TraceRecord.from_json(x).to_json() == x for x in lines)
    assert {s["id"] for s in json.loads(state.read_text())["systems"]} == {
        "animal", "decomposer", "plant"}


def test_run_uses_trace_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(TRACE_DIR_ENV, str(tmp_path))
    assert main(["run", CYCLE, "--ticks", "1", "--seed", "5"]) == 0
    written = tmp_path / "self_sustaining_cycle.trace.jsonl"
    assert written.exists() and written.read_text()
    assert capsys.readouterr().out == ""


def test_run_to_stdout(monkeypatch, capsys):
    monkeypatch.delenv(TRACE_DIR_ENV, raising=False)
    assert main(["run", CYCLE, "--ticks", "0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(json.loads(x)["tick"] == -1 for x in lines)
