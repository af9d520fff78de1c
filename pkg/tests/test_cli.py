import json

import pytest

from mirrorbus.cli import main


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "runout"
    code = main(["run", "--experiment", "exp1", "--seed", "7", "--out", str(out)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["experiment"] == "exp1"
    assert (out / "report.json").exists()
    assert (out / "exp1_c0.jsonl").exists()


def test_run_then_audit_ok(tmp_path, capsys):
    out = tmp_path / "runout"
    main(["run", "--experiment", "exp2", "--seed", "1", "--out", str(out)])
    capsys.readouterr()
    code = main(["audit", str(out / "exp2_c1.jsonl")])
    assert code == 0
    result = json.loads(capsys.readouterr().out)
    assert result["ok"] is True
    assert result["metrics"]["detection_uptime"] == 1.0


def test_audit_detects_violation_exit_code_1(tmp_path, capsys):
    out = tmp_path / "runout"
    main(["run", "--experiment", "exp1", "--seed", "1", "--out", str(out)])
    capsys.readouterr()
    log = out / "exp1_c1.jsonl"
    lines = log.read_text().splitlines()
    for i, line in enumerate(lines):
        if '"/head/state"' in line:
            rec = json.loads(line)
            rec["msg"]["pan"] = 360.0
            lines[i] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
            break
    log.write_text("\n".join(lines) + "\n")
    code = main(["audit", str(log)])
    assert code == 1


def test_audit_missing_file_exit_code_2(tmp_path, capsys):
    code = main(["audit", str(tmp_path / "absent.jsonl")])
    assert code == 2


def test_bad_config_file_exit_code_2(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("actuation:\n  limits:\n    pan_max: -5\n")
    code = main(["run", "--experiment", "exp1", "--seed", "0",
                 "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2


def test_replay_reproduces_log(tmp_path, capsys):
    out = tmp_path / "runout"
    main(["run", "--experiment", "exp1", "--seed", "9", "--out", str(out)])
    capsys.readouterr()
    replayed = tmp_path / "replayed.jsonl"
    code = main([
        "replay", str(out / "exp1_c0_trace.jsonl"),
        "--out", str(replayed),
        "--experiment", "exp1", "--condition", "0", "--seed", "9",
    ])
    assert code == 0
    assert replayed.read_bytes() == (out / "exp1_c0.jsonl").read_bytes()


def test_replay_missing_trace_exit_code_2(tmp_path, capsys):
    code = main(["replay", str(tmp_path / "ghost.jsonl"), "--out", str(tmp_path / "x.jsonl")])
    assert code == 2


def test_config_file_respected(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("harness:\n  exp3_duration: 4.0\n")
    out = tmp_path / "runout"
    code = main(["run", "--experiment", "exp3", "--seed", "0",
                 "--config", str(cfg), "--out", str(out)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["conditions"][0]["duration"] == 4.0
