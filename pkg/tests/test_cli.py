import json
import random
import subprocess
import sys

import pytest

from helpers import SAMPLE_POLICY, random_namespaces, random_trace
from ztdeps.cli import EXIT_DENIED, EXIT_INPUT, EXIT_OK, main
from ztdeps.policy import parse_policy_file
from ztdeps.scenarios import scenario
from ztdeps.trace import emit_trace


@pytest.fixture
def corpus(tmp_path):
    assert main(["scenarios", "--out", str(tmp_path / "sc")]) == EXIT_OK
    return tmp_path / "sc"


def discover_policy(corpus, name, tmp_path):
    out = tmp_path / f"{name}.json"
    code = main([
        "discover",
        "--trace", str(corpus / f"{name}.benign.jsonl"),
        "--manifest", str(corpus / f"{name}.manifest"),
        "--out", str(out),
    ])
    assert code == EXIT_OK
    return out


def test_discover_then_enforce_benign(corpus, tmp_path, capsys):
    policy = discover_policy(corpus, "xxe-model", tmp_path)
    parse_policy_file(policy.read_text())
    assert "2 policies" in capsys.readouterr().out
    code = main(["enforce", "--trace", str(corpus / "xxe-model.benign.jsonl"), "--policy", str(policy), "--mode", "fatal"])
    assert code == EXIT_OK


def test_discover_empty_trace(tmp_path, capsys):
    (tmp_path / "t.jsonl").write_text("")
    (tmp_path / "m.txt").write_text("com.a\n")
    out = tmp_path / "p.json"
    assert main(["discover", "--trace", str(tmp_path / "t.jsonl"), "--manifest", str(tmp_path / "m.txt"), "--out", str(out)]) == EXIT_OK
    assert out.read_text() == "{}"
    assert "0 policies, 0.00 permissions" in capsys.readouterr().out


def test_discover_missing_manifest(tmp_path, capsys):
    (tmp_path / "t.jsonl").write_text("")
    missing = tmp_path / "nope.txt"
    code = main(["discover", "--trace", str(tmp_path / "t.jsonl"), "--manifest", str(missing), "--out", str(tmp_path / "p.json")])
    assert code != EXIT_OK
    assert str(missing) in capsys.readouterr().err


def test_discover_bad_trace(tmp_path, capsys):
    (tmp_path / "t.jsonl").write_text('{"seq": 1}\n')
    (tmp_path / "m.txt").write_text("com.a\n")
    code = main(["discover", "--trace", str(tmp_path / "t.jsonl"), "--manifest", str(tmp_path / "m.txt"), "--out", str(tmp_path / "p.json")])
    assert code == EXIT_INPUT
    assert "line 1" in capsys.readouterr().err


def test_enforce_exploit_fatal(corpus, tmp_path, capsys):
    policy = discover_policy(corpus, "log4shell-model", tmp_path)
    capsys.readouterr()
    report = tmp_path / "report.json"
    code = main([
        "enforce", "--trace", str(corpus / "log4shell-model.exploit.jsonl"),
        "--policy", str(policy), "--mode", "fatal", "--report", str(report),
    ])
    assert code == EXIT_DENIED
    assert "org.apache.logging.log4j.core" in capsys.readouterr().out
    doc = json.loads(report.read_text())
    assert doc["halted"] and doc["totals"]["denied"] == 1


def test_enforce_exploit_alert(corpus, tmp_path, capsys):
    policy = discover_policy(corpus, "log4shell-model", tmp_path)
    capsys.readouterr()
    alerts = tmp_path / "alerts.jsonl"
    report = tmp_path / "report.json"
    code = main([
        "enforce", "--trace", str(corpus / "log4shell-model.exploit.jsonl"),
        "--policy", str(policy), "--mode", "alert", "--alerts", str(alerts), "--report", str(report),
    ])
    assert code == EXIT_OK
    records = [json.loads(line) for line in alerts.read_text().splitlines()]
    assert len(records) == json.loads(report.read_text())["totals"]["denied"] >= 1
    assert records[0]["denying_namespace"] == "org.apache.logging.log4j.core"
    assert set(records[0]) == {"seq", "thread", "op", "object", "denying_namespace", "reason", "stack"}
    assert f"alerts: {len(records)}" in capsys.readouterr().out


def test_alerts_default_to_stderr(corpus, tmp_path, capsys):
    policy = discover_policy(corpus, "xxe-model", tmp_path)
    capsys.readouterr()
    main(["enforce", "--trace", str(corpus / "xxe-model.exploit.jsonl"), "--policy", str(policy), "--mode", "alert"])
    err = capsys.readouterr().err.splitlines()
    assert len(err) == 2 and json.loads(err[0])["object"] == "/etc/passwd"


def test_enforce_bad_policy(corpus, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"a.b": {"fs.raed": true}}')
    code = main(["enforce", "--trace", str(corpus / "xxe-model.benign.jsonl"), "--policy", str(bad), "--mode", "fatal"])
    assert code == EXIT_INPUT
    assert "fs.raed" in capsys.readouterr().err


def test_audit(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text(SAMPLE_POLICY)
    assert main(["audit", "--policy", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "policies: 2" in out
    assert "mean permissions per policy: 1.50" in out
    assert "com.foo.baz" in out and "fs.write,runtime.exec" in out


def test_audit_parse_error(tmp_path):
    path = tmp_path / "p.json"
    path.write_text("{")
    assert main(["audit", "--policy", str(path)]) == EXIT_INPUT


def test_bench_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--deps", "1,10", "--depths", "1,2", "--iterations", "50", "--out", str(out)]) == EXIT_OK
    rows = out.read_text().splitlines()
    assert rows[0] == "deps,depth,mean_us"
    assert [r.split(",")[:2] for r in rows[1:]] == [["1", "1"], ["10", "1"], ["10", "2"]]
    summary = capsys.readouterr().out
    assert "depth=1" in summary and "deps=10" in summary


def test_bench_rejects_bad_counts(capsys):
    with pytest.raises(SystemExit):
        main(["bench", "--deps", "0,10"])


@pytest.mark.parametrize("seed", range(5))
def test_discover_enforce_pipeline_random(tmp_path, seed):
    rng = random.Random(seed)
    namespaces = random_namespaces(rng, 12)
    (tmp_path / "t.jsonl").write_text(emit_trace(random_trace(rng, namespaces, 200), header=True))
    (tmp_path / "m.txt").write_text("\n".join(namespaces))
    out = tmp_path / "p.json"
    assert main(["discover", "--trace", str(tmp_path / "t.jsonl"), "--manifest", str(tmp_path / "m.txt"), "--out", str(out), "--flush-interval", "17"]) == EXIT_OK
    assert main(["enforce", "--trace", str(tmp_path / "t.jsonl"), "--policy", str(out), "--mode", "fatal"]) == EXIT_OK


def test_module_entry_point(tmp_path):
    s = scenario("path-traversal-model")
    (tmp_path / "t.jsonl").write_text(emit_trace(s.exploit_trace))
    (tmp_path / "p.json").write_text("{}")
    proc = subprocess.run(
        [sys.executable, "-m", "ztdeps", "enforce", "--trace", str(tmp_path / "t.jsonl"), "--policy", str(tmp_path / "p.json"), "--mode", "fatal"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_DENIED
    assert "no policy" in proc.stdout
