import json
import os
import subprocess

import pytest

CLI = os.environ.get("SCIAGENT_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="SCIAGENT_CLI not set")


def run(*args, env=None, cwd=None):
    e = dict(os.environ)
    e.pop("OPENAI_API_KEY", None)
    if env:
        e.update(env)
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, env=e, cwd=cwd, timeout=120)


def field(stdout, name):
    for line in stdout.splitlines():
        if line.startswith(name + ": "):
            return line.split(": ", 1)[1]
    raise AssertionError(f"{name} missing from {stdout!r}")


def test_plan_writes_plan_json(tmp_path, fixtures):
    r = run("--workspace", tmp_path, "--script", fixtures / "scripts" / "plan.json", "--logical-clock",
            "plan", "minimize the six-hump camel")
    assert r.returncode == 0, r.stderr
    plan = json.loads(open(field(r.stdout, "output")).read())
    assert plan and all({"id", "requires_code"} <= set(step) for step in plan)


def test_plan_then_execute_and_transcript(tmp_path, fixtures):
    r = run("--workspace", tmp_path, "--script", fixtures / "scripts" / "plan_then_execute.json",
            "--run-id", "pte", "workflow", "plan-then-execute", "write a greeting")
    assert r.returncode == 0, r.stderr
    assert field(r.stdout, "status") == "succeeded"
    t = run("--workspace", tmp_path, "transcript", "show", "pte", "--kind", "llm_call")
    assert t.returncode == 0
    events = [json.loads(line) for line in t.stdout.splitlines()]
    assert events and all(e["kind"] == "llm_call" for e in events)


def test_hypothesize(tmp_path, fixtures):
    r = run("--workspace", tmp_path, "--script", fixtures / "scripts" / "hypothesize.json", "--n-max", 1,
            "hypothesize", "why does yield saturate?")
    assert r.returncode == 0, r.stderr
    assert open(field(r.stdout, "output")).read().strip()


def test_arxiv_offline(tmp_path, fixtures):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"tools": {"arxiv_fixtures": str(fixtures / "arxiv")}}))
    r = run("--config", cfg, "--workspace", tmp_path / "runs", "--script", fixtures / "scripts" / "arxiv.json",
            "arxiv", "--query", "implosion", "--context", "surrogates", "--max-papers", 3)
    assert r.returncode == 0, r.stderr
    doc = open(field(r.stdout, "output")).read()
    assert doc.count("https://arxiv.org/abs/") == 3


def test_resume_finished_run(tmp_path, fixtures):
    script = fixtures / "scripts" / "plan.json"
    r = run("--workspace", tmp_path, "--script", script, "--run-id", "p1", "plan", "q")
    assert r.returncode == 0, r.stderr
    again = run("--workspace", tmp_path, "--script", script, "resume", "p1", "--steer", "keep it short")
    assert again.returncode == 0, again.stderr
    assert field(again.stdout, "status") == "succeeded"
    missing = run("--workspace", tmp_path, "--script", script, "resume", "p1", "--sequence", 999)
    assert missing.returncode == 2


def test_usage_and_config_errors(tmp_path):
    assert run("plan").returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"limits": {"nope": 1}}')
    assert run("--config", bad, "plan", "q").returncode == 2
    # live backend without its credential
    r = run("--workspace", tmp_path, "plan", "q")
    assert r.returncode == 2
    assert "OPENAI_API_KEY" in r.stderr


def test_workbench_camel(tmp_path):
    r = run("--workspace", tmp_path, "workbench", "camel", "--out", tmp_path / "camel")
    assert r.returncode == 0, r.stderr
    assert "threshold: -1.0216" in r.stdout
    csvs = list((tmp_path / "camel").glob("*.csv"))
    assert len(csvs) == 1
    assert len(csvs[0].read_text().splitlines()) == 61
    assert (tmp_path / "camel" / "comparison.svg").exists()


def test_workbench_design_race(tmp_path, fixtures):
    r = run("--workspace", tmp_path, "--script", fixtures / "scripts" / "design_race.json", "--logical-clock",
            "workbench", "design-race", "--out", tmp_path / "race", "--no-svg")
    assert r.returncode == 0, r.stderr
    assert "agent" in r.stdout
    assert (tmp_path / "race" / "comparison.txt").exists()
    assert not (tmp_path / "race" / "comparison.svg").exists()
