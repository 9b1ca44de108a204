import json
import subprocess
import sys

import pytest
import yaml

from frameicl.cli import main
from frameicl.fixtures import example_config_path, fixture_dir
from frameicl.store import load_normalized

LIVE = str(example_config_path().parent / "live.yaml")


def cli(tmp_path, *args):
    return main(["--out", str(tmp_path), *args])


def test_prompt_to_stdout(tmp_path, capsys):
    assert cli(tmp_path, "prompt", "--task", "fsp", "--split", "fixtures", "--shots", "5") == 0
    out = capsys.readouterr().out
    assert out.startswith("# Goal\n") and "# Examples" in out and "Frames:" not in out.split("# Examples")[0]


def test_prompt_needs_frames(tmp_path):
    assert cli(tmp_path, "prompt", "--task", "fi") == 2
    assert cli(tmp_path, "prompt", "--task", "fi", "--split", "fixtures", "--shots", "99") == 2


def test_split_saved_and_reused(tmp_path, capsys):
    assert cli(tmp_path, "split", "fixtures") == 0
    first = json.loads(capsys.readouterr().out)
    assert len(first["icl_pool"]) == 15 and len(first["eval_set"]) == 10
    assert (tmp_path / "splits" / "fixtures.json").exists()
    assert cli(tmp_path, "split", "fixtures") == 0
    assert json.loads(capsys.readouterr().out) == first


def test_run_and_report(tmp_path, capsys):
    assert cli(tmp_path, "--offline", "run", "exp3a_fsrl_gold", "exp2_fi", "exp3b_fi_fsrl_reuse") == 0
    assert (tmp_path / "runs" / "exp2_fi" / "record.json").exists()
    assert (tmp_path / "reports" / "exp3a_fsrl_gold" / "best.csv").exists()
    rec = json.loads((tmp_path / "runs" / "exp3b_fi_fsrl_reuse" / "record.json").read_text())
    assert rec["stage1_source"] == "record:exp2_fi"
    assert (tmp_path / ".frameicl-cache").is_dir()
    before = (tmp_path / "reports" / "exp2_fi" / "curve.csv").read_bytes()
    capsys.readouterr()
    assert cli(tmp_path, "report") == 0
    assert (tmp_path / "reports" / "exp2_fi" / "curve.csv").read_bytes() == before
    assert "summary.json" in capsys.readouterr().out


def test_stage1_from_needs_prior_run(tmp_path):
    assert cli(tmp_path, "run", "exp3b_fi_fsrl_reuse") == 2


def test_report_without_runs(tmp_path):
    assert cli(tmp_path, "report") == 2


def test_unknown_experiment(tmp_path):
    assert cli(tmp_path, "run", "nope") == 2


def test_offline_refuses_network(tmp_path):
    assert cli(tmp_path, "--config", LIVE, "--offline", "run") == 2


def test_missing_credentials_is_provider_error(tmp_path, monkeypatch):
    monkeypatch.delenv("FRAMEICL_API_KEY", raising=False)
    assert cli(tmp_path, "--config", LIVE, "run", "live_fi_smoke") == 3


def test_budget_exit_code(tmp_path, capsys):
    data = yaml.safe_load(example_config_path().read_text())
    data["budgets"]["max_prompt_chars"] = 3000
    path = tmp_path / "tight.yaml"
    path.write_text(yaml.safe_dump(data))
    assert cli(tmp_path, "--config", str(path), "run", "exp1_fsp") == 4
    assert "5 shots" in capsys.readouterr().err


def test_bad_jobs(tmp_path):
    assert cli(tmp_path, "--jobs", "0", "run") == 2


def test_ingest(tmp_path, capsys):
    frame_dir, lu_dir = fixture_dir() / "frame", fixture_dir() / "lu"
    out = tmp_path / "corpus.jsonl"
    assert cli(tmp_path, "ingest", "--frames-dir", str(frame_dir), "--lu-dir", str(lu_dir), "-o", str(out)) == 0
    assert len(load_normalized(out).examples) == 51
    assert "51 examples" in capsys.readouterr().err
    assert cli(tmp_path, "ingest", str(tmp_path / "missing"), "-o", str(tmp_path / "x.jsonl")) == 2


def test_verify_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "frameicl.cli", "verify"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "[PASS] criterion  1:" in proc.stdout
    assert proc.stdout.strip().splitlines()[-1].endswith("0 failed, 1 skipped")
