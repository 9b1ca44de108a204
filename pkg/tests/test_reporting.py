import csv
import io
import json

import pytest

from frameicl.llm.client import LLMClient
from frameicl.llm.mock import Corrupt, EchoGold, MockProvider
from frameicl.reporting import ablation_table, best_shot, format_best, pct, report
from frameicl.runner import ExperimentSpec, RunRecord, TaskMode, run_experiment


def _record(name, mode, shots, scores, ablation="full", model="m"):
    """A synthetic record whose headline scope has the given F1 per shot count."""
    rows = []
    scope = {"fi_only": "fi:pair_exact", "fsp_single_stage": "all_roles"}[mode]
    for k, (tp, fp, fn) in zip(shots, scores):
        rep = {"scope": scope, "tp": tp, "fp": fp, "fn": fn, "per_frame": {},
               "per_attribute": {"Victim": {"tp": tp, "fp": fp, "fn": fn}}}
        rows.append({"model_id": model, "shots": k, "scope": scope, "report": rep,
                     "failures": {"refusals": 0, "warnings": {}}})
    spec = ExperimentSpec(name, mode, "s", tuple(shots), (model,), ablation=ablation).to_dict()
    return RunRecord(spec=spec, split={}, template_digests={}, shots=list(shots), reports=rows)


def test_pct_and_best():
    assert pct(0.6667) == "66.7" and pct(1.0) == "100.0"
    assert best_shot([(0, 0.6), (5, 0.8), (10, 0.7)]) == ([5], 0.8)
    assert best_shot([(0, 0.5), (5, 0.5)]) == ([0, 5], 0.5)
    assert format_best([5], 0.8) == "(5) 80.0"
    with pytest.raises(ValueError):
        best_shot([])


def test_best_csv_single_row(tmp_path):
    # F1 0.6 at 0 shots, 0.8 at 5 shots
    rec = _record("e", "fi_only", [0, 5], [(3, 2, 2), (4, 1, 1)])
    report([rec], tmp_path)
    rows = list(csv.reader(open(tmp_path / "e" / "best.csv")))
    assert rows[0] == ["model_id", "fi:pair_exact", "fi:name_only", "fi:target_only"]
    assert len(rows) == 2 and rows[1][:2] == ["m", "(5) 80.0"]
    assert not (tmp_path / "e" / "attributes.csv").exists()


def test_attributes_csv(tmp_path):
    rec = _record("p", "fsp_single_stage", [0, 5], [(1, 1, 1), (2, 0, 0)])
    report([rec], tmp_path)
    rows = list(csv.reader(open(tmp_path / "p" / "attributes.csv")))
    assert rows == [["attribute", "m"], ["Victim", "(5) 100.0"]]


def test_summary_full_precision(tmp_path):
    rec = _record("e", "fi_only", [0], [(2, 1, 0)])
    report([rec], tmp_path)
    s = json.loads((tmp_path / "e" / "summary.json").read_text())
    assert s["rows"][0]["precision"] == 2 / 3
    assert s["best"]["m"]["fi:pair_exact"] == {"shots": [0], "f1": 0.8}


def test_ablation_columns(tmp_path):
    recs = [
        _record("none", "fi_only", [0], [(1, 3, 3)], ablation="no_frame_info"),
        _record("defs", "fi_only", [0], [(2, 2, 2)], ablation="frame_def_only"),
        _record("full", "fi_only", [0, 5], [(3, 1, 1), (4, 0, 0)]),
    ]
    assert ablation_table(recs) == [["fi_only", "m", "25.0", "50.0", "75.0", "(5) 100.0"]]
    report(recs, tmp_path)
    text = (tmp_path / "ablation.csv").read_text()
    assert text.splitlines()[0] == "task_mode,model_id,a,b,c,d"
    assert ablation_table(recs[2:]) == []


def test_reports_byte_identical(store, split, tmp_path):
    spec = ExperimentSpec("x", TaskMode.FSP_SINGLE_STAGE, "s", (0, 5), ("a", "b"))

    def run():
        clients = {"a": LLMClient(MockProvider(store, EchoGold(), "a")),
                   "b": LLMClient(MockProvider(store, Corrupt(0.3, 1), "b"))}
        return run_experiment(spec, store, clients, split)

    out1, out2 = tmp_path / "1", tmp_path / "2"
    f1, f2 = report([run()], out1), report([run()], out2)
    assert [p.name for p in f1] == [p.name for p in f2]
    for a, b in zip(f1, f2):
        assert a.read_bytes() == b.read_bytes()


def test_curve_csv_rows(store, split, tmp_path):
    spec = ExperimentSpec("c", TaskMode.FSRL_GOLD, "s", (0, 5), ("a",))
    rec = run_experiment(spec, store, {"a": LLMClient(MockProvider(store, model_id="a"))}, split)
    report([rec], tmp_path)
    rows = list(csv.DictReader(io.StringIO((tmp_path / "c" / "curve.csv").read_text())))
    assert [(r["shots"], r["scope"], r["f1"]) for r in rows] == [("0", "arguments_only", "100.0"),
                                                                 ("5", "arguments_only", "100.0")]


def test_report_needs_records(tmp_path):
    with pytest.raises(ValueError):
        report([], tmp_path)
