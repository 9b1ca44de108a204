import json

import pytest

from frameicl.dataset import shot_schedule, ShotProfile
from frameicl.errors import BudgetExceeded, ConfigError, ProviderExhausted, TransportError
from frameicl.llm.client import LLMClient
from frameicl.llm.mock import EchoGold, FixedText, MockProvider
from frameicl.runner import MODE_SCOPES, ExperimentSpec, RunRecord, TaskMode, primary_scope, run_experiment
from frameicl.wire import gold_instance


def spec(mode, shots=(0, 5), **kw):
    return ExperimentSpec(kw.pop("name", f"t_{mode}"), mode, "fixtures", shots, kw.pop("model_ids", ("m",)), **kw)


def clients(store, mode=EchoGold(), cache=None, model_id="m"):
    return {model_id: LLMClient(MockProvider(store, mode, model_id=model_id), cache=cache)}


@pytest.mark.parametrize("mode", list(TaskMode))
def test_echo_gold_perfect(store, split, mode):
    shots = (5,) if mode is TaskMode.FI_THEN_FSRL else (0, 5)
    rec = run_experiment(spec(mode, shots), store, clients(store), split)
    scopes = {r[2] for r in rec.report_rows()}
    assert scopes == set(MODE_SCOPES[mode])
    for _, _, scope, rep, fails in rec.report_rows():
        assert rep.f1 == 1.0, scope
        assert fails == {"refusals": 0, "warnings": {}}


def test_fixed_empty_output(store, split, eval_examples):
    rec = run_experiment(spec(TaskMode.FSP_SINGLE_STAGE, (0,)), store, clients(store, FixedText("[]")), split)
    rows = {s: rep for _, _, s, rep, _ in rec.report_rows()}
    n_gold = sum(1 + len(gold_instance(ex, store).arguments) for ex in eval_examples)
    assert rows["all_roles"].fn == n_gold and rows["all_roles"].fp == 0 and rows["all_roles"].f1 == 0.0


def test_schedule_resolution():
    s = spec(TaskMode.FI_ONLY, "schedule:Large", max_shots=150)
    assert s.resolve_shots(150) == [0, 50, 100, 150]
    assert shot_schedule(ShotProfile.LARGE, 150) == [0, 50, 100, 150]
    assert spec(TaskMode.FSP_SINGLE_STAGE, "schedule:Small").resolve_shots(15) == [0, 5, 10, 15]
    with pytest.raises(ConfigError):
        s.resolve_shots(100)


def test_schedule_rows(store, split):
    rec = run_experiment(spec(TaskMode.FI_ONLY, "schedule:Small", max_shots=10), store, clients(store), split)
    assert rec.shots == [0, 5, 10]
    assert len([r for r in rec.report_rows() if r[2] == "fi:pair_exact"]) == 3


@pytest.mark.parametrize("kwargs", [
    dict(mode=TaskMode.FI_THEN_FSRL, shots=(0, 5)),
    dict(mode=TaskMode.FI_ONLY, shots=(5,), ablation="no_frame_info"),
    dict(mode=TaskMode.FI_ONLY, shots=(0,), stage1_from="x"),
    dict(mode=TaskMode.FI_ONLY, shots="schedule:Huge"),
    dict(mode=TaskMode.FI_ONLY, shots=(-1,)),
    dict(mode="bogus", shots=(0,)),
])
def test_spec_validation(kwargs):
    mode = kwargs.pop("mode")
    shots = kwargs.pop("shots")
    with pytest.raises(ConfigError):
        spec(mode, shots, **kwargs)


def test_spec_dict_roundtrip():
    s = spec(TaskMode.FSP_SINGLE_STAGE, "schedule:Small", max_shots=10)
    assert ExperimentSpec.from_dict(s.to_dict()) == s
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({**s.to_dict(), "extra": 1})
    d = s.to_dict()
    del d["split"]
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict(d)


def test_missing_client(store, split):
    with pytest.raises(ConfigError):
        run_experiment(spec(TaskMode.FI_ONLY, model_ids=("other",)), store, clients(store), split)


def test_budget_refused_before_calls(store, split):
    c = clients(store)
    with pytest.raises(BudgetExceeded) as err:
        run_experiment(spec(TaskMode.FSP_SINGLE_STAGE, (0, 5, 10)), store, c, split, max_prompt_chars=3000)
    assert err.value.shots == 5
    assert c["m"].provider.calls == 0


class Flaky(MockProvider):
    """Fails every call after the first ``ok`` calls."""

    def __init__(self, store, ok):
        super().__init__(store, model_id="m")
        self.ok = ok

    def send(self, request):
        if self.calls > self.ok:
            raise TransportError("connection reset")
        return super().send(request)


def test_resume_after_interruption(store, split, tmp_path):
    s = spec(TaskMode.FSP_SINGLE_STAGE, (0, 5))
    flaky = {"m": LLMClient(Flaky(store, 7), cache=tmp_path / "c", max_attempts=2, sleep=lambda x: None)}
    with pytest.raises(ProviderExhausted):
        run_experiment(s, store, flaky, split)
    warm = clients(store, cache=tmp_path / "c")
    resumed = run_experiment(s, store, warm, split)
    assert warm["m"].provider.calls == len(resumed.items) - 7
    assert resumed.totals["cached_items"] == 7
    fresh = run_experiment(s, store, clients(store, cache=tmp_path / "other"), split)
    assert resumed.canonical_json() == fresh.canonical_json()
    assert resumed.digest() == fresh.digest()


def test_warm_rerun_makes_no_calls(store, split, tmp_path):
    s = spec(TaskMode.FI_THEN_FSRL, (5,))
    cold = clients(store, cache=tmp_path)
    first = run_experiment(s, store, cold, split)
    assert cold["m"].provider.calls == 2 * len(split.eval_set)
    warm = clients(store, cache=tmp_path)
    second = run_experiment(s, store, warm, split)
    assert warm["m"].provider.calls == 0
    assert first.digest() == second.digest()


def test_stage_isolation(store, split):
    rec = run_experiment(spec(TaskMode.FI_THEN_FSRL, (10,)), store, clients(store), split)
    eval_ex = [store.example(i) for i in split.eval_set]
    for text in rec.prompts.values():
        for ex in eval_ex:
            assert ex.sentence not in text
    for it in rec.items:
        if it["stage"] == "fsrl":
            assert it["user_input"].startswith("Text: ")
            assert "arguments" not in it["user_input"] and "role" not in it["user_input"]
    fi = {it["sentence_id"]: it for it in rec.items if it["stage"] == "fi"}
    for it in rec.items:
        if it["stage"] == "fsrl":
            for inst in fi[it["sentence_id"]]["instances"]:
                assert inst["target_text"] in it["user_input"]


def test_stage1_reuse(store, split):
    fi = run_experiment(spec(TaskMode.FI_ONLY, (5,), name="fi"), store, clients(store), split)
    c = clients(store)
    rec = run_experiment(spec(TaskMode.FI_THEN_FSRL, (5,)), store, c, split, stage1=fi)
    assert rec.stage1_source == "record:fi"
    assert c["m"].provider.calls == len(split.eval_set)
    assert all(r[3].f1 == 1.0 for r in rec.report_rows())
    assert {it["stage"] for it in rec.items} == {"fsrl"}
    with pytest.raises(ConfigError):
        run_experiment(spec(TaskMode.FI_THEN_FSRL, (10,)), store, clients(store), split, stage1=fi)


def test_record_save_load(store, split, tmp_path):
    rec = run_experiment(spec(TaskMode.FSRL_GOLD, (0, 5)), store, clients(store), split)
    rec.save(tmp_path / "run")
    lines = (tmp_path / "run" / "items.jsonl").read_text().splitlines()
    assert len(lines) == len(rec.items) and json.loads(lines[0])["stage"] == "fsrl"
    again = RunRecord.load(tmp_path / "run")
    assert again.digest() == rec.digest()
    assert again.totals == rec.totals


def test_split_config_accepted(store, split_config):
    rec = run_experiment(spec(TaskMode.FI_ONLY, (0,)), store, clients(store), split_config)
    assert rec.split["eval_set"]


def test_primary_scope():
    assert primary_scope("fsp_single_stage") == "all_roles"
    assert primary_scope(TaskMode.FI_THEN_FSRL) == "fsrl:arguments_only"
