"""Fixture-based acceptance checks, shared by ``frameicl verify`` and the test suite.

Each ``check_*`` function returns a :class:`CheckResult`; none of them touch
the network. Criterion 11 needs a local FrameNet copy (``FRAMENET_DIR``) and
is reported as skipped without one; the live provider smoke test lives only
in the test suite.
"""
from __future__ import annotations

import hashlib
import os
import random
import tempfile
import time
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .dataset import SplitConfig, ShotProfile, shot_schedule, stratified_split
from .evaluation import LabeledItem, match_items, prf
from .fixtures import load_fixture_store
from .llm.client import LLMClient
from .llm.mock import Corrupt, EchoGold, MockProvider, instance_to_record
from .parsing import parse_prediction
from .prompts import AblationLevel, PromptConfig, render_prompt
from .reporting import report
from .runner import ExperimentSpec, TaskMode, run_experiment
from .store import Span
from .wire import TaskKind, format_user_input, gold_instance, gold_pair, serialize_output

FIXTURE_SPLIT = SplitConfig(("Killing", "Theft", "Rescuing"), 15, 10, 7)


@dataclass(frozen=True)
class CheckResult:
    number: int
    title: str
    passed: bool | None  # None = skipped
    detail: str
    seconds: float = 0.0

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "SKIP"}[self.passed]

    def line(self) -> str:
        return f"[{self.status}] criterion {self.number:>2}: {self.title} ({self.detail}; {self.seconds:.2f}s)"


def _timed(number, title, fn, limit=None) -> CheckResult:
    started = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crash is a failure, reported with its cause
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    secs = time.perf_counter() - started
    if passed and limit is not None and secs > limit:
        passed, detail = False, f"{detail}; exceeded {limit}s budget"
    return CheckResult(number, title, passed, detail, secs)


def _echo_clients(store, *names):
    return {n: LLMClient(MockProvider(store, EchoGold(), model_id=n)) for n in names}


# -- 1 -------------------------------------------------------------------------

def roundtrip_failures(store=None) -> list[str]:
    store = store or load_fixture_store()
    bad = []
    for ex in store.examples:
        gold = gold_instance(ex, store)
        for task in TaskKind:
            expected = gold.without_arguments() if task is TaskKind.FI else gold
            pairs = [gold_pair(ex)] if task is TaskKind.FSRL else None
            out = parse_prediction(task, serialize_output([gold], task), ex.sentence, store, expected_pairs=pairs)
            if out.instances != (expected,) or out.warnings:
                bad.append(f"{ex.id}/{task.value}")
    return bad


def check_roundtrip() -> CheckResult:
    def run():
        store = load_fixture_store()
        bad = roundtrip_failures(store)
        return not bad, f"{len(store.examples)} examples x 3 tasks, {len(bad)} mismatches"
    return _timed(1, "serialize(gold) -> parse == gold", run, limit=1.0)


# -- 2 -------------------------------------------------------------------------

def echo_gold_records(store=None):
    store = store or load_fixture_store()
    clients = _echo_clients(store, "echo")
    records = []
    for mode in TaskMode:
        shots = [5] if mode is TaskMode.FI_THEN_FSRL else [0, 5]
        spec = ExperimentSpec(f"echo_{mode.value}", mode, "fixtures", shots, ["echo"])
        records.append(run_experiment(spec, store, clients, FIXTURE_SPLIT))
    return records


def check_echo_gold() -> CheckResult:
    def run():
        records = echo_gold_records()
        f1s = [rep.f1 for r in records for *_, rep, _ in r.report_rows()]
        return all(f == 1.0 for f in f1s), f"{len(records)} modes, {len(f1s)} scope rows, min F1 {min(f1s)}"
    return _timed(2, "EchoGold end-to-end F1 = 1.0 in every scope", run, limit=10.0)


# -- 3 -------------------------------------------------------------------------

def _log_items(records, task: TaskKind):
    """Items keyed the way each task is scored, from the mock's raw records."""
    out = []
    for rec in records:
        if task is TaskKind.FI:
            out.append((rec["frame"], "Target", *rec["target"]))
            continue
        if task is TaskKind.FSP:
            out.append((rec["frame"], "Target", *rec["target"]))
        for role, s, e in rec["arguments"]:
            out.append((rec["frame"], role, s, e))
    return out


def expected_from_log(store, eval_ids, task: TaskKind, log) -> tuple[int, int, int]:
    """tp/fp/fn implied by the perturbation log; unlogged items are echoed gold."""
    by_input = {e["input_sha256"]: e for e in log if e["task"] == task.value}
    tp = fp = fn = 0
    for sid in eval_ids:
        ex = store.example(sid)
        gold_recs = [instance_to_record(gold_instance(ex, store))]
        pairs = [gold_pair(ex)] if task is TaskKind.FSRL else None
        digest = hashlib.sha256(format_user_input(task, ex.sentence, pairs).encode("utf-8")).hexdigest()
        emitted = by_input[digest]["emitted"] if digest in by_input else gold_recs
        g = Counter(_log_items(gold_recs, task))
        p = Counter(_log_items(emitted, task))
        both = sum((g & p).values())
        tp += both
        fp += sum(p.values()) - both
        fn += sum(g.values()) - both
    return tp, fp, fn


def corruption_comparison(rate=0.3, seed=42):
    store = load_fixture_store()
    split = stratified_split(store, FIXTURE_SPLIT)
    rows = []
    for mode, task, scope in (
        (TaskMode.FSP_SINGLE_STAGE, TaskKind.FSP, "all_roles"),
        (TaskMode.FI_ONLY, TaskKind.FI, "fi:pair_exact"),
        (TaskMode.FSRL_GOLD, TaskKind.FSRL, "arguments_only"),
    ):
        provider = MockProvider(store, Corrupt(rate, seed), model_id="noisy")
        spec = ExperimentSpec(f"corrupt_{mode.value}", mode, "fixtures", [5], ["noisy"])
        rec = run_experiment(spec, store, {"noisy": LLMClient(provider)}, split)
        measured = next(rep for _, _, s, rep, _ in rec.report_rows() if s == scope)
        tp, fp, fn = expected_from_log(store, split.eval_set, task, provider.perturbation_log)
        rows.append((mode.value, measured.f1, prf(tp, fp, fn)[2], len(provider.perturbation_log)))
    return rows


def check_corruption() -> CheckResult:
    def run():
        rows = corruption_comparison()
        ok = all(abs(m - e) <= 1e-9 for _, m, e, _ in rows)
        perturbed = sum(n for *_, n in rows)
        detail = ", ".join(f"{name} {m:.4f} vs {e:.4f}" for name, m, e, _ in rows)
        return ok and perturbed > 0 and any(m < 1.0 for _, m, _, _ in rows), f"{detail}; {perturbed} perturbed"
    return _timed(3, "Corrupt(0.3, 42) F1 equals F1 implied by the log", run)


# -- 4 -------------------------------------------------------------------------

def brute_force_matching(gold, pred) -> int:
    """Maximum matching between two item lists by exhaustive search over assignments."""
    gold, pred = list(gold), list(pred)

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> int:
        if i == len(gold):
            return 0
        result = best(i + 1, used)
        for j, p in enumerate(pred):
            if not used >> j & 1 and p == gold[i]:
                result = max(result, 1 + best(i + 1, used | 1 << j))
        return result

    return best(0, 0)


def random_instance(rng: random.Random, max_items: int = 8):
    roles = ["Target", "Killer", "Victim", "Goods"]
    gold, pred = [], []
    for sid in range(rng.randint(1, 3)):
        def item():
            s = rng.randint(0, 6)
            return LabeledItem(f"s{sid}", rng.choice(["Killing", "Theft"]), rng.choice(roles), Span(s, s + rng.randint(1, 3)))
        g = [item() for _ in range(rng.randint(0, max_items))]
        # predictions copy some gold items and add noise, so matches are common
        p = [rng.choice(g) if g and rng.random() < 0.6 else item() for _ in range(rng.randint(0, max_items))]
        gold.append(g)
        pred.append(p)
    return gold, pred


def check_evaluator_oracle(n=1000, seed=0) -> CheckResult:
    def run():
        rng = random.Random(seed)
        bad = 0
        for _ in range(n):
            gold, pred = random_instance(rng)
            flat_g = [x for g in gold for x in g]
            flat_p = [x for p in pred for x in p]
            tp, fp, fn, _ = match_items(flat_g, flat_p)
            oracle = sum(brute_force_matching(g, p) for g, p in zip(gold, pred))
            if tp != oracle or tp + fn != len(flat_g) or tp + fp != len(flat_p):
                bad += 1
        return bad == 0, f"{n} random instances, {bad} disagreements"
    return _timed(4, "match_items equals brute-force maximum matching", run, limit=30.0)


# -- 5 -------------------------------------------------------------------------

def spot_fixture():
    """4 gold items, 5 predictions, 3 of which are exact matches."""
    def it(role, s, e, frame="Killing"):
        return LabeledItem("s1", frame, role, Span(s, e))
    gold = [it("Target", 5, 11), it("Killer", 0, 4), it("Victim", 12, 20), it("Instrument", 26, 35)]
    pred = [it("Target", 5, 11), it("Killer", 0, 4), it("Victim", 12, 20),
            it("Instrument", 22, 35), it("Means", 40, 45)]
    return gold, pred


def check_spot_values() -> CheckResult:
    def run():
        from .evaluation import micro_report
        gold, pred = spot_fixture()
        rep = micro_report(gold, pred)
        want = (0.6, 0.75, 2 / 3)
        got = (rep.precision, rep.recall, rep.f1)
        ok = all(abs(a - b) <= 0.0005 for a, b in zip(got, want))
        return ok, "P={:.3f} R={:.3f} F1={:.3f}".format(*got)
    return _timed(5, "4 gold / 5 pred / 3 match scores P=0.600 R=0.750 F1=0.667", run)


# -- 6 -------------------------------------------------------------------------

def check_prompt_prefix() -> CheckResult:
    def run():
        store = load_fixture_store()
        split = stratified_split(store, SplitConfig(FIXTURE_SPLIT.frame_names, 25, 10, 7))
        problems = 0
        for task in TaskKind:
            prev = ""
            for k in (0, 5, 10, 25):
                cfg = PromptConfig(task, FIXTURE_SPLIT.frame_names, split.icl_pool[:k])
                a, b = render_prompt(store, cfg), render_prompt(store, cfg)
                problems += a.text != b.text
                cur = a.section("Examples") if "Examples" in a.section_offsets else ""
                problems += not cur.startswith(prev)
                prev = cur
        return problems == 0, f"3 tasks x k in (0, 5, 10, 25), {problems} problems"
    return _timed(6, "prompts deterministic, Examples sections prefix-stable", run)


# -- 7 -------------------------------------------------------------------------

def check_schedules() -> CheckResult:
    def run():
        small = shot_schedule(ShotProfile.SMALL, 150)
        large = shot_schedule(ShotProfile.LARGE, 150)
        ok = small == [0, 5, 10, 25, 50, 75, 100, 125, 150] and large == [0, 50, 100, 150]
        return ok, f"Small={small} Large={large}"
    return _timed(7, "shot schedules for max 150", run)


# -- 8 -------------------------------------------------------------------------

def hand_apportion(n, counts):
    """Independent largest-remainder in integer arithmetic.

    Ties on the remainder go to the larger stratum, then to key order.
    No capacity handling: callers only use it where no cap binds.
    """
    total = sum(counts.values())
    keys = list(counts)
    base = {k: n * counts[k] // total for k in keys}
    rem = {k: n * counts[k] % total for k in keys}
    for k in sorted(keys, key=lambda k: (-rem[k], -counts[k], keys.index(k)))[: n - sum(base.values())]:
        base[k] += 1
    return base


# worked by hand from the fixture LU sizes (20, 10, 6, 3, 8, 4 exemplars)
HAND_ICL = {"Killing/kill.v": 6, "Killing/murder.v": 3, "Rescuing/rescue.v": 2,
            "Rescuing/save.v": 1, "Theft/steal.v": 2, "Theft/rob.v": 1}
HAND_EVAL = {"Killing/kill.v": 4, "Killing/murder.v": 2, "Rescuing/rescue.v": 1,
             "Rescuing/save.v": 1, "Theft/steal.v": 1, "Theft/rob.v": 1}


def check_split_contract() -> CheckResult:
    def run():
        store = load_fixture_store()
        a = stratified_split(store, FIXTURE_SPLIT)
        b = stratified_split(store, FIXTURE_SPLIT)
        sizes_ok = len(a.icl_pool) == 15 and len(a.eval_set) == 10
        disjoint = not set(a.icl_pool) & set(a.eval_set)
        deterministic = a == b
        avail = Counter(f"{ex.frame_name}/{ex.lu_name}" for ex in store.examples)
        got_icl = Counter(f"{store.example(i).frame_name}/{store.example(i).lu_name}" for i in a.icl_pool)
        got_eval = Counter(f"{store.example(i).frame_name}/{store.example(i).lu_name}" for i in a.eval_set)
        counts_ok = (dict(got_icl) == HAND_ICL == hand_apportion(15, avail)
                     and dict(got_eval) == HAND_EVAL == hand_apportion(10, avail))
        ok = sizes_ok and disjoint and deterministic and counts_ok
        return ok, (f"sizes {len(a.icl_pool)}/{len(a.eval_set)}, disjoint={disjoint}, "
                    f"deterministic={deterministic}, per-LU counts match hand computation={counts_ok}")
    return _timed(8, "stratified split sizes, disjointness, determinism, per-LU counts", run)


# -- 9 -------------------------------------------------------------------------

def call_counts(cache_dir) -> tuple[int, int, int]:
    """(eval items, cold-run calls, warm-run calls) for a two-stage run."""
    store = load_fixture_store()
    split = stratified_split(store, FIXTURE_SPLIT)
    spec = ExperimentSpec("calls", TaskMode.FI_THEN_FSRL, "fixtures", [5], ["echo"])
    counts = []
    for _ in range(2):
        provider = MockProvider(store, EchoGold(), model_id="echo")
        run_experiment(spec, store, {"echo": LLMClient(provider, cache=cache_dir)}, split)
        counts.append(provider.calls)
    return len(split.eval_set), counts[0], counts[1]


def check_call_counts() -> CheckResult:
    def run():
        with tempfile.TemporaryDirectory() as tmp:
            n, cold, warm = call_counts(tmp)
        return cold == 2 * n and warm == 0, f"n={n}, 2 stages, cold={cold}, warm={warm}"
    return _timed(9, "cold run makes n calls per stage, warm run makes 0", run)


# -- 10 ------------------------------------------------------------------------

def ablation_containment_problems(store=None) -> list[str]:
    store = store or load_fixture_store()
    problems = []
    for task in TaskKind:
        prompts = [render_prompt(store, PromptConfig(task, FIXTURE_SPLIT.frame_names, (), lvl)) for lvl in AblationLevel]
        names = [set(p.section_offsets) for p in prompts]
        if not (names[0] < names[1] <= names[2]):
            problems.append(f"{task.value}: section sets {names}")
        for small, big in zip(prompts, prompts[1:]):
            for sec in small.section_offsets:
                lines = small.section(sec).splitlines()
                big_lines = iter(big.section(sec).splitlines())
                if not all(any(line == other for other in big_lines) for line in lines):
                    problems.append(f"{task.value}: {sec} of {small.config.ablation.value} not contained")
    return problems


def check_ablation() -> CheckResult:
    def run():
        problems = ablation_containment_problems()
        store = load_fixture_store()
        clients = _echo_clients(store, "echo")
        records = []
        for level, shots in (("no_frame_info", [0]), ("frame_def_only", [0]), ("full", [0, 5])):
            spec = ExperimentSpec(f"abl_{level}", TaskMode.FI_ONLY, "fixtures", shots, ["echo"], ablation=level)
            records.append(run_experiment(spec, store, clients, FIXTURE_SPLIT))
        with tempfile.TemporaryDirectory() as tmp:
            report(records, tmp)
            lines = (Path(tmp) / "ablation.csv").read_text(encoding="utf-8").splitlines()
        header_ok = lines[0] == "task_mode,model_id,a,b,c,d"
        ok = not problems and header_ok and len(lines) == 2
        return ok, f"{len(problems)} containment problems, ablation.csv {lines[:2]}"
    return _timed(10, "ablation containment and a-d ablation table", run)


# -- 11 ------------------------------------------------------------------------

KILLING_CORE = {"Killer", "Cause", "Victim", "Instrument", "Means"}
EXEMPLAR_SENTENCE = "killed or captured about a quarter of the enemy"


def check_framenet_import(framenet_dir=None) -> CheckResult:
    framenet_dir = framenet_dir or os.environ.get("FRAMENET_DIR")
    title = "FrameNet Killing import: core elements and worked exemplar"
    if not framenet_dir:
        return CheckResult(11, title, None, "FRAMENET_DIR not set")

    def run():
        from .framenet_xml import import_framenet
        from .store import core_elements

        root = Path(framenet_dir)
        store = import_framenet(root / "frame", root / "lu", ["Killing"])
        core = {fe.name for fe in core_elements(store, "Killing")}
        hits = [ex for ex in store.examples_for_frame("Killing") if EXEMPLAR_SENTENCE in ex.sentence]
        grounded = False
        for ex in hits:
            args = {a.fe_name: a.span.slice(ex.sentence) for a in ex.arguments}
            if (ex.target_text == "killed" and args.get("Killer") == "They"
                    and args.get("Victim", "").startswith("about a quarter of the enemy")):
                grounded = True
        return core == KILLING_CORE and grounded, f"core={sorted(core)}, exemplar grounded={grounded}"
    return _timed(11, title, run)


CHECKS = (
    check_roundtrip, check_echo_gold, check_corruption, check_evaluator_oracle, check_spot_values,
    check_prompt_prefix, check_schedules, check_split_contract, check_call_counts, check_ablation,
    check_framenet_import,
)


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS]
