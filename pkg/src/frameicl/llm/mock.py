"""Offline provider that answers from the gold annotations of a FrameStore.

Modes:

* ``EchoGold()`` returns the wire serialization of the gold annotation.
* ``Corrupt(rate, seed)`` perturbs the gold answer of each item with
  probability ``rate``: it drops an argument, moves one boundary by one word,
  or swaps the frame name. Every perturbation is recorded in
  ``perturbation_log`` together with the exact items emitted.
* ``FixedText(text)`` returns ``text`` for every request.
"""
from __future__ import annotations

import hashlib
import json
import random
import re
import threading
from dataclasses import dataclass

from ..errors import UnknownSentence
from ..store import FrameStore, Span
from ..wire import (
    FrameInstance,
    FrameTargetPair,
    RoleFiller,
    TaskKind,
    gold_instance,
    parse_user_input,
    serialize_output,
)
from .client import CompletionRequest, Provider


@dataclass(frozen=True)
class EchoGold:
    pass


@dataclass(frozen=True)
class Corrupt:
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")


@dataclass(frozen=True)
class FixedText:
    text: str


_TOKEN_RE = re.compile(r"\S+")


def instance_to_record(inst: FrameInstance) -> dict:
    return {
        "frame": inst.frame_name,
        "target": [inst.pair.target.start, inst.pair.target.end],
        "arguments": [[a.role, a.span.start, a.span.end] for a in inst.arguments],
    }


class MockProvider(Provider):
    network = False

    def __init__(self, store: FrameStore, mode=EchoGold(), model_id: str = "mock", core_only: bool = True,
                 max_in_flight: int = 8):
        super().__init__(model_id, rate_limit_per_min=None, max_in_flight=max_in_flight)
        self.store = store
        self.mode = mode
        self.core_only = core_only
        self._by_sentence = {}
        for ex in store.examples:
            self._by_sentence.setdefault(ex.sentence, ex)
        self.perturbation_log: list[dict] = []
        self._log_lock = threading.Lock()

    @staticmethod
    def _infer_task(request: CompletionRequest, pairs) -> TaskKind:
        if request.task is not None:
            return request.task
        if pairs is not None:
            return TaskKind.FSRL
        return TaskKind.FSP if '"arguments"' in request.system_prompt else TaskKind.FI

    def _gold(self, sentence: str):
        try:
            return self._by_sentence[sentence]
        except KeyError:
            raise UnknownSentence(sentence) from None

    def _base_instances(self, task: TaskKind, sentence: str, pairs) -> list[FrameInstance]:
        example = self._gold(sentence)
        gold = gold_instance(example, self.store, self.core_only)
        if task is TaskKind.FI:
            return [gold.without_arguments()]
        if task is TaskKind.FSP:
            return [gold]
        out = []
        for p in pairs or ():
            if (p.get("frame"), p.get("target")) == (gold.frame_name, gold.pair.target_text):
                out.append(gold)
            else:
                span = Span(0, 1)
                idx = sentence.find(p.get("target", "")) if p.get("target") else -1
                if idx >= 0:
                    span = Span(idx, idx + len(p["target"]))
                out.append(FrameInstance(FrameTargetPair(p.get("frame", ""), span, p.get("target", ""))))
        return out

    def send(self, request: CompletionRequest) -> tuple[str, dict]:
        mode = self.mode
        if isinstance(mode, FixedText):
            return mode.text, {"mock_mode": "fixed_text"}
        sentence, pairs = parse_user_input(request.user_input)
        task = self._infer_task(request, pairs)
        instances = self._base_instances(task, sentence, pairs)
        meta = {"mock_mode": "echo_gold" if isinstance(mode, EchoGold) else "corrupt"}
        if isinstance(mode, Corrupt) and mode.rate > 0:
            rng = random.Random(f"{mode.seed}|{task.value}|{request.user_input}")
            if rng.random() < mode.rate:
                instances, entry = self._perturb(rng, task, sentence, instances)
                entry.update(
                    task=task.value,
                    sentence=sentence,
                    input_sha256=hashlib.sha256(request.user_input.encode("utf-8")).hexdigest(),
                )
                with self._log_lock:
                    self.perturbation_log.append(entry)
                meta["perturbation"] = entry["kind"]
        return serialize_output(instances, task), meta

    # -- perturbations ------------------------------------------------------

    def _shifted(self, sentence: str, span: Span, others) -> list[Span]:
        tokens = [(m.start(), m.end()) for m in _TOKEN_RE.finditer(sentence)]
        cands = []
        after = [t for t in tokens if t[0] >= span.end]
        before = [t for t in tokens if t[1] <= span.start]
        inside = [t for t in tokens if t[0] >= span.start and t[1] <= span.end]
        if after:
            cands.append(Span(span.start, after[0][1]))
        if before:
            cands.append(Span(before[-1][0], span.end))
        if len(inside) >= 2:
            cands.append(Span(span.start, inside[-2][1]))
            cands.append(Span(inside[1][0], span.end))
        valid = []
        for c in cands:
            text = c.slice(sentence)
            if any(c.overlaps(o) for o in others):
                continue
            first = sentence.find(text)
            if first != c.start or sentence.find(text, first + 1) != -1:
                continue
            valid.append(c)
        return valid

    def _perturb(self, rng: random.Random, task: TaskKind, sentence: str, instances):
        # operate on the first instance that has something to perturb
        idx = 0
        inst = instances[idx] if instances else None
        kinds = []
        if inst is not None:
            if task is not TaskKind.FI and inst.arguments:
                kinds.append("drop_argument")
            kinds.append("shift_boundary")
            if task is not TaskKind.FSRL and len(self.store.frame_names) > 1:
                kinds.append("swap_frame")
        rng.shuffle(kinds)
        for kind in kinds:
            result = getattr(self, f"_{kind}")(rng, task, sentence, inst)
            if result is None:
                continue
            new_inst, detail = result
            emitted = list(instances)
            if new_inst is None:
                emitted.pop(idx)
            else:
                emitted[idx] = new_inst
            entry = {
                "kind": kind,
                "detail": detail,
                "gold": [instance_to_record(i) for i in instances],
                "emitted": [instance_to_record(i) for i in emitted],
            }
            return emitted, entry
        entry = {
            "kind": "none",
            "detail": "nothing to perturb",
            "gold": [instance_to_record(i) for i in instances],
            "emitted": [instance_to_record(i) for i in instances],
        }
        return list(instances), entry

    def _drop_argument(self, rng, task, sentence, inst):
        i = rng.randrange(len(inst.arguments))
        dropped = inst.arguments[i]
        args = inst.arguments[:i] + inst.arguments[i + 1:]
        return FrameInstance(inst.pair, args), f"dropped {dropped.role}"

    def _shift_boundary(self, rng, task, sentence, inst):
        slots = [] if task is TaskKind.FSRL else [None]
        slots += list(range(len(inst.arguments)))
        rng.shuffle(slots)
        for slot in slots:
            spans = [inst.pair.target] + [a.span for a in inst.arguments]
            old = inst.pair.target if slot is None else inst.arguments[slot].span
            others = [s for s in spans if s != old]
            options = self._shifted(sentence, old, others)
            if not options:
                continue
            new = rng.choice(options)
            text = new.slice(sentence)
            if slot is None:
                pair = FrameTargetPair(inst.frame_name, new, text)
                return FrameInstance(pair, inst.arguments), f"target {[old.start, old.end]} -> {[new.start, new.end]}"
            arg = inst.arguments[slot]
            args = list(inst.arguments)
            args[slot] = RoleFiller(arg.role, new, text)
            return FrameInstance(inst.pair, args), f"{arg.role} {[old.start, old.end]} -> {[new.start, new.end]}"
        return None

    def _swap_frame(self, rng, task, sentence, inst):
        choices = sorted(n for n in self.store.frame_names if n != inst.frame_name)
        new_frame = rng.choice(choices)
        allowed = set(self.store.frame(new_frame).element_names(core_only=self.core_only))
        args = tuple(a for a in inst.arguments if a.role in allowed)
        pair = FrameTargetPair(new_frame, inst.pair.target, inst.pair.target_text)
        return FrameInstance(pair, args), f"{inst.frame_name} -> {new_frame}"

    def log_as_json(self) -> str:
        with self._log_lock:
            entries = sorted(self.perturbation_log, key=lambda e: (e["task"], e["input_sha256"]))
        return json.dumps(entries, ensure_ascii=False, indent=1)


def mock_provider(store: FrameStore, mode=EchoGold(), model_id: str = "mock", core_only: bool = True) -> MockProvider:
    return MockProvider(store, mode, model_id=model_id, core_only=core_only)
