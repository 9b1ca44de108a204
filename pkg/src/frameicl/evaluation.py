"""Strict micro precision / recall / F1 over labeled spans.

An item is a (sentence_id, frame, role, span) tuple; a prediction counts only
when all four fields equal a gold item. Each gold item absorbs at most one
prediction, so scoring is a multiset intersection.

When gold and predictions are both empty, P = R = F1 = 1.0; when exactly one
side is empty, all three are 0.0.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping

from .store import TARGET_ROLE, Span
from .wire import FrameInstance

EMPTY_CONVENTION = "both sides empty -> P=R=F1=1.0; exactly one side empty -> 0.0"
NAME_ONLY_CONVENTION = "frame names matched as a per-sentence multiset"


@dataclass(frozen=True, order=True)
class LabeledItem:
    sentence_id: str
    frame_name: str
    role: str
    span: Span


class Scope(str, enum.Enum):
    ALL_ROLES = "all_roles"
    TARGET_ONLY = "target_only"
    ARGUMENTS_ONLY = "arguments_only"


class FIView(str, enum.Enum):
    PAIR_EXACT = "pair_exact"
    NAME_ONLY = "name_only"
    TARGET_ONLY = "target_only"


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return prf(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return prf(self.tp, self.fp, self.fn)[2]

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class EvalReport:
    scope: str
    tp: int
    fp: int
    fn: int
    per_attribute: Mapping[str, Counts] = field(default_factory=dict)
    per_frame: Mapping[str, Counts] = field(default_factory=dict)
    notes: tuple[str, ...] = (EMPTY_CONVENTION,)

    @property
    def counts(self) -> Counts:
        return Counts(self.tp, self.fp, self.fn)

    @property
    def precision(self) -> float:
        return self.counts.precision

    @property
    def recall(self) -> float:
        return self.counts.recall

    @property
    def f1(self) -> float:
        return self.counts.f1

    def as_dict(self) -> dict:
        return {
            "scope": self.scope,
            **self.counts.as_dict(),
            "per_attribute": {k: v.as_dict() for k, v in self.per_attribute.items()},
            "per_frame": {k: v.as_dict() for k, v in self.per_frame.items()},
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        def counts(m):
            return {k: Counts(v["tp"], v["fp"], v["fn"]) for k, v in m.items()}

        return cls(
            d["scope"], d["tp"], d["fp"], d["fn"],
            counts(d.get("per_attribute", {})), counts(d.get("per_frame", {})),
            tuple(d.get("notes", ())),
        )


def match_items(gold: Iterable[Hashable], pred: Iterable[Hashable]):
    """Strict matching of two multisets.

    Returns ``(tp, fp, fn, matched_pairs)`` where ``matched_pairs`` lists one
    ``(gold_item, pred_item)`` tuple per true positive.
    """
    gold_c, pred_c = Counter(gold), Counter(pred)
    common = gold_c & pred_c
    tp = sum(common.values())
    fp = sum(pred_c.values()) - tp
    fn = sum(gold_c.values()) - tp
    matched = [(item, item) for item, n in sorted(common.items(), key=lambda kv: repr(kv[0])) for _ in range(n)]
    return tp, fp, fn, matched


def _breakdown(gold, pred, key: Callable) -> dict[str, Counts]:
    groups: dict[str, tuple[list, list]] = {}
    for item in gold:
        groups.setdefault(key(item), ([], []))[0].append(item)
    for item in pred:
        groups.setdefault(key(item), ([], []))[1].append(item)
    out = {}
    for name in sorted(groups):
        g, p = groups[name]
        tp, fp, fn, _ = match_items(g, p)
        out[name] = Counts(tp, fp, fn)
    return out


def _in_scope(item: LabeledItem, scope: Scope) -> bool:
    if scope is Scope.TARGET_ONLY:
        return item.role == TARGET_ROLE
    if scope is Scope.ARGUMENTS_ONLY:
        return item.role != TARGET_ROLE
    return True


def micro_report(gold: Iterable[LabeledItem], pred: Iterable[LabeledItem], scope=Scope.ALL_ROLES) -> EvalReport:
    scope = Scope(scope)
    gold = [i for i in gold if _in_scope(i, scope)]
    pred = [i for i in pred if _in_scope(i, scope)]
    tp, fp, fn, _ = match_items(gold, pred)
    return EvalReport(
        scope=scope.value,
        tp=tp,
        fp=fp,
        fn=fn,
        per_attribute=_breakdown(gold, pred, lambda i: i.role),
        per_frame=_breakdown(gold, pred, lambda i: i.frame_name),
    )


def instance_items(sentence_id: str, instances: Iterable[FrameInstance]) -> list[LabeledItem]:
    """Flatten frame instances into Target + argument items."""
    items = []
    for inst in instances:
        items.append(LabeledItem(sentence_id, inst.frame_name, TARGET_ROLE, inst.pair.target))
        for arg in inst.arguments:
            items.append(LabeledItem(sentence_id, inst.frame_name, arg.role, arg.span))
    return items


def corpus_items(instances_by_sentence: Mapping[str, Iterable[FrameInstance]]) -> list[LabeledItem]:
    items = []
    for sid, instances in instances_by_sentence.items():
        items.extend(instance_items(sid, instances))
    return items


def _pairs(pairs_by_sentence):
    for sid, pairs in pairs_by_sentence.items():
        for p in pairs:
            yield sid, getattr(p, "pair", p)


def fi_report(gold_pairs: Mapping[str, Iterable], pred_pairs: Mapping[str, Iterable]) -> dict[FIView, EvalReport]:
    """Score frame-target pairs as whole pairs, by frame name, and by target span.

    Both arguments map sentence ids to FrameTargetPairs (or FrameInstances).
    """
    gold = list(_pairs(gold_pairs))
    pred = list(_pairs(pred_pairs))
    keys = {
        FIView.PAIR_EXACT: lambda sid, p: (sid, p.frame_name, p.target),
        FIView.NAME_ONLY: lambda sid, p: (sid, p.frame_name),
        FIView.TARGET_ONLY: lambda sid, p: (sid, p.target),
    }
    reports = {}
    for view, key in keys.items():
        g = [key(sid, p) for sid, p in gold]
        q = [key(sid, p) for sid, p in pred]
        tp, fp, fn, _ = match_items(g, q)
        per_frame = {}
        if view is not FIView.TARGET_ONLY:
            per_frame = _breakdown(g, q, lambda k: k[1])
        notes = (EMPTY_CONVENTION, NAME_ONLY_CONVENTION) if view is FIView.NAME_ONLY else (EMPTY_CONVENTION,)
        reports[view] = EvalReport(view.value, tp, fp, fn, {view.value: Counts(tp, fp, fn)}, per_frame, notes)
    return reports
