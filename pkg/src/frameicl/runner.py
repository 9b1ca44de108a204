"""Experiment orchestration: split -> prompts -> client -> parser -> evaluator.

Four task modes are supported:

fsp_single_stage  one call per item returns frames, targets and arguments
fi_only           frame-target pairs only, scored in three views
fsrl_gold         arguments for the gold pair of each item
fi_then_fsrl      FI, then FSRL on each model's own detected pairs

Cells (model x shot count) run one after another; items within a cell may
run concurrently. Every item response is kept in the RunRecord so that a
record can be re-scored or audited without calling any provider.
"""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .dataset import DatasetSplit, SplitConfig, ShotProfile, shot_schedule, stratified_split
from .errors import BudgetExceeded, ConfigError, ProviderExhausted, RateLimited, TransportError
from .estimators import ArgumentLabeler, FrameIdentifier, FrameSemanticParser, ItemResult
from .evaluation import EvalReport, FIView, Scope, corpus_items, fi_report, micro_report
from .llm.client import DEFAULT_MAX_OUTPUT, DEFAULT_TEMPERATURE
from .prompts import AblationLevel, PromptConfig, estimate_prompt_budget, render_prompt, template_digests
from .store import FrameStore, Span
from .wire import FrameInstance, FrameTargetPair, RoleFiller, TaskKind, gold_instance, gold_pair

log = logging.getLogger(__name__)

RECORD_VERSION = 1


class TaskMode(str, enum.Enum):
    FSP_SINGLE_STAGE = "fsp_single_stage"
    FI_ONLY = "fi_only"
    FSRL_GOLD = "fsrl_gold"
    FI_THEN_FSRL = "fi_then_fsrl"


# scopes reported per mode; the first is the headline number
MODE_SCOPES = {
    TaskMode.FSP_SINGLE_STAGE: ("all_roles", "target_only", "arguments_only"),
    TaskMode.FI_ONLY: ("fi:pair_exact", "fi:name_only", "fi:target_only"),
    TaskMode.FSRL_GOLD: ("arguments_only",),
    TaskMode.FI_THEN_FSRL: ("fsrl:arguments_only", "fi+fsrl:all_roles",
                            "fi:pair_exact", "fi:name_only", "fi:target_only"),
}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    task_mode: TaskMode
    split: str
    shots: tuple[int, ...] | str
    model_ids: tuple[str, ...]
    frames: tuple[str, ...] = ()
    ablation: AblationLevel = AblationLevel.FULL_FRAME_INFO
    core_only: bool = True
    max_shots: int | None = None
    temperature: float = DEFAULT_TEMPERATURE
    max_output: int = DEFAULT_MAX_OUTPUT
    stage1_from: str | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "task_mode", TaskMode(self.task_mode))
            object.__setattr__(self, "ablation", AblationLevel(self.ablation))
        except ValueError as exc:
            raise ConfigError(f"experiment {self.name!r}: {exc}") from None
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.name:
            raise ConfigError("experiment name is required")
        if not self.model_ids:
            raise ConfigError(f"experiment {self.name!r}: model_ids is empty")
        if isinstance(self.shots, str):
            self._profile()
        else:
            shots = tuple(int(s) for s in self.shots)
            if not shots or any(s < 0 for s in shots):
                raise ConfigError(f"experiment {self.name!r}: shots must be non-negative counts")
            object.__setattr__(self, "shots", shots)
        if self.task_mode is TaskMode.FI_THEN_FSRL and (isinstance(self.shots, str) or len(self.shots) != 1):
            raise ConfigError(f"experiment {self.name!r}: fi_then_fsrl uses one shot count for both stages")
        if self.ablation is not AblationLevel.FULL_FRAME_INFO and self.shots != (0,):
            raise ConfigError(f"experiment {self.name!r}: ablated prompts are zero-shot; use shots: [0]")
        if self.stage1_from and self.task_mode is not TaskMode.FI_THEN_FSRL:
            raise ConfigError(f"experiment {self.name!r}: stage1_from only applies to fi_then_fsrl")

    def _profile(self) -> ShotProfile:
        kind, _, name = self.shots.partition(":")
        try:
            if kind != "schedule":
                raise ValueError
            return ShotProfile(name)
        except ValueError:
            raise ConfigError(
                f"experiment {self.name!r}: shots must be a list or 'schedule:Small|Large', got {self.shots!r}"
            ) from None

    def resolve_shots(self, pool_size: int) -> list[int]:
        if isinstance(self.shots, str):
            top = pool_size if self.max_shots is None else self.max_shots
            shots = shot_schedule(self._profile(), top)
        else:
            shots = list(self.shots)
        too_many = [s for s in shots if s > pool_size]
        if too_many:
            raise ConfigError(f"experiment {self.name!r}: shot counts {too_many} exceed the ICL pool of {pool_size}")
        return shots

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "task_mode": self.task_mode.value,
            "split": self.split,
            "shots": self.shots if isinstance(self.shots, str) else list(self.shots),
            "model_ids": list(self.model_ids),
            "frames": list(self.frames),
            "ablation": self.ablation.value,
            "core_only": self.core_only,
            "max_shots": self.max_shots,
            "temperature": self.temperature,
            "max_output": self.max_output,
            "stage1_from": self.stage1_from,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"experiment {d.get('name')!r}: unknown keys {sorted(unknown)}")
        for key in ("name", "task_mode", "split", "shots", "model_ids"):
            if key not in d:
                raise ConfigError(f"experiment {d.get('name')!r}: missing {key!r}")
        return cls(**d)


# -- instance (de)serialization for records ---------------------------------

def instance_to_json(inst: FrameInstance) -> dict:
    return {
        "frame": inst.frame_name,
        "target": [inst.pair.target.start, inst.pair.target.end],
        "target_text": inst.pair.target_text,
        "arguments": [{"role": a.role, "span": [a.span.start, a.span.end], "text": a.text} for a in inst.arguments],
    }


def instance_from_json(d: Mapping) -> FrameInstance:
    pair = FrameTargetPair(d["frame"], Span(*d["target"]), d["target_text"])
    return FrameInstance(pair, tuple(RoleFiller(a["role"], Span(*a["span"]), a["text"]) for a in d["arguments"]))


def _item_entry(model_id: str, shots: int, stage: TaskKind, sid: str, r: ItemResult) -> dict:
    return {
        "model_id": model_id,
        "shots": shots,
        "stage": stage.value,
        "sentence_id": sid,
        "prompt_digest": r.prompt_digest,
        "user_input": r.user_input,
        "raw": r.raw,
        "instances": [instance_to_json(i) for i in r.outcome.instances],
        "warnings": [[w.code, w.detail] for w in r.outcome.warnings],
        "dropped": list(r.outcome.dropped),
        "refused": r.refused,
        "cached": r.cached,
        "meta": r.provider_meta,
    }


_VOLATILE_ITEM_KEYS = ("cached", "meta")


@dataclass
class RunRecord:
    spec: dict
    split: dict
    template_digests: dict
    shots: list
    items: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    prompts: dict = field(default_factory=dict)
    stage1_source: str | None = None
    totals: dict = field(default_factory=dict)
    version: int = RECORD_VERSION

    @property
    def name(self) -> str:
        return self.spec["name"]

    @property
    def task_mode(self) -> TaskMode:
        return TaskMode(self.spec["task_mode"])

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "spec": self.spec,
            "split": self.split,
            "template_digests": self.template_digests,
            "shots": self.shots,
            "stage1_source": self.stage1_source,
            "reports": self.reports,
            "prompts": self.prompts,
            "items": self.items,
            "totals": self.totals,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunRecord":
        return cls(
            spec=d["spec"], split=d["split"], template_digests=d["template_digests"], shots=d["shots"],
            items=d.get("items", []), reports=d.get("reports", []), prompts=d.get("prompts", {}),
            stage1_source=d.get("stage1_source"), totals=d.get("totals", {}), version=d.get("version", 1),
        )

    def canonical(self) -> dict:
        """The record without run-dependent fields (timings, cache flags, provider metadata)."""
        d = self.to_dict()
        d.pop("totals")
        d["items"] = [{k: v for k, v in it.items() if k not in _VOLATILE_ITEM_KEYS} for it in self.items]
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, ensure_ascii=False, indent=1)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def save(self, run_dir) -> Path:
        """Write ``record.json`` and ``items.jsonl`` into ``run_dir``."""
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "record.json").write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
        )
        with open(run_dir / "items.jsonl", "w", encoding="utf-8") as fh:
            for it in self.items:
                fh.write(json.dumps(it, ensure_ascii=False) + "\n")
        return run_dir

    @classmethod
    def load(cls, path) -> "RunRecord":
        path = Path(path)
        if path.is_dir():
            path = path / "record.json"
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def report_rows(self):
        """Yield (model_id, shots, scope, EvalReport, failures) tuples."""
        for row in self.reports:
            yield row["model_id"], row["shots"], row["scope"], EvalReport.from_dict(row["report"]), row["failures"]

    def stage_items(self, stage: TaskKind | str, model_id: str, shots: int) -> list[dict]:
        stage = TaskKind(stage).value
        return [it for it in self.items if it["stage"] == stage and it["model_id"] == model_id and it["shots"] == shots]


# -- running -------------------------------------------------------------------

def _stages(mode: TaskMode) -> list[TaskKind]:
    return {
        TaskMode.FSP_SINGLE_STAGE: [TaskKind.FSP],
        TaskMode.FI_ONLY: [TaskKind.FI],
        TaskMode.FSRL_GOLD: [TaskKind.FSRL],
        TaskMode.FI_THEN_FSRL: [TaskKind.FI, TaskKind.FSRL],
    }[mode]


_ESTIMATORS = {TaskKind.FI: FrameIdentifier, TaskKind.FSRL: ArgumentLabeler, TaskKind.FSP: FrameSemanticParser}


def _failures(results) -> dict:
    warnings: dict[str, int] = {}
    refusals = 0
    for r in results:
        refusals += r.refused
        for code, n in r.outcome.warning_counts().items():
            warnings[code] = warnings.get(code, 0) + n
    warnings.pop("ProviderRefusal", None)
    return {"refusals": refusals, "warnings": dict(sorted(warnings.items()))}


def _merge_failures(a: dict, b: dict) -> dict:
    w = dict(a["warnings"])
    for k, v in b["warnings"].items():
        w[k] = w.get(k, 0) + v
    return {"refusals": a["refusals"] + b["refusals"], "warnings": dict(sorted(w.items()))}


def check_budget(spec: ExperimentSpec, store: FrameStore, split: DatasetSplit, frames, shots, limit: int | None):
    """Render every prompt of the experiment and refuse before any call if one is too long."""
    prompts = {}
    for stage in _stages(spec.task_mode):
        for k in shots:
            cfg = PromptConfig(stage, frames, split.icl_pool[:k], spec.ablation, spec.core_only)
            prompt = render_prompt(store, cfg)
            if limit is not None and not estimate_prompt_budget(prompt, limit).fits:
                raise BudgetExceeded(k, len(prompt), limit)
            prompts[(stage, k)] = prompt
    return prompts


def _stage1_from_record(prior: "RunRecord", model_id: str, shots: int, eval_ids) -> dict[str, tuple]:
    items = [it for it in prior.items if it["stage"] == "fi" and it["model_id"] == model_id and it["shots"] == shots]
    by_sid = {it["sentence_id"]: it for it in items}
    missing = [sid for sid in eval_ids if sid not in by_sid]
    if missing:
        raise ConfigError(
            f"prior record {prior.name!r} has no FI output for model {model_id!r} at {shots} shots "
            f"on {len(missing)} eval items"
        )
    return {sid: tuple(instance_from_json(d).pair for d in by_sid[sid]["instances"]) for sid in eval_ids}


def run_experiment(
    spec: ExperimentSpec,
    store: FrameStore,
    clients: Mapping,
    split: DatasetSplit | SplitConfig,
    max_prompt_chars: int | None = None,
    jobs: int = 1,
    stage1: "RunRecord | None" = None,
) -> RunRecord:
    """Run every (model, shot count) cell of ``spec`` and score it.

    ``clients`` maps model ids to LLMClients. ``split`` may be a ready split
    or a SplitConfig to draw it from. For fi_then_fsrl, ``stage1`` may hold a
    prior record whose FI outputs are reused instead of calling FI again.
    """
    started = time.perf_counter()
    if isinstance(split, SplitConfig):
        split = stratified_split(store, split)
    frames = spec.frames or (split.config.frame_names if split.config else store.frame_names)
    missing = [m for m in spec.model_ids if m not in clients]
    if missing:
        raise ConfigError(f"experiment {spec.name!r}: no provider configured for {missing}")
    shots = spec.resolve_shots(len(split.icl_pool))
    prompts = check_budget(spec, store, split, frames, shots, max_prompt_chars)

    eval_ids = list(split.eval_set)
    examples = [store.example(sid) for sid in eval_ids]
    sentences = [ex.sentence for ex in examples]
    gold = {ex.id: [gold_instance(ex, store, spec.core_only)] for ex in examples}
    gold_pairs = {ex.id: [gold_pair(ex)] for ex in examples}

    record = RunRecord(
        spec=spec.to_dict(),
        split=split.to_dict(),
        template_digests=template_digests(),
        shots=shots,
        prompts={p.digest: p.text for p in prompts.values()},
        stage1_source=None,
    )
    if spec.task_mode is TaskMode.FI_THEN_FSRL:
        record.stage1_source = f"record:{stage1.name}" if stage1 is not None else "fresh"

    def estimator(stage, model_id, k):
        est = _ESTIMATORS[stage](
            store=store, frames=frames, client=clients[model_id], n_shots=k, ablation=spec.ablation.value,
            core_only=spec.core_only, temperature=spec.temperature, max_output=spec.max_output, n_jobs=jobs,
        )
        return est.fit(split.icl_pool)

    def predict(stage, model_id, k, X):
        log.info("%s: %s stage %s, %d shots, %d items", spec.name, model_id, stage.value, k, len(X))
        try:
            results = estimator(stage, model_id, k).predict_detailed(X)
        except (RateLimited, TransportError) as exc:
            raise ProviderExhausted(
                f"{model_id}: {exc}; completed responses are cached, re-run to resume"
            ) from exc
        record.items.extend(_item_entry(model_id, k, stage, sid, r) for sid, r in zip(eval_ids, results))
        return results

    def add(model_id, k, scope, report, failures):
        record.reports.append(
            {"model_id": model_id, "shots": k, "scope": scope, "report": report.as_dict(), "failures": failures}
        )

    for model_id in spec.model_ids:
        for k in shots:
            mode = spec.task_mode
            if mode is TaskMode.FSP_SINGLE_STAGE:
                results = predict(TaskKind.FSP, model_id, k, sentences)
                pred = {sid: r.outcome.instances for sid, r in zip(eval_ids, results)}
                fails = _failures(results)
                for scope in (Scope.ALL_ROLES, Scope.TARGET_ONLY, Scope.ARGUMENTS_ONLY):
                    add(model_id, k, scope.value, micro_report(corpus_items(gold), corpus_items(pred), scope), fails)
            elif mode is TaskMode.FI_ONLY:
                results = predict(TaskKind.FI, model_id, k, sentences)
                pred = {sid: r.outcome.instances for sid, r in zip(eval_ids, results)}
                fails = _failures(results)
                for view, rep in fi_report(gold_pairs, pred).items():
                    add(model_id, k, f"fi:{view.value}", rep, fails)
            elif mode is TaskMode.FSRL_GOLD:
                X = [(s, gold_pairs[sid]) for sid, s in zip(eval_ids, sentences)]
                results = predict(TaskKind.FSRL, model_id, k, X)
                pred = {sid: r.outcome.instances for sid, r in zip(eval_ids, results)}
                rep = micro_report(corpus_items(gold), corpus_items(pred), Scope.ARGUMENTS_ONLY)
                add(model_id, k, Scope.ARGUMENTS_ONLY.value, rep, _failures(results))
            else:
                if stage1 is not None:
                    detected = _stage1_from_record(stage1, model_id, k, eval_ids)
                    fi_fails = {"refusals": 0, "warnings": {}}
                else:
                    fi_results = predict(TaskKind.FI, model_id, k, sentences)
                    detected = {sid: tuple(i.pair for i in r.outcome.instances) for sid, r in zip(eval_ids, fi_results)}
                    fi_fails = _failures(fi_results)
                X = [(s, detected[sid]) for sid, s in zip(eval_ids, sentences)]
                results = predict(TaskKind.FSRL, model_id, k, X)
                pred = {sid: r.outcome.instances for sid, r in zip(eval_ids, results)}
                fails = _merge_failures(fi_fails, _failures(results))
                add(model_id, k, "fsrl:arguments_only",
                    micro_report(corpus_items(gold), corpus_items(pred), Scope.ARGUMENTS_ONLY), fails)
                add(model_id, k, "fi+fsrl:all_roles",
                    micro_report(corpus_items(gold), corpus_items(pred), Scope.ALL_ROLES), fails)
                for view, rep in fi_report(gold_pairs, detected).items():
                    add(model_id, k, f"fi:{view.value}", rep, fi_fails)

    usage: dict[str, float] = {}
    for it in record.items:
        for key, val in (it["meta"].get("usage") or {}).items():
            if isinstance(val, (int, float)) and not isinstance(val, bool):
                usage[key] = usage.get(key, 0) + val
    record.totals = {
        "wall_clock_s": round(time.perf_counter() - started, 3),
        "items": len(record.items),
        "cached_items": sum(it["cached"] for it in record.items),
        "usage": usage,
    }
    return record


def primary_scope(mode: TaskMode | str) -> str:
    return MODE_SCOPES[TaskMode(mode)][0]


__all__ = [
    "ExperimentSpec", "RunRecord", "TaskMode", "MODE_SCOPES", "check_budget", "instance_from_json",
    "instance_to_json", "primary_scope", "run_experiment", "FIView",
]
