"""ICL pool / evaluation set construction and shot schedules."""
from __future__ import annotations

import enum
import json
import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .errors import InsufficientExamples, NOutOfRange
from .store import FrameStore


@dataclass(frozen=True)
class SplitConfig:
    frame_names: tuple[str, ...]
    n_icl: int
    n_eval: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "frame_names", tuple(self.frame_names))
        if self.n_icl < 0:
            raise ValueError("n_icl must be >= 0")
        if self.n_eval < 1:
            raise ValueError("n_eval must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be an unsigned integer")
        if not self.frame_names:
            raise ValueError("at least one frame is required")


@dataclass(frozen=True)
class DatasetSplit:
    icl_pool: tuple[str, ...]
    eval_set: tuple[str, ...]
    config: SplitConfig | None = None
    strata: tuple[tuple[str, int, int], ...] = ()  # (lu key, n_icl, n_eval)

    def __post_init__(self):
        object.__setattr__(self, "icl_pool", tuple(self.icl_pool))
        object.__setattr__(self, "eval_set", tuple(self.eval_set))
        object.__setattr__(self, "strata", tuple(tuple(s) for s in self.strata))
        if set(self.icl_pool) & set(self.eval_set):
            raise ValueError("ICL pool and evaluation set overlap")

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config) if self.config else None,
            "icl_pool": list(self.icl_pool),
            "eval_set": list(self.eval_set),
            "strata": [list(s) for s in self.strata],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSplit":
        cfg = d.get("config")
        return cls(
            icl_pool=d["icl_pool"],
            eval_set=d["eval_set"],
            config=SplitConfig(**cfg) if cfg else None,
            strata=d.get("strata", ()),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "DatasetSplit":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def largest_remainder(n: int, counts: Mapping[str, int], capacity: Mapping[str, int] | None = None) -> dict[str, int]:
    """Apportion ``n`` seats over strata proportionally to ``counts``.

    Floors of the exact quotas are assigned first; leftover seats go to the
    largest fractional remainders (ties: larger stratum, then input order).
    With ``capacity``, a stratum never receives more than its capacity and
    the excess is re-apportioned over the strata that still have room.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    capacity = dict(capacity if capacity is not None else counts)
    names = list(counts)
    if n > sum(capacity[k] for k in names):
        raise InsufficientExamples(n, {k: capacity[k] for k in names})
    seats = {k: 0 for k in names}
    remaining = n
    while remaining:
        open_ = [k for k in names if seats[k] < capacity[k] and counts[k] > 0]
        total = sum(counts[k] for k in open_)
        quotas = {k: Fraction(remaining * counts[k], total) for k in open_}
        add = {k: min(int(quotas[k]), capacity[k] - seats[k]) for k in open_}
        left = remaining - sum(add.values())
        order = sorted(
            open_,
            key=lambda k: (-(quotas[k] - int(quotas[k])), -counts[k], names.index(k)),
        )
        for k in order:
            if left == 0:
                break
            if seats[k] + add[k] < capacity[k]:
                add[k] += 1
                left -= 1
        for k in open_:
            seats[k] += add[k]
        assigned = sum(add.values())
        remaining -= assigned
        if assigned == 0:  # pragma: no cover - guarded by the capacity check above
            raise InsufficientExamples(n, capacity)
    return seats


def _strata(store: FrameStore, frame_names: Sequence[str]) -> dict[str, list[str]]:
    strata: dict[str, list[str]] = {}
    for frame_name in frame_names:
        for ex in store.examples_for_frame(frame_name):
            strata.setdefault(f"{frame_name}/{ex.lu_name}", []).append(ex.id)
    return {k: sorted(v) for k, v in strata.items()}


def stratified_split(store: FrameStore, config: SplitConfig) -> DatasetSplit:
    """Sample disjoint ICL and evaluation sets, stratified by lexical unit.

    Each lexical unit contributes in proportion to its exemplar count
    (largest-remainder rounding, computed separately for the ICL pool and the
    evaluation set). Within a lexical unit, examples are drawn uniformly
    under ``config.seed``. The returned ICL order is the fixed shot order.
    """
    strata = _strata(store, config.frame_names)
    counts = {k: len(v) for k, v in strata.items()}
    if config.n_icl + config.n_eval > sum(counts.values()):
        raise InsufficientExamples(config.n_icl + config.n_eval, counts)
    icl_q = largest_remainder(config.n_icl, counts)
    eval_q = largest_remainder(
        config.n_eval, counts, capacity={k: counts[k] - icl_q[k] for k in counts}
    )
    rng = random.Random(config.seed)
    icl, ev = [], []
    for key, ids in strata.items():
        drawn = rng.sample(ids, icl_q[key] + eval_q[key])
        icl.extend(drawn[: icl_q[key]])
        ev.extend(drawn[icl_q[key]:])
    rng.shuffle(icl)
    rng.shuffle(ev)
    return DatasetSplit(
        icl_pool=icl,
        eval_set=ev,
        config=config,
        strata=[(k, icl_q[k], eval_q[k]) for k in strata],
    )


def shot_prefix(split: DatasetSplit, n: int) -> list[str]:
    if not 0 <= n <= len(split.icl_pool):
        raise NOutOfRange(f"n={n} outside [0, {len(split.icl_pool)}]")
    return list(split.icl_pool[:n])


class ShotProfile(str, enum.Enum):
    SMALL = "Small"
    LARGE = "Large"


def shot_schedule(profile, max_shots: int) -> list[int]:
    """Shot counts to evaluate: Small = 0, 5, 10, 25, then +25; Large = 0, then +50.

    ``max_shots`` is always included.
    """
    profile = ShotProfile(profile)
    if max_shots < 0:
        raise ValueError("max_shots must be >= 0")
    if profile is ShotProfile.SMALL:
        steps = [0, 5, 10, 25] + list(range(50, max_shots + 1, 25))
    else:
        steps = list(range(0, max_shots + 1, 50))
    out = [s for s in steps if s <= max_shots]
    if out[-1] != max_shots:
        out.append(max_shots)
    return out
