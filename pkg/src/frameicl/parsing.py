"""Turn raw model text into span-grounded frame predictions.

Parsing is total: whatever the model returns, ``parse_prediction`` yields a
``ParseOutcome``. Anything that cannot be grounded in the sentence is dropped
and reported with one of the stable warning codes below.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import NoPayload, NotFound
from .store import FrameStore, Span
from .wire import FrameInstance, FrameTargetPair, RoleFiller, TaskKind

NO_PAYLOAD = "NoPayload"
NOT_FOUND = "NotFound"
UNKNOWN_FRAME = "UnknownFrame"
UNKNOWN_ROLE = "UnknownRole"
UNMATCHED_PAIR = "UnmatchedPair"
MALFORMED_ENTRY = "MalformedEntry"

WARNING_CODES = (NO_PAYLOAD, NOT_FOUND, UNKNOWN_FRAME, UNKNOWN_ROLE, UNMATCHED_PAIR, MALFORMED_ENTRY)

_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n?(.*?)```", re.DOTALL)
_DECODER = json.JSONDecoder()


@dataclass(frozen=True)
class ParseWarning:
    code: str
    detail: str


@dataclass(frozen=True)
class ParseOutcome:
    instances: tuple[FrameInstance, ...] = ()
    warnings: tuple[ParseWarning, ...] = ()
    dropped: tuple[str, ...] = field(default=())

    def warning_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for w in self.warnings:
            counts[w.code] = counts.get(w.code, 0) + 1
        return counts


def _first_array(text: str):
    for i, ch in enumerate(text):
        if ch != "[":
            continue
        try:
            value, _ = _DECODER.raw_decode(text, i)
        except json.JSONDecodeError:
            continue
        if isinstance(value, list):
            return value
    raise NoPayload("no JSON array found")


def extract_payload(raw: str) -> list:
    """Return the first well-formed JSON array in ``raw``.

    Fenced code blocks are tried first, then the whole text. Surrounding
    prose is ignored.
    """
    if not isinstance(raw, str):
        raise NoPayload(f"expected text, got {type(raw).__name__}")
    for block in _FENCE_RE.findall(raw):
        try:
            return _first_array(block)
        except NoPayload:
            continue
    return _first_array(raw)


def _needle_pattern(needle: str) -> re.Pattern:
    tokens = needle.split()
    if not tokens:
        raise NotFound("empty needle")
    return re.compile(r"\s+".join(re.escape(t) for t in tokens))


def ground_span(sentence: str, needle: str, after: int = 0, occupied=()) -> Span:
    """Leftmost exact occurrence of ``needle`` starting at or after ``after``.

    Matching is case-sensitive; a run of whitespace in the needle matches any
    run of whitespace in the sentence. Occurrences overlapping a span in
    ``occupied`` are skipped.
    """
    pattern = _needle_pattern(needle)
    pos = max(0, after)
    while pos <= len(sentence):
        m = pattern.search(sentence, pos)
        if m is None:
            break
        span = Span(m.start(), m.end())
        if not any(span.overlaps(o) for o in occupied):
            return span
        pos = m.start() + 1
    raise NotFound(f"{needle!r} not found in sentence")


def _short(value) -> str:
    try:
        text = json.dumps(value, ensure_ascii=False)
    except (TypeError, ValueError):
        text = repr(value)
    return text if len(text) <= 200 else text[:197] + "..."


class _Collector:
    def __init__(self):
        self.warnings: list[ParseWarning] = []
        self.dropped: list[str] = []

    def drop(self, code: str, detail: str, fragment) -> None:
        self.warnings.append(ParseWarning(code, detail))
        self.dropped.append(_short(fragment))


def _parse_arguments(entry, pair, sentence, allowed, out: _Collector) -> tuple[RoleFiller, ...]:
    raw_args = entry.get("arguments", [])
    if raw_args is None:
        raw_args = []
    if not isinstance(raw_args, list):
        out.drop(MALFORMED_ENTRY, "arguments is not a list", raw_args)
        return ()
    occupied = [pair.target]
    args = []
    seen = set()
    for arg in raw_args:
        repeat = _short(arg) in seen
        seen.add(_short(arg))
        if not (isinstance(arg, dict) and isinstance(arg.get("role"), str) and isinstance(arg.get("text"), str)):
            out.drop(MALFORMED_ENTRY, "argument needs string 'role' and 'text'", arg)
            continue
        role, text = arg["role"], arg["text"]
        if role not in allowed:
            out.drop(UNKNOWN_ROLE, f"{role!r} is not a valid role of {pair.frame_name!r}", arg)
            continue
        try:
            span = ground_span(sentence, text, occupied=occupied)
        except NotFound:
            if not repeat:
                out.drop(NOT_FOUND, f"argument text {text!r} not found", arg)
            continue
        occupied.append(span)
        args.append(RoleFiller(role, span, span.slice(sentence)))
    return tuple(args)


def parse_prediction(
    task: TaskKind,
    raw: str,
    sentence: str,
    store: FrameStore,
    expected_pairs=None,
    core_only: bool = True,
) -> ParseOutcome:
    """Parse one model response for ``sentence``.

    FI responses yield instances without arguments. For FSRL, entries are
    aligned with ``expected_pairs`` (the pairs sent in the request) by frame
    name and exact target text; entries matching no expected pair are dropped.
    """
    task = TaskKind(task)
    out = _Collector()
    try:
        payload = extract_payload(raw)
    except NoPayload as exc:
        out.drop(NO_PAYLOAD, str(exc), raw if isinstance(raw, str) else repr(raw))
        return ParseOutcome((), tuple(out.warnings), tuple(out.dropped))

    instances: list[FrameInstance] = []
    taken_targets: dict[str, list[Span]] = {}
    unused = list(expected_pairs or ())
    used: list[FrameTargetPair] = []
    seen_entries: set[str] = set()
    for entry in payload:
        try:
            canonical = _short(entry)
            repeat = canonical in seen_entries
            seen_entries.add(canonical)
            if not (isinstance(entry, dict) and isinstance(entry.get("frame"), str) and isinstance(entry.get("target"), str)):
                out.drop(MALFORMED_ENTRY, "entry needs string 'frame' and 'target'", entry)
                continue
            frame_name, target_text = entry["frame"], entry["target"]
            if not store.has_frame(frame_name):
                out.drop(UNKNOWN_FRAME, f"{frame_name!r} is not a known frame", entry)
                continue
            if task is TaskKind.FSRL:
                key = (frame_name, target_text)
                pair = next((p for p in unused if (p.frame_name, p.target_text) == key), None)
                if pair is not None:
                    unused.remove(pair)
                    used.append(pair)
                else:
                    pair = next((p for p in used if (p.frame_name, p.target_text) == key), None)
                    if pair is None:
                        out.drop(UNMATCHED_PAIR, f"{key!r} was not among the input pairs", entry)
                        continue
            else:
                try:
                    span = ground_span(sentence, target_text, occupied=taken_targets.get(frame_name, ()))
                except NotFound:
                    # an identical entry with no further occurrence is model stutter
                    if not repeat:
                        out.drop(NOT_FOUND, f"target {target_text!r} not found", entry)
                    continue
                pair = FrameTargetPair(frame_name, span, span.slice(sentence))

            if task is TaskKind.FI:
                instance = FrameInstance(pair)
            else:
                allowed = store.frame(frame_name).element_names(core_only=core_only)
                instance = FrameInstance(pair, _parse_arguments(entry, pair, sentence, allowed, out))

            if instance in instances:
                continue
            if task is TaskKind.FSRL and any(i.pair == pair for i in instances):
                out.drop(UNMATCHED_PAIR, f"conflicting repeat of {(frame_name, target_text)!r}", entry)
                continue
            instances.append(instance)
            if task is not TaskKind.FSRL:
                taken_targets.setdefault(frame_name, []).append(pair.target)
        except Exception as exc:  # parsing must never abort a sweep
            out.drop(MALFORMED_ENTRY, f"{type(exc).__name__}: {exc}", entry)
    return ParseOutcome(tuple(instances), tuple(out.warnings), tuple(out.dropped))
