"""FrameNet data model and the immutable in-memory store.

Spans are character offsets into the owning sentence, end-exclusive.
The normalized on-disk format is line-delimited JSON: one header record
followed by one record per frame and one per annotated example.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    EmptyStore,
    OffsetOutOfBounds,
    SchemaVersionMismatch,
    UnknownExample,
    UnknownFrame,
    ValidationFailure,
)

SCHEMA_VERSION = 1
TARGET_ROLE = "Target"


class Coreness(str, enum.Enum):
    CORE = "Core"
    NON_CORE = "NonCore"


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not (isinstance(self.start, int) and isinstance(self.end, int)):
            raise TypeError("span offsets must be integers")
        if not 0 <= self.start < self.end:
            raise OffsetOutOfBounds(f"invalid span ({self.start}, {self.end})")

    def check_within(self, text: str) -> None:
        if self.end > len(text):
            raise OffsetOutOfBounds(
                f"span ({self.start}, {self.end}) exceeds sentence length {len(text)}"
            )

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def slice(self, text: str) -> str:
        return text[self.start:self.end]


@dataclass(frozen=True)
class FrameElement:
    name: str
    definition: str
    coreness: Coreness = Coreness.CORE

    def __post_init__(self):
        if not self.name:
            raise ValueError("frame element name must be non-empty")
        if not self.definition:
            raise ValueError(f"frame element {self.name!r} has an empty definition")
        object.__setattr__(self, "coreness", Coreness(self.coreness))

    @property
    def is_core(self) -> bool:
        return self.coreness is Coreness.CORE


@dataclass(frozen=True)
class LexicalUnit:
    name: str
    frame_name: str
    exemplar_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "exemplar_ids", tuple(self.exemplar_ids))


@dataclass(frozen=True)
class Frame:
    name: str
    definition: str
    elements: tuple[FrameElement, ...]
    illustrative_sentence: str | None = None
    lexical_units: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "lexical_units", tuple(self.lexical_units))
        names = [fe.name for fe in self.elements]
        if len(set(names)) != len(names):
            raise ValueError(f"frame {self.name!r} has duplicate element names")
        if TARGET_ROLE in names:
            raise ValueError(f"frame {self.name!r} uses the reserved role name 'Target'")
        if not any(fe.is_core for fe in self.elements):
            raise ValueError(f"frame {self.name!r} has no core element")

    def element(self, name: str) -> FrameElement:
        for fe in self.elements:
            if fe.name == name:
                return fe
        raise KeyError(name)

    def element_names(self, core_only: bool = False) -> tuple[str, ...]:
        return tuple(fe.name for fe in self.elements if fe.is_core or not core_only)


@dataclass(frozen=True)
class Argument:
    fe_name: str
    span: Span


@dataclass(frozen=True)
class AnnotatedExample:
    id: str
    sentence: str
    frame_name: str
    lu_name: str
    target: Span
    arguments: tuple[Argument, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(self.arguments))
        self.target.check_within(self.sentence)
        spans = [self.target]
        for arg in self.arguments:
            arg.span.check_within(self.sentence)
            for other in spans:
                if arg.span.overlaps(other):
                    raise ValueError(
                        f"example {self.id!r}: span of {arg.fe_name!r} overlaps another span"
                    )
            spans.append(arg.span)

    @property
    def target_text(self) -> str:
        return self.target.slice(self.sentence)

    def core_arguments(self, frame: Frame) -> tuple[Argument, ...]:
        core = set(frame.element_names(core_only=True))
        return tuple(a for a in self.arguments if a.fe_name in core)


@dataclass(frozen=True)
class ImportReport:
    """What happened while importing a FrameNet release."""

    release: str | None = None
    frames_loaded: int = 0
    lexical_units_loaded: int = 0
    examples_loaded: int = 0
    skipped: Mapping[str, int] = field(default_factory=dict)
    skipped_ids: tuple[tuple[str, str], ...] = ()

    @property
    def examples_skipped(self) -> int:
        return sum(self.skipped.values())


class FrameStore:
    """Read-only index over frames, lexical units and annotated exemplars.

    The store never changes after construction; it is safe to share between
    threads, and copying it returns the same object.
    """

    def __init__(
        self,
        frames: Iterable[Frame],
        lexical_units: Iterable[LexicalUnit] = (),
        examples: Iterable[AnnotatedExample] = (),
        release: str | None = None,
        report: ImportReport | None = None,
    ):
        self._frames = {f.name: f for f in frames}
        if not self._frames:
            raise EmptyStore("the store contains no frames")
        self._lus = {lu.name + "@" + lu.frame_name: lu for lu in lexical_units}
        self._examples = {}
        for ex in examples:
            if ex.id in self._examples:
                raise ValueError(f"duplicate example id {ex.id!r}")
            self._validate_example(ex)
            self._examples[ex.id] = ex
        for lu in self._lus.values():
            if lu.frame_name not in self._frames:
                raise UnknownFrame(lu.frame_name)
        self.release = release
        self.report = report

    def _validate_example(self, ex: AnnotatedExample) -> None:
        frame = self._frames.get(ex.frame_name)
        if frame is None:
            raise UnknownFrame(ex.frame_name)
        names = frame.element_names()
        for arg in ex.arguments:
            if arg.fe_name not in names:
                raise ValueError(
                    f"example {ex.id!r}: {arg.fe_name!r} is not an element of {ex.frame_name!r}"
                )

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __eq__(self, other):
        if not isinstance(other, FrameStore):
            return NotImplemented
        return (
            self.release == other.release
            and list(self._frames.items()) == list(other._frames.items())
            and self._lus == other._lus  # keyed index; file order is not meaningful
            and list(self._examples.items()) == list(other._examples.items())
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"FrameStore(frames={len(self._frames)}, lexical_units={len(self._lus)}, "
            f"examples={len(self._examples)})"
        )

    @property
    def frame_names(self) -> tuple[str, ...]:
        return tuple(self._frames)

    @property
    def frames(self) -> tuple[Frame, ...]:
        return tuple(self._frames.values())

    @property
    def lexical_units(self) -> tuple[LexicalUnit, ...]:
        return tuple(self._lus.values())

    @property
    def examples(self) -> tuple[AnnotatedExample, ...]:
        return tuple(self._examples.values())

    def frame(self, name: str) -> Frame:
        try:
            return self._frames[name]
        except KeyError:
            raise UnknownFrame(name) from None

    def has_frame(self, name: str) -> bool:
        return name in self._frames

    def example(self, example_id: str) -> AnnotatedExample:
        try:
            return self._examples[example_id]
        except KeyError:
            raise UnknownExample(example_id) from None

    def examples_for_frame(self, frame_name: str) -> tuple[AnnotatedExample, ...]:
        self.frame(frame_name)
        return tuple(ex for ex in self._examples.values() if ex.frame_name == frame_name)

    def lexical_units_for_frame(self, frame_name: str) -> tuple[LexicalUnit, ...]:
        self.frame(frame_name)
        return tuple(lu for lu in self._lus.values() if lu.frame_name == frame_name)


def core_elements(store: FrameStore, frame_name: str) -> list[FrameElement]:
    """Core frame elements of ``frame_name`` in stored order."""
    return [fe for fe in store.frame(frame_name).elements if fe.is_core]


# -- normalized line-delimited JSON ----------------------------------------

def _span_to_list(span: Span) -> list[int]:
    return [span.start, span.end]


def _frame_record(frame: Frame, lus: Iterable[LexicalUnit]) -> dict:
    lu_map = {lu.name: lu for lu in lus}
    lu_records = []
    for name in frame.lexical_units:
        lu = lu_map.get(name)
        lu_records.append(
            {"name": name, "exemplar_ids": list(lu.exemplar_ids) if lu else None}
        )
    return {
        "record": "frame",
        "name": frame.name,
        "definition": frame.definition,
        "illustrative_sentence": frame.illustrative_sentence,
        "elements": [
            {"name": fe.name, "definition": fe.definition, "coreness": fe.coreness.value}
            for fe in frame.elements
        ],
        "lexical_units": lu_records,
    }


def _example_record(ex: AnnotatedExample) -> dict:
    return {
        "record": "example",
        "id": ex.id,
        "sentence": ex.sentence,
        "frame": ex.frame_name,
        "lu": ex.lu_name,
        "target": _span_to_list(ex.target),
        "arguments": [[a.fe_name, *_span_to_list(a.span)] for a in ex.arguments],
    }


def dumps_normalized(store: FrameStore) -> str:
    lines = [
        {
            "record": "header",
            "schema_version": SCHEMA_VERSION,
            "release": store.release,
            "frames": len(store.frames),
            "examples": len(store.examples),
        }
    ]
    for frame in store.frames:
        lines.append(_frame_record(frame, store.lexical_units_for_frame(frame.name)))
    for ex in store.examples:
        lines.append(_example_record(ex))
    return "".join(json.dumps(rec, ensure_ascii=False) + "\n" for rec in lines)


def export_normalized(store: FrameStore, out) -> Path:
    out = Path(out)
    out.write_text(dumps_normalized(store), encoding="utf-8")
    return out


def loads_normalized(text: str) -> FrameStore:
    frames: list[Frame] = []
    lus: list[LexicalUnit] = []
    examples: list[AnnotatedExample] = []
    header = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"invalid JSON: {exc.msg}", line=lineno) from None
        kind = rec.get("record") if isinstance(rec, dict) else None
        if header is None:
            if kind != "header":
                raise ValidationFailure("first record must be the header", line=lineno)
            if rec.get("schema_version") != SCHEMA_VERSION:
                raise SchemaVersionMismatch(
                    f"expected schema version {SCHEMA_VERSION}, got {rec.get('schema_version')!r}"
                )
            header = rec
            continue
        try:
            if kind == "frame":
                frame = Frame(
                    name=rec["name"],
                    definition=rec["definition"],
                    elements=[
                        FrameElement(e["name"], e["definition"], Coreness(e["coreness"]))
                        for e in rec["elements"]
                    ],
                    illustrative_sentence=rec.get("illustrative_sentence"),
                    lexical_units=[lu["name"] for lu in rec["lexical_units"]],
                )
                frames.append(frame)
                for lu in rec["lexical_units"]:
                    if lu.get("exemplar_ids") is not None:
                        lus.append(LexicalUnit(lu["name"], frame.name, lu["exemplar_ids"]))
            elif kind == "example":
                examples.append(
                    AnnotatedExample(
                        id=rec["id"],
                        sentence=rec["sentence"],
                        frame_name=rec["frame"],
                        lu_name=rec["lu"],
                        target=Span(*rec["target"]),
                        arguments=[Argument(a[0], Span(a[1], a[2])) for a in rec["arguments"]],
                    )
                )
            else:
                raise ValidationFailure(f"unknown record type {kind!r}", line=lineno)
        except ValidationFailure:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ValidationFailure(str(exc), line=lineno, record_id=rec.get("id") or rec.get("name")) from None
    if header is None:
        raise ValidationFailure("missing header record")
    try:
        return FrameStore(frames, lus, examples, release=header.get("release"))
    except (KeyError, ValueError) as exc:
        raise ValidationFailure(str(exc)) from None


def load_normalized(path) -> FrameStore:
    return loads_normalized(Path(path).read_text(encoding="utf-8"))
