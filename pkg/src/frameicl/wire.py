"""Prediction types and the JSON wire format shared by prompts, mocks and the parser.

Model output is a JSON array of objects::

    [{"frame": "Killing", "target": "killed",
      "arguments": [{"role": "Killer", "text": "They"}]}]

FI outputs omit ``arguments``. Argument and target texts are verbatim
substrings of the input sentence; offsets never travel over the wire.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .store import AnnotatedExample, FrameStore, Span


class TaskKind(str, enum.Enum):
    FSP = "fsp"
    FI = "fi"
    FSRL = "fsrl"


@dataclass(frozen=True)
class FrameTargetPair:
    frame_name: str
    target: Span
    target_text: str


@dataclass(frozen=True)
class RoleFiller:
    role: str
    span: Span
    text: str


@dataclass(frozen=True)
class FrameInstance:
    pair: FrameTargetPair
    arguments: tuple[RoleFiller, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(self.arguments))

    @property
    def frame_name(self) -> str:
        return self.pair.frame_name

    def without_arguments(self) -> "FrameInstance":
        return FrameInstance(self.pair, ())


def gold_pair(example: AnnotatedExample) -> FrameTargetPair:
    return FrameTargetPair(example.frame_name, example.target, example.target_text)


def gold_instance(example: AnnotatedExample, store: FrameStore, core_only: bool = True) -> FrameInstance:
    """The example's annotation as a FrameInstance, arguments in frame-element order."""
    frame = store.frame(example.frame_name)
    order = {name: i for i, name in enumerate(frame.element_names())}
    args = example.core_arguments(frame) if core_only else example.arguments
    args = sorted(args, key=lambda a: (order[a.fe_name], a.span.start))
    return FrameInstance(
        gold_pair(example),
        tuple(RoleFiller(a.fe_name, a.span, a.span.slice(example.sentence)) for a in args),
    )


def pair_to_wire(pair: FrameTargetPair) -> dict:
    return {"frame": pair.frame_name, "target": pair.target_text}


def instance_to_wire(instance: FrameInstance, task: TaskKind) -> dict:
    obj = pair_to_wire(instance.pair)
    if TaskKind(task) is not TaskKind.FI:
        obj["arguments"] = [{"role": a.role, "text": a.text} for a in instance.arguments]
    return obj


def dumps_wire(objs) -> str:
    return json.dumps(objs, ensure_ascii=False)


def serialize_output(instances, task: TaskKind) -> str:
    return dumps_wire([instance_to_wire(inst, task) for inst in instances])


def format_user_input(task: TaskKind, sentence: str, pairs=None) -> str:
    """Render the per-item input the model sees (and the shots' Input lines)."""
    text = f"Text: {sentence}"
    if TaskKind(task) is TaskKind.FSRL:
        text += "\nFrames: " + dumps_wire([pair_to_wire(p) for p in (pairs or ())])
    return text


def parse_user_input(text: str) -> tuple[str, list | None]:
    """Inverse of :func:`format_user_input`: (sentence, wire pairs or None)."""
    if not text.startswith("Text: "):
        raise ValueError("user input does not start with 'Text: '")
    body = text[len("Text: "):]
    head, sep, tail = body.rpartition("\nFrames: ")
    if not sep:
        return body, None
    return head, json.loads(tail)
