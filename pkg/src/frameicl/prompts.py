"""Render task prompts from frame definitions and annotated shots.

A prompt has up to four sections, always in this order: Goal, Events,
Guidelines, Examples. Task wording lives in ``templates/<task>.j2`` (blocks
``goal`` and ``guidelines``); the frame-specific Events and Examples sections
are rendered from the shared ``_events.j2`` and ``_examples.j2``.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jinja2

from .errors import ShotFrameMismatch
from .store import AnnotatedExample, FrameStore
from .wire import TaskKind, format_user_input, gold_instance, gold_pair, serialize_output

SECTION_ORDER = ("Goal", "Events", "Guidelines", "Examples")
_SECTION_SEP = "\n\n"


class AblationLevel(str, enum.Enum):
    NO_FRAME_INFO = "no_frame_info"
    FRAME_DEF_ONLY = "frame_def_only"
    FULL_FRAME_INFO = "full"


@dataclass(frozen=True)
class PromptConfig:
    task: TaskKind
    frame_names: tuple[str, ...]
    shot_ids: tuple[str, ...] = ()
    ablation: AblationLevel = AblationLevel.FULL_FRAME_INFO
    core_only: bool = True

    def __post_init__(self):
        object.__setattr__(self, "task", TaskKind(self.task))
        object.__setattr__(self, "ablation", AblationLevel(self.ablation))
        object.__setattr__(self, "frame_names", tuple(self.frame_names))
        object.__setattr__(self, "shot_ids", tuple(self.shot_ids))
        if self.ablation is not AblationLevel.FULL_FRAME_INFO and self.shot_ids:
            raise ValueError("ablated prompts are zero-shot; shot_ids must be empty")
        if not self.frame_names:
            raise ValueError("at least one frame name is required")


@dataclass(frozen=True)
class Prompt:
    text: str
    config: PromptConfig
    section_offsets: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def section(self, name: str) -> str:
        start, end = self.section_offsets[name]
        return self.text[start:end]

    def __len__(self):
        return len(self.text)


@dataclass(frozen=True)
class Budget:
    """Outcome of a prompt length check. ``excess`` is 0 when the prompt fits."""

    excess: int

    @property
    def fits(self) -> bool:
        return self.excess == 0

    def __repr__(self):
        return "Fits" if self.fits else f"Exceeds({self.excess})"


@lru_cache(maxsize=1)
def _env() -> jinja2.Environment:
    return jinja2.Environment(
        loader=jinja2.PackageLoader("frameicl", "templates"),
        undefined=jinja2.StrictUndefined,
        autoescape=False,
        keep_trailing_newline=False,
    )


def template_digests() -> dict[str, str]:
    """SHA-256 of every template asset, for run snapshots."""
    root = resources.files("frameicl") / "templates"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".j2"):
            out[entry.name] = hashlib.sha256(entry.read_bytes()).hexdigest()
    return out


def _render_block(template: jinja2.Template, block: str, ctx: dict) -> str:
    return "".join(template.blocks[block](template.new_context(ctx))).strip()


def render_shot(example: AnnotatedExample, task: TaskKind, store: FrameStore, core_only: bool = True) -> tuple[str, str]:
    """One demonstration as (input text, expected output text)."""
    task = TaskKind(task)
    pairs = [gold_pair(example)] if task is TaskKind.FSRL else None
    input_text = format_user_input(task, example.sentence, pairs)
    output_text = serialize_output([gold_instance(example, store, core_only)], task)
    return input_text, output_text


def render_fsrl_shot(example: AnnotatedExample, store: FrameStore, core_only: bool = True) -> tuple[str, str]:
    return render_shot(example, TaskKind.FSRL, store, core_only)


def render_prompt(store: FrameStore, config: PromptConfig) -> Prompt:
    """Render the prompt for ``config``; a pure function of its inputs."""
    frames = [store.frame(name) for name in config.frame_names]
    shots = [store.example(sid) for sid in config.shot_ids]
    allowed = set(config.frame_names)
    for ex in shots:
        if ex.frame_name not in allowed:
            raise ShotFrameMismatch(f"shot {ex.id!r} belongs to {ex.frame_name!r}, not in {sorted(allowed)}")

    env = _env()
    task_tmpl = env.get_template(f"{config.task.value}.j2")
    ctx = {"frame_names": list(config.frame_names), "core_only": config.core_only}

    sections: list[tuple[str, str]] = [("Goal", _render_block(task_tmpl, "goal", ctx))]
    if config.ablation is not AblationLevel.NO_FRAME_INFO:
        view = [
            {
                "name": f.name,
                "definition": f.definition,
                "illustrative_sentence": f.illustrative_sentence,
                "elements": [fe for fe in f.elements if fe.is_core or not config.core_only],
            }
            for f in frames
        ]
        full = config.ablation is AblationLevel.FULL_FRAME_INFO
        sections.append(("Events", env.get_template("_events.j2").render(frames=view, full=full).strip()))
    sections.append(("Guidelines", _render_block(task_tmpl, "guidelines", ctx)))
    if shots:
        rendered = [render_shot(ex, config.task, store, config.core_only) for ex in shots]
        body = env.get_template("_examples.j2").render(shots=[{"input": i, "output": o} for i, o in rendered])
        sections.append(("Examples", body))

    parts, offsets, pos = [], {}, 0
    for name, body in sections:
        if parts:
            parts.append(_SECTION_SEP)
            pos += len(_SECTION_SEP)
        chunk = f"# {name}\n{body}"
        offsets[name] = (pos, pos + len(chunk))
        parts.append(chunk)
        pos += len(chunk)
    return Prompt("".join(parts), config, offsets)


def estimate_prompt_budget(prompt: Prompt, limit: int) -> Budget:
    """Compare the prompt's character length with ``limit``."""
    if limit <= 0:
        raise ValueError("limit must be positive")
    return Budget(max(0, len(prompt.text) - limit))
