"""Import FrameNet 1.7-style frame and lexical-unit XML into a FrameStore.

Only lexical-unit exemplars are read (one annotated frame instance per
sentence). Rank-1 FE layers are used; null instantiations carry no offsets
and are ignored. FrameNet label ``end`` offsets are inclusive and are
converted to exclusive ends here.
"""
from __future__ import annotations

import html
import logging
import re
import xml.etree.ElementTree as ET
from collections import Counter
from pathlib import Path

from .errors import EmptyStore, MissingFrameFile, OffsetOutOfBounds
from .store import (
    AnnotatedExample,
    Argument,
    Coreness,
    Frame,
    FrameElement,
    FrameStore,
    ImportReport,
    LexicalUnit,
    Span,
)

log = logging.getLogger(__name__)

FN_NS = "http://framenet.icsi.berkeley.edu"
_CORE_TYPES = {"Core", "Core-Unexpressed"}
_TAG_RE = re.compile(r"<[^>]+>")
_EX_RE = re.compile(r"<ex>(.*?)</ex>", re.DOTALL)
_WS_RE = re.compile(r"\s+")
_RELEASE_RE = re.compile(r"(?:Release|release|version)\s+([0-9]+\.[0-9]+)")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem, name):
    return [c for c in elem if _local(c.tag) == name]


def _child(elem, name):
    for c in elem:
        if _local(c.tag) == name:
            return c
    return None


def _clean(text: str) -> str:
    return _WS_RE.sub(" ", html.unescape(_TAG_RE.sub("", text))).strip()


def split_definition(raw: str | None) -> tuple[str, str | None]:
    """Split FrameNet definition markup into (plain definition, first example)."""
    if not raw:
        return "", None
    markup = html.unescape(raw)
    match = _EX_RE.search(markup)
    example = _clean(match.group(1)) if match else None
    body = markup[: match.start()] if match else markup
    return _clean(body), example or None


def parse_frame_xml(path) -> Frame:
    root = ET.parse(path).getroot()
    name = root.get("name")
    definition, example = split_definition(getattr(_child(root, "definition"), "text", ""))
    elements = []
    for fe in _children(root, "FE"):
        fe_def, _ = split_definition(getattr(_child(fe, "definition"), "text", ""))
        coreness = Coreness.CORE if fe.get("coreType") in _CORE_TYPES else Coreness.NON_CORE
        elements.append(FrameElement(fe.get("name"), fe_def or fe.get("name"), coreness))
    lus = [lu.get("name") for lu in _children(root, "lexUnit")]
    return Frame(
        name=name,
        definition=definition or name,
        elements=elements,
        illustrative_sentence=example,
        lexical_units=lus,
    )


def _label_span(label, text: str) -> Span | None:
    start, end = label.get("start"), label.get("end")
    if start is None or end is None:
        return None
    span = Span(int(start), int(end) + 1)
    span.check_within(text)
    return span


def _annotation_from_set(anno_set, text: str, frame: Frame):
    target_layers = [l for l in _children(anno_set, "layer") if l.get("name") == "Target"]
    fe_layers = [
        l
        for l in _children(anno_set, "layer")
        if l.get("name") == "FE" and l.get("rank", "1") == "1"
    ]
    target_labels = [lab for layer in target_layers for lab in _children(layer, "label")]
    if not target_labels:
        return None
    if len(target_labels) != 1:
        raise _Skip("discontinuous_target")
    target = _label_span(target_labels[0], text)
    if target is None:
        raise _Skip("missing_target_offsets")
    names = set(frame.element_names())
    args = []
    for layer in fe_layers:
        for lab in _children(layer, "label"):
            span = _label_span(lab, text)
            if span is None:
                continue
            if lab.get("name") not in names:
                raise _Skip("unknown_frame_element")
            args.append(Argument(lab.get("name"), span))
    args.sort(key=lambda a: (a.span.start, a.span.end))
    return target, args


class _Skip(Exception):
    def __init__(self, reason):
        self.reason = reason


def parse_lu_xml(path, frames: dict[str, Frame], skipped: Counter, skipped_ids: list):
    """Parse one LU file into (LexicalUnit, examples). Malformed exemplars are skipped."""
    root = ET.parse(path).getroot()
    lu_name = root.get("name")
    frame_name = root.get("frame")
    frame = frames.get(frame_name)
    if frame is None:
        raise MissingFrameFile(f"{Path(path).name}: lexical unit {lu_name!r} references unknown frame {frame_name!r}")
    examples = []
    for sentence in (e for e in root.iter() if _local(e.tag) == "sentence"):
        sid = sentence.get("ID")
        text_el = _child(sentence, "text")
        text = text_el.text if text_el is not None and text_el.text else ""
        try:
            found = None
            for anno_set in _children(sentence, "annotationSet"):
                found = _annotation_from_set(anno_set, text, frame)
                if found is not None:
                    break
            if found is None:
                raise _Skip("unannotated")
            target, args = found
            examples.append(
                AnnotatedExample(
                    id=sid,
                    sentence=text,
                    frame_name=frame_name,
                    lu_name=lu_name,
                    target=target,
                    arguments=args,
                )
            )
        except OffsetOutOfBounds as exc:
            log.warning("skipping sentence %s of %s: %s", sid, lu_name, exc)
            skipped["offset_out_of_bounds"] += 1
            skipped_ids.append((sid, "offset_out_of_bounds"))
        except _Skip as skip:
            log.info("skipping sentence %s of %s: %s", sid, lu_name, skip.reason)
            skipped[skip.reason] += 1
            skipped_ids.append((sid, skip.reason))
        except ValueError as exc:
            log.warning("skipping sentence %s of %s: %s", sid, lu_name, exc)
            skipped["invalid_annotation"] += 1
            skipped_ids.append((sid, "invalid_annotation"))
    lu = LexicalUnit(lu_name, frame_name, [ex.id for ex in examples])
    return lu, examples


def _release(frame_xml_dir: Path) -> str | None:
    """Best-effort release string: a README next to the data, else the directory name."""
    root = frame_xml_dir.resolve().parent
    for name in ("README.txt", "README", "docs/README.txt"):
        path = root / name
        if path.exists():
            m = _RELEASE_RE.search(path.read_text(errors="replace"))
            if m:
                return m.group(1)
    m = re.search(r"(\d+\.\d+)", root.name)
    return m.group(1) if m else None


def import_framenet(frame_xml_dir, lu_xml_dir, frame_names=None) -> FrameStore:
    """Load frames and LU exemplars from FrameNet XML directories.

    ``frame_names`` restricts the import to a subset of frames; lexical units
    of other frames are then ignored instead of raising ``MissingFrameFile``.
    """
    frame_xml_dir, lu_xml_dir = Path(frame_xml_dir), Path(lu_xml_dir)
    wanted = set(frame_names) if frame_names is not None else None
    frames: dict[str, Frame] = {}
    for path in sorted(frame_xml_dir.glob("*.xml")):
        if wanted is not None and path.stem not in wanted:
            continue
        root = ET.parse(path).getroot()
        if _local(root.tag) != "frame":
            continue
        try:
            frame = parse_frame_xml(path)
        except ValueError as exc:
            log.warning("skipping frame file %s: %s", path.name, exc)
            continue
        if wanted is None or frame.name in wanted:
            frames[frame.name] = frame
    if not frames:
        raise EmptyStore(f"no valid frames found in {frame_xml_dir}")

    skipped: Counter = Counter()
    skipped_ids: list = []
    lus, examples, seen = [], [], set()
    for path in sorted(lu_xml_dir.glob("*.xml")):
        root = ET.parse(path).getroot()
        if _local(root.tag) != "lexUnit":
            continue
        if wanted is not None and root.get("frame") not in wanted:
            continue
        lu, exs = parse_lu_xml(path, frames, skipped, skipped_ids)
        kept = []
        for ex in exs:
            if ex.id in seen:
                skipped["duplicate_id"] += 1
                skipped_ids.append((ex.id, "duplicate_id"))
                continue
            seen.add(ex.id)
            kept.append(ex)
        lus.append(LexicalUnit(lu.name, lu.frame_name, [ex.id for ex in kept]))
        examples.extend(kept)

    release = _release(frame_xml_dir)
    report = ImportReport(
        release=release,
        frames_loaded=len(frames),
        lexical_units_loaded=len(lus),
        examples_loaded=len(examples),
        skipped=dict(sorted(skipped.items())),
        skipped_ids=tuple(skipped_ids),
    )
    if report.examples_skipped:
        log.warning("skipped %d malformed exemplars: %s", report.examples_skipped, report.skipped)
    return FrameStore(frames.values(), lus, examples, release=release, report=report)
