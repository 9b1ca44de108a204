"""Input checks for the estimator API, in the spirit of sklearn.utils.validation."""
from __future__ import annotations

from collections.abc import Sequence

from .errors import UnknownExample
from .store import AnnotatedExample, FrameStore
from .wire import FrameInstance, FrameTargetPair


def _as_list(X, what: str) -> list:
    if isinstance(X, (str, bytes)):
        raise TypeError(f"expected a sequence of {what}, got a single string")
    try:
        return list(X)
    except TypeError:
        raise TypeError(f"expected a sequence of {what}, got {type(X).__name__}") from None


def check_sentences(X) -> list[str]:
    sentences = _as_list(X, "sentences")
    for i, s in enumerate(sentences):
        if not isinstance(s, str):
            raise TypeError(f"item {i}: expected str, got {type(s).__name__}")
        if not s.strip():
            raise ValueError(f"item {i}: empty sentence")
        if "\n" in s:
            raise ValueError(f"item {i}: sentences must be single-line")
    return sentences


def _as_pair(p) -> FrameTargetPair:
    if isinstance(p, FrameInstance):
        return p.pair
    if isinstance(p, FrameTargetPair):
        return p
    raise TypeError(f"expected FrameTargetPair, got {type(p).__name__}")


def check_pair_inputs(X) -> list[tuple[str, tuple[FrameTargetPair, ...]]]:
    """Validate ``[(sentence, pairs), ...]`` input for argument labeling."""
    items = _as_list(X, "(sentence, pairs) tuples")
    out = []
    for i, item in enumerate(items):
        if not (isinstance(item, Sequence) and not isinstance(item, str) and len(item) == 2):
            raise TypeError(f"item {i}: expected a (sentence, pairs) tuple")
        sentence, pairs = item
        check_sentences([sentence])
        pairs = tuple(_as_pair(p) for p in _as_list(pairs, "frame-target pairs"))
        for p in pairs:
            if p.target.slice(sentence) != p.target_text:
                raise ValueError(f"item {i}: target span does not match {p.target_text!r}")
        out.append((sentence, pairs))
    return out


def check_shot_ids(X, store: FrameStore) -> list[str]:
    """Normalize shots given as example ids or AnnotatedExamples; all must exist."""
    if X is None:
        return []
    ids = []
    for item in _as_list(X, "example ids"):
        ex_id = item.id if isinstance(item, AnnotatedExample) else item
        if not isinstance(ex_id, str):
            raise TypeError(f"expected example id, got {type(ex_id).__name__}")
        store.example(ex_id)
        ids.append(ex_id)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate shot ids")
    return ids


def check_store(store) -> FrameStore:
    if not isinstance(store, FrameStore):
        raise TypeError(f"store must be a FrameStore, got {type(store).__name__}")
    return store


__all__ = ["check_sentences", "check_pair_inputs", "check_shot_ids", "check_store", "UnknownExample"]
