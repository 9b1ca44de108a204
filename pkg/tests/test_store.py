import json

import pytest
from hypothesis import given, strategies as st

from frameicl.errors import EmptyStore, OffsetOutOfBounds, SchemaVersionMismatch, UnknownFrame, ValidationFailure
from frameicl.store import (
    AnnotatedExample,
    Argument,
    Coreness,
    Frame,
    FrameElement,
    FrameStore,
    Span,
    core_elements,
    dumps_normalized,
    export_normalized,
    load_normalized,
    loads_normalized,
)


def test_fixture_store_shape(store):
    assert set(store.frame_names) == {"Killing", "Theft", "Rescuing"}
    assert len(store.examples) == 51


def test_killing_core_elements(store):
    assert {fe.name for fe in core_elements(store, "Killing")} == {"Killer", "Cause", "Victim", "Instrument", "Means"}
    assert "Place" in store.frame("Killing").element_names()
    assert "Place" not in store.frame("Killing").element_names(core_only=True)


def test_normalized_roundtrip_is_byte_equal(store, tmp_path):
    text = dumps_normalized(store)
    again = loads_normalized(text)
    assert again == store
    assert dumps_normalized(again) == text
    path = export_normalized(store, tmp_path / "corpus.jsonl")
    assert load_normalized(path) == store
    assert path.read_text(encoding="utf-8") == text


def test_normalized_header(store):
    header = json.loads(dumps_normalized(store).splitlines()[0])
    assert header["schema_version"] == 1


def test_schema_version_mismatch(store):
    lines = dumps_normalized(store).splitlines()
    header = json.loads(lines[0])
    header["schema_version"] = 99
    with pytest.raises(SchemaVersionMismatch):
        loads_normalized("\n".join([json.dumps(header)] + lines[1:]))


def test_out_of_bounds_record_names_line(store):
    lines = dumps_normalized(store).splitlines()
    idx = next(i for i, l in enumerate(lines) if '"example"' in l or '"sentence"' in l)
    rec = json.loads(lines[idx])
    rec["target"] = [0, 10_000]
    lines[idx] = json.dumps(rec)
    with pytest.raises(ValidationFailure) as err:
        loads_normalized("\n".join(lines))
    assert err.value.line == idx + 1


def _frame():
    return Frame("Killing", "A Killer kills a Victim.", [
        FrameElement("Killer", "who kills"), FrameElement("Victim", "who dies"),
        FrameElement("Place", "where", Coreness.NON_CORE),
    ])


def test_overlapping_arguments_rejected_with_example_id():
    with pytest.raises(ValueError, match="ex-7"):
        AnnotatedExample("ex-7", "They killed him.", "Killing", "kill.v", Span(5, 11),
                         [Argument("Killer", Span(0, 4)), Argument("Victim", Span(2, 8))])


def test_span_out_of_bounds():
    with pytest.raises(OffsetOutOfBounds):
        AnnotatedExample("e", "short", "Killing", "kill.v", Span(0, 50))


def test_empty_store():
    with pytest.raises(EmptyStore):
        FrameStore([])


def test_unknown_frame_lookup(store):
    with pytest.raises(UnknownFrame):
        store.frame("Nope")


def test_example_with_unknown_element_rejected():
    ex = AnnotatedExample("e1", "They killed him.", "Killing", "kill.v", Span(5, 11), [Argument("Weapon", Span(0, 4))])
    with pytest.raises(Exception):
        FrameStore([_frame()], examples=[ex])


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_span_overlap_symmetric(a, b, c, d):
    s1 = Span(min(a, b), max(a, b) + 1)
    s2 = Span(min(c, d), max(c, d) + 1)
    assert s1.overlaps(s2) == s2.overlaps(s1)
    assert s1.overlaps(s2) == bool(set(range(s1.start, s1.end)) & set(range(s2.start, s2.end)))


def test_store_is_shared_by_deepcopy(store):
    import copy
    assert copy.deepcopy(store) is store
