import json

import pytest
from hypothesis import given, settings, strategies as st

from frameicl.errors import NoPayload, NotFound
from frameicl.parsing import extract_payload, ground_span, parse_prediction
from frameicl.store import Span
from frameicl.wire import FrameTargetPair, TaskKind, gold_instance, gold_pair, serialize_output

SENT = "The raiders had killed or wounded most of the garrison."


def codes(outcome):
    return [w.code for w in outcome.warnings]


def test_extract_payload_variants():
    arr = [{"frame": "Killing", "target": "killed"}]
    text = json.dumps(arr)
    assert extract_payload(text) == arr
    assert extract_payload(f"Sure! Here you go:\n```json\n{text}\n```\nDone.") == arr
    assert extract_payload(f"prefix [not json] then {text} trailing") == arr
    with pytest.raises(NoPayload):
        extract_payload("no array here")
    with pytest.raises(NoPayload):
        extract_payload('{"frame": "Killing"}')


def test_ground_span_rules():
    assert ground_span(SENT, "killed") == Span(16, 22)
    assert ground_span("a  b a b", "a b") == Span(0, 4)
    assert ground_span("a  b a b", "a b", after=1) == Span(5, 8)
    assert ground_span("the cat and the dog", "the", occupied=[Span(0, 3)]) == Span(12, 15)
    with pytest.raises(NotFound):
        ground_span(SENT, "Killed")
    with pytest.raises(NotFound):
        ground_span(SENT, "   ")


def test_fi_parse(store):
    out = parse_prediction(TaskKind.FI, '[{"frame": "Killing", "target": "killed"}]', SENT, store)
    assert [(i.frame_name, i.pair.target) for i in out.instances] == [("Killing", Span(16, 22))]
    assert not out.warnings


def test_fi_unknown_frame_and_not_found(store):
    raw = json.dumps([{"frame": "Nope", "target": "killed"}, {"frame": "Killing", "target": "slain"}])
    out = parse_prediction(TaskKind.FI, raw, SENT, store)
    assert out.instances == ()
    assert codes(out) == ["UnknownFrame", "NotFound"]
    assert len(out.dropped) == 2


def test_no_payload(store):
    out = parse_prediction(TaskKind.FSP, "I cannot help with that.", SENT, store)
    assert out.instances == () and codes(out) == ["NoPayload"]


def test_unknown_role_dropped(store):
    raw = json.dumps([{"frame": "Killing", "target": "killed",
                       "arguments": [{"role": "Goods", "text": "The raiders"}, {"role": "Killer", "text": "The raiders"}]}])
    out = parse_prediction(TaskKind.FSP, raw, SENT, store)
    assert [a.role for a in out.instances[0].arguments] == ["Killer"]
    assert codes(out) == ["UnknownRole"]


def test_noncore_role_rejected_when_core_only(store):
    sent = "A falling rock killed two climbers near the summit on Sunday."
    raw = json.dumps([{"frame": "Killing", "target": "killed", "arguments": [{"role": "Place", "text": "near the summit"}]}])
    assert codes(parse_prediction(TaskKind.FSP, raw, sent, store)) == ["UnknownRole"]
    assert parse_prediction(TaskKind.FSP, raw, sent, store, core_only=False).instances[0].arguments[0].role == "Place"


def test_fsrl_alignment(store):
    pair = FrameTargetPair("Killing", Span(16, 22), "killed")
    raw = json.dumps([
        {"frame": "Killing", "target": "killed", "arguments": [{"role": "Victim", "text": "most of the garrison"}]},
        {"frame": "Theft", "target": "killed", "arguments": []},
    ])
    out = parse_prediction(TaskKind.FSRL, raw, SENT, store, expected_pairs=[pair])
    assert len(out.instances) == 1 and out.instances[0].pair == pair
    assert codes(out) == ["UnmatchedPair"]


def test_repeated_target_occurrences(store):
    sent = "They killed the guard and killed the dog."
    raw = json.dumps([{"frame": "Killing", "target": "killed"}, {"frame": "Killing", "target": "killed"}])
    out = parse_prediction(TaskKind.FI, raw, sent, store)
    assert [i.pair.target for i in out.instances] == [Span(5, 11), Span(26, 32)]
    # a third identical entry has nowhere to go: model stutter, dropped silently
    raw3 = json.dumps([{"frame": "Killing", "target": "killed"}] * 3)
    out3 = parse_prediction(TaskKind.FI, raw3, sent, store)
    assert len(out3.instances) == 2 and not out3.warnings


def test_malformed_entries(store):
    raw = json.dumps([1, {"frame": "Killing"}, {"frame": "Killing", "target": "killed", "arguments": "x"}])
    out = parse_prediction(TaskKind.FSP, raw, SENT, store)
    assert codes(out).count("MalformedEntry") == 3
    assert len(out.instances) == 1 and out.instances[0].arguments == ()


@pytest.mark.parametrize("task", list(TaskKind))
def test_roundtrip_all_fixtures(store, task):
    for ex in store.examples:
        gold = gold_instance(ex, store)
        want = gold.without_arguments() if task is TaskKind.FI else gold
        pairs = [gold_pair(ex)] if task is TaskKind.FSRL else None
        out = parse_prediction(task, serialize_output([gold], task), ex.sentence, store, expected_pairs=pairs)
        assert out.instances == (want,), ex.id
        assert out.warnings == ()


json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.text(max_size=12),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(
        st.sampled_from(["frame", "target", "arguments", "role", "text", "x"]), inner, max_size=4),
    max_leaves=12,
)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(list(TaskKind)), st.one_of(st.text(max_size=80), json_values.map(json.dumps)))
def test_parser_never_raises(store, task, raw):
    pair = FrameTargetPair("Killing", Span(16, 22), "killed")
    out = parse_prediction(task, raw, SENT, store, expected_pairs=[pair])
    for inst in out.instances:
        assert inst.pair.target.slice(SENT) == inst.pair.target_text
        for a in inst.arguments:
            assert a.span.slice(SENT) == a.text


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["Killing", "Theft", "Nope"]), max_size=4),
       st.lists(st.sampled_from(["killed", "raiders", "garrison", "most", "zzz"]), max_size=4))
def test_grounded_items_never_overlap_within_frame(store, frames, targets):
    raw = json.dumps([{"frame": f, "target": t} for f, t in zip(frames, targets)])
    out = parse_prediction(TaskKind.FI, raw, SENT, store)
    by_frame = {}
    for i in out.instances:
        for other in by_frame.get(i.frame_name, []):
            assert not other.overlaps(i.pair.target)
        by_frame.setdefault(i.frame_name, []).append(i.pair.target)
