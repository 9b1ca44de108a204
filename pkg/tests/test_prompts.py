import pytest
from hypothesis import given, settings, strategies as st

from frameicl.errors import ShotFrameMismatch
from frameicl.prompts import (
    SECTION_ORDER,
    AblationLevel,
    PromptConfig,
    estimate_prompt_budget,
    render_prompt,
    render_shot,
    template_digests,
)
from frameicl.wire import TaskKind

FRAMES = ("Killing", "Theft", "Rescuing")


def _prompt(store, split, task, k, ablation=AblationLevel.FULL_FRAME_INFO, frames=FRAMES):
    return render_prompt(store, PromptConfig(task, frames, split.icl_pool[:k], ablation))


@pytest.mark.parametrize("task", list(TaskKind))
def test_sections_in_order(store, split, task):
    p = _prompt(store, split, task, 5)
    names = sorted(p.section_offsets, key=lambda n: p.section_offsets[n][0])
    assert names == list(SECTION_ORDER)
    for name in names:
        assert p.section(name).startswith(f"# {name}\n")
    assert "\n\n# ".join(p.section(n)[2:] for n in names) == p.text[2:]


@pytest.mark.parametrize("task", list(TaskKind))
def test_zero_shot_has_no_examples(store, split, task):
    p = _prompt(store, split, task, 0)
    assert "Examples" not in p.section_offsets


@pytest.mark.parametrize("task", list(TaskKind))
def test_examples_prefix_stable(store, split, task):
    prev = ""
    for k in range(0, 16):
        p = _prompt(store, split, task, k)
        cur = p.section("Examples") if k else ""
        assert cur.startswith(prev)
        prev = cur
        # everything before Examples does not depend on k
        assert p.text.startswith(_prompt(store, split, task, 0).text)


def test_deterministic(store, split):
    a = _prompt(store, split, TaskKind.FSP, 10)
    b = _prompt(store, split, TaskKind.FSP, 10)
    assert a.text == b.text and a.digest == b.digest


def test_events_lists_core_elements_only(store, split):
    events = _prompt(store, split, TaskKind.FSP, 0).section("Events")
    assert "- Killer:" in events and "- Place:" not in events
    full = render_prompt(store, PromptConfig(TaskKind.FSP, FRAMES, (), core_only=False)).section("Events")
    assert "- Place:" in full


def test_ablation_levels(store, split):
    none, defs, full = (_prompt(store, split, TaskKind.FI, 0, lvl) for lvl in AblationLevel)
    assert "Events" not in none.section_offsets
    assert "Frame elements:" not in defs.section("Events")
    assert "Definition:" in defs.section("Events")
    assert "Frame elements:" in full.section("Events")
    assert none.section("Goal") == defs.section("Goal") == full.section("Goal")
    assert none.section("Guidelines") == full.section("Guidelines")
    for line in defs.section("Events").splitlines():
        assert line in full.section("Events").splitlines()


def test_ablated_prompts_are_zero_shot(split):
    with pytest.raises(ValueError):
        PromptConfig(TaskKind.FI, FRAMES, split.icl_pool[:3], AblationLevel.FRAME_DEF_ONLY)


def test_shot_from_other_frame(store, split):
    foreign = next(i for i in split.icl_pool if store.example(i).frame_name != "Killing")
    with pytest.raises(ShotFrameMismatch):
        render_prompt(store, PromptConfig(TaskKind.FI, ("Killing",), (foreign,)))


def test_shot_rendering(store):
    ex = store.example("1001")
    assert render_shot(ex, TaskKind.FI, store) == (
        "Text: The raiders had killed or wounded most of the garrison.",
        '[{"frame": "Killing", "target": "killed"}]',
    )
    inp, out = render_shot(ex, TaskKind.FSRL, store)
    assert inp.endswith('\nFrames: [{"frame": "Killing", "target": "killed"}]')
    assert '"role": "Killer", "text": "The raiders"' in out


def test_prompt_examples_use_shot_text(store, split):
    p = _prompt(store, split, TaskKind.FSP, 3)
    for sid in split.icl_pool[:3]:
        assert store.example(sid).sentence in p.section("Examples")


def test_budget(store, split):
    p = _prompt(store, split, TaskKind.FSP, 5)
    assert estimate_prompt_budget(p, len(p.text)).fits
    b = estimate_prompt_budget(p, len(p.text) - 7)
    assert not b.fits and b.excess == 7 and repr(b) == "Exceeds(7)"
    assert repr(estimate_prompt_budget(p, 10**6)) == "Fits"
    with pytest.raises(ValueError):
        estimate_prompt_budget(p, 0)


def test_template_digests_cover_tasks():
    d = template_digests()
    assert {"fi.j2", "fsp.j2", "fsrl.j2", "_events.j2", "_examples.j2"} <= set(d)
    assert all(len(v) == 64 for v in d.values())


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(list(TaskKind)), st.integers(0, 14))
def test_prompt_growth_monotone(store, split, task, k):
    assert len(_prompt(store, split, task, k)) < len(_prompt(store, split, task, k + 1))
