import pytest
from sklearn.base import clone

from frameicl.errors import BudgetExceeded, NOutOfRange, ProviderRefusal, UnknownExample
from frameicl.estimators import ArgumentLabeler, FrameIdentifier, FrameSemanticParser
from frameicl.llm.client import LLMClient, Provider
from frameicl.llm.mock import EchoGold, FixedText, MockProvider
from frameicl.wire import gold_instance, gold_pair

FRAMES = ("Killing", "Theft", "Rescuing")


@pytest.fixture
def mock(store):
    return MockProvider(store, EchoGold())


def test_params_roundtrip(store, mock):
    est = FrameIdentifier(store=store, frames=FRAMES, client=mock, n_shots=5, n_jobs=2)
    params = est.get_params()
    assert params["n_shots"] == 5 and params["ablation"] == "full" and params["temperature"] == 0.01
    twin = clone(est)
    assert twin.get_params()["n_shots"] == 5 and not hasattr(twin, "prompt_")
    est.set_params(n_shots=3)
    assert est.n_shots == 3


def test_fit_sets_prompt(store, split, mock):
    est = FrameSemanticParser(store=store, frames=FRAMES, client=mock, n_shots=5).fit(split.icl_pool)
    assert est.shot_ids_ == tuple(split.icl_pool[:5])
    assert est.frames_ == FRAMES
    assert "# Examples" in est.prompt_.text
    zero = FrameSemanticParser(store=store, frames=FRAMES, client=mock, n_shots=0).fit(split.icl_pool)
    assert "# Examples" not in zero.prompt_.text


def test_fit_errors(store, split, mock):
    with pytest.raises(NOutOfRange):
        FrameIdentifier(store=store, client=mock, n_shots=99).fit(split.icl_pool)
    with pytest.raises(UnknownExample):
        FrameIdentifier(store=store, client=mock).fit(["no-such-id"])
    with pytest.raises(ValueError):
        FrameIdentifier(store=store, client=mock).fit([split.icl_pool[0]] * 2)
    with pytest.raises(TypeError):
        FrameIdentifier(store="nope", client=mock).fit([])
    with pytest.raises(BudgetExceeded) as err:
        FrameIdentifier(store=store, frames=FRAMES, client=mock, n_shots=5, max_prompt_chars=100).fit(split.icl_pool)
    assert err.value.shots == 5


def test_predict_before_fit(store, mock):
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        FrameIdentifier(store=store, client=mock).predict(["a"])


def test_input_validation(store, split, mock):
    est = FrameIdentifier(store=store, client=mock).fit(split.icl_pool[:2])
    with pytest.raises(TypeError):
        est.predict("one sentence")
    with pytest.raises(ValueError):
        est.predict(["two\nlines"])
    with pytest.raises(ValueError):
        est.predict([" "])
    lab = ArgumentLabeler(store=store, client=mock).fit([])
    ex = store.example(split.eval_set[0])
    bad = gold_pair(ex).__class__(ex.frame_name, ex.target, "wrong")
    with pytest.raises(ValueError):
        lab.predict([(ex.sentence, [bad])])


def test_fi_predict_and_score(store, split, eval_examples, mock):
    est = FrameIdentifier(store=store, frames=FRAMES, client=mock, n_shots=5).fit(split.icl_pool)
    X = [ex.sentence for ex in eval_examples]
    pred = est.predict(X)
    assert pred == [(gold_pair(ex),) for ex in eval_examples]
    assert est.score(X, [[gold_pair(ex)] for ex in eval_examples]) == 1.0


def test_fsrl_and_fsp_score(store, split, eval_examples, mock):
    y = [[gold_instance(ex, store)] for ex in eval_examples]
    lab = ArgumentLabeler(store=store, frames=FRAMES, client=mock, n_shots=3).fit(split.icl_pool)
    assert lab.score([(ex.sentence, [gold_pair(ex)]) for ex in eval_examples], y) == 1.0
    fsp = FrameSemanticParser(store=store, frames=FRAMES, client=mock, n_shots=3).fit(split.icl_pool)
    assert fsp.score([ex.sentence for ex in eval_examples], y) == 1.0


def test_fixed_empty_scores_zero(store, split, eval_examples):
    est = FrameSemanticParser(store=store, client=MockProvider(store, FixedText("[]"))).fit([])
    assert est.score([ex.sentence for ex in eval_examples], [[gold_instance(ex, store)] for ex in eval_examples]) == 0.0


def test_n_jobs_preserves_order(store, split, eval_examples, mock):
    X = [ex.sentence for ex in eval_examples]
    serial = FrameSemanticParser(store=store, client=mock, n_shots=2).fit(split.icl_pool).predict(X)
    parallel = FrameSemanticParser(store=store, client=mock, n_shots=2, n_jobs=4).fit(split.icl_pool).predict(X)
    assert serial == parallel


class Refuser(Provider):
    network = False

    def send(self, request):
        raise ProviderRefusal("declined")


def test_refusal_is_empty_prediction(store, eval_examples):
    est = FrameIdentifier(store=store, client=Refuser("r")).fit([])
    res = est.predict_detailed([eval_examples[0].sentence])
    assert res[0].refused and res[0].outcome.instances == ()
    assert [w.code for w in res[0].outcome.warnings] == ["ProviderRefusal"]


def test_bad_client(store):
    est = FrameIdentifier(store=store, client=object()).fit([])
    with pytest.raises(TypeError):
        est.predict(["x"])


def test_client_object_accepted(store, eval_examples, tmp_path):
    client = LLMClient(MockProvider(store), cache=tmp_path)
    est = FrameIdentifier(store=store, client=client).fit([])
    first = est.predict_detailed([eval_examples[0].sentence])
    again = est.predict_detailed([eval_examples[0].sentence])
    assert not first[0].cached and again[0].cached
