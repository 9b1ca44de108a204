"""In-context frame semantic parsers with a scikit-learn estimator interface.

``fit`` takes the ordered ICL pool (example ids) and renders the prompt;
nothing is learned. ``predict`` sends one request per input item. All
constructor arguments are plain hyper-parameters, so ``get_params``,
``set_params`` and ``clone`` behave as usual::

    fi = FrameIdentifier(store, frames=["Killing"], client=client, n_shots=10)
    pairs = fi.fit(split.icl_pool).predict(sentences)
    args = ArgumentLabeler(store, client=client).fit(split.icl_pool).predict(zip(sentences, pairs))
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import BudgetExceeded, NOutOfRange, ProviderRefusal
from .evaluation import Scope, fi_report, FIView, corpus_items, micro_report
from .llm.client import DEFAULT_MAX_OUTPUT, DEFAULT_TEMPERATURE, CompletionRequest, LLMClient, Provider
from .parsing import ParseOutcome, ParseWarning, parse_prediction
from .prompts import AblationLevel, PromptConfig, estimate_prompt_budget, render_prompt
from .validation import check_pair_inputs, check_sentences, check_shot_ids, check_store
from .wire import TaskKind, format_user_input

REFUSAL = "ProviderRefusal"


@dataclass(frozen=True)
class ItemResult:
    sentence: str
    user_input: str
    raw: str
    outcome: ParseOutcome
    cached: bool
    prompt_digest: str
    provider_meta: dict = field(default_factory=dict)
    refused: bool = False


class _InContextEstimator(BaseEstimator):
    _task: TaskKind

    def __init__(
        self,
        store=None,
        frames=None,
        client=None,
        n_shots=None,
        ablation="full",
        core_only=True,
        temperature=DEFAULT_TEMPERATURE,
        max_output=DEFAULT_MAX_OUTPUT,
        max_prompt_chars=None,
        n_jobs=1,
    ):
        self.store = store
        self.frames = frames
        self.client = client
        self.n_shots = n_shots
        self.ablation = ablation
        self.core_only = core_only
        self.temperature = temperature
        self.max_output = max_output
        self.max_prompt_chars = max_prompt_chars
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        """Select the first ``n_shots`` examples of ``X`` and render the prompt."""
        store = check_store(self.store)
        shots = check_shot_ids(X, store)
        if self.n_shots is not None:
            if not 0 <= self.n_shots <= len(shots):
                raise NOutOfRange(f"n_shots={self.n_shots} but only {len(shots)} shots were given")
            shots = shots[: self.n_shots]
        frames = tuple(self.frames) if self.frames else store.frame_names
        config = PromptConfig(self._task, frames, shots, AblationLevel(self.ablation), self.core_only)
        prompt = render_prompt(store, config)
        if self.max_prompt_chars is not None:
            budget = estimate_prompt_budget(prompt, self.max_prompt_chars)
            if not budget.fits:
                raise BudgetExceeded(len(shots), len(prompt), self.max_prompt_chars)
        self.prompt_ = prompt
        self.shot_ids_ = tuple(shots)
        self.frames_ = frames
        return self

    def _client(self) -> LLMClient:
        if isinstance(self.client, LLMClient):
            return self.client
        if isinstance(self.client, Provider):
            self.client = LLMClient(self.client)
            return self.client
        raise TypeError("client must be an LLMClient or a Provider")

    def _inputs(self, X):
        raise NotImplementedError

    def _predict_one(self, client: LLMClient, sentence: str, pairs) -> ItemResult:
        user_input = format_user_input(self._task, sentence, pairs)
        request = CompletionRequest(
            system_prompt=self.prompt_.text,
            user_input=user_input,
            model_id=client.model_id,
            temperature=self.temperature,
            max_output=self.max_output,
            task=self._task,
        )
        try:
            response = client.complete(request)
        except ProviderRefusal as exc:
            outcome = ParseOutcome((), (ParseWarning(REFUSAL, str(exc)),), ())
            return ItemResult(sentence, user_input, "", outcome, False, self.prompt_.digest, {}, refused=True)
        outcome = parse_prediction(
            self._task, response.text, sentence, self.store, expected_pairs=pairs, core_only=self.core_only
        )
        return ItemResult(
            sentence, user_input, response.text, outcome, response.cached, self.prompt_.digest,
            dict(response.provider_meta),
        )

    def predict_detailed(self, X) -> list[ItemResult]:
        """Like ``predict`` but keeps raw responses, cache flags and parse warnings."""
        check_is_fitted(self, "prompt_")
        items = self._inputs(X)
        client = self._client()
        if self.n_jobs in (None, 1) or len(items) < 2:
            return [self._predict_one(client, s, p) for s, p in items]
        with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
            return list(pool.map(lambda sp: self._predict_one(client, *sp), items))

    def predict(self, X):
        return [r.outcome.instances for r in self.predict_detailed(X)]

    def _score_items(self, X, y, scope: Scope) -> float:
        pred = {str(i): p for i, p in enumerate(self.predict(X))}
        gold = {str(i): g for i, g in enumerate(y)}
        return micro_report(corpus_items(gold), corpus_items(pred), scope).f1


class FrameIdentifier(_InContextEstimator):
    """Frame and target identification: sentence -> frame-target pairs."""

    _task = TaskKind.FI

    def _inputs(self, X):
        return [(s, None) for s in check_sentences(X)]

    def predict(self, X):
        return [tuple(i.pair for i in r.outcome.instances) for r in self.predict_detailed(X)]

    def score(self, X, y):
        """Micro F1 over exact (frame, target span) pairs."""
        pred = {str(i): p for i, p in enumerate(self.predict(X))}
        gold = {str(i): g for i, g in enumerate(y)}
        return fi_report(gold, pred)[FIView.PAIR_EXACT].f1


class ArgumentLabeler(_InContextEstimator):
    """Argument identification for given pairs: (sentence, pairs) -> frame instances."""

    _task = TaskKind.FSRL

    def _inputs(self, X):
        return check_pair_inputs(X)

    def score(self, X, y):
        """Micro F1 over argument spans (targets are given, so excluded)."""
        return self._score_items(X, y, Scope.ARGUMENTS_ONLY)


class FrameSemanticParser(_InContextEstimator):
    """Single-call frame semantic parsing: sentence -> frame instances with arguments."""

    _task = TaskKind.FSP

    def _inputs(self, X):
        return [(s, None) for s in check_sentences(X)]

    def score(self, X, y):
        """Micro F1 over targets and arguments."""
        return self._score_items(X, y, Scope.ALL_ROLES)
