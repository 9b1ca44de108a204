"""Provider-agnostic completion client with a content-addressed response cache.

One ``complete`` call corresponds to one test item. Cache hits never reach
the provider; misses make one upstream call, retried with exponential
backoff and jitter on rate limits and transport failures.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..errors import AuthError, ProviderError, ProviderRefusal, RateLimited, TransportError
from ..wire import TaskKind

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.01
DEFAULT_MAX_OUTPUT = 2048
DEFAULT_MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class CompletionRequest:
    system_prompt: str
    user_input: str
    model_id: str
    temperature: float = DEFAULT_TEMPERATURE
    max_output: int = DEFAULT_MAX_OUTPUT
    # routing hint for offline providers; never sent upstream
    task: TaskKind | None = None

    def __post_init__(self):
        if not 0.0 <= float(self.temperature) <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output <= 0:
            raise ValueError("max_output must be positive")
        if self.task is not None:
            object.__setattr__(self, "task", TaskKind(self.task))


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    provider_meta: dict = field(default_factory=dict)
    cached: bool = False


def cache_key(request: CompletionRequest) -> str:
    """SHA-256 over (model_id, temperature, system prompt, user input)."""
    payload = json.dumps(
        [request.model_id, repr(float(request.temperature)), request.system_prompt, request.user_input],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _safe_dirname(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", model_id) or "_"


class ResponseCache:
    """On-disk cache laid out as ``<root>/<model_id>/<digest>.json``."""

    def __init__(self, root):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def path(self, request: CompletionRequest) -> Path:
        return self.root / _safe_dirname(request.model_id) / f"{cache_key(request)}.json"

    def get(self, request: CompletionRequest) -> CompletionResponse | None:
        path = self.path(request)
        if not path.exists():
            return None
        with self._lock(path.stem):
            try:
                entry = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                log.warning("ignoring unreadable cache entry %s", path)
                return None
        return CompletionResponse(entry["response"]["text"], entry["response"].get("provider_meta", {}), cached=True)

    def put(self, request: CompletionRequest, response: CompletionResponse) -> Path:
        path = self.path(request)
        entry = {
            "key": path.stem,
            "request": {
                "model_id": request.model_id,
                "temperature": request.temperature,
                "max_output": request.max_output,
                "system_prompt": request.system_prompt,
                "user_input": request.user_input,
            },
            "response": {"text": response.text, "provider_meta": response.provider_meta},
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock(path.stem):
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
            tmp.write_text(json.dumps(entry, ensure_ascii=False, indent=1), encoding="utf-8")
            os.replace(tmp, path)
        return path


class RateLimiter:
    """Spaces calls at least ``60 / per_minute`` seconds apart."""

    def __init__(self, per_minute: float | None, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / per_minute if per_minute else 0.0
        self._clock = clock
        self._sleep = sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            wait = self._next - now
            self._next = max(now, self._next) + self.interval
        if wait > 0:
            self._sleep(wait)


class Provider:
    """Base class: one ``send`` is one upstream call."""

    network = True

    def __init__(self, model_id: str, rate_limit_per_min: float | None = None, max_in_flight: int = 4):
        self.model_id = model_id
        self.max_in_flight = max_in_flight
        self.limiter = RateLimiter(rate_limit_per_min)
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))
        self._count_lock = threading.Lock()
        self.calls = 0

    def __deepcopy__(self, memo):
        return self

    def _count(self) -> None:
        with self._count_lock:
            self.calls += 1

    def send(self, request: CompletionRequest) -> tuple[str, dict]:
        raise NotImplementedError

    def __call__(self, request: CompletionRequest) -> tuple[str, dict]:
        with self._slots:
            self.limiter.acquire()
            self._count()
            return self.send(request)


class LLMClient:
    """Cached, retrying front end to one provider. Safe for concurrent use."""

    def __init__(
        self,
        provider: Provider,
        cache=None,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff_base: float = 1.0,
        backoff_max: float = 60.0,
        seed: int = 0,
        sleep=time.sleep,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.provider = provider
        if cache is not None and not isinstance(cache, ResponseCache):
            cache = ResponseCache(cache)
        self.cache = cache
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self._rng = random.Random(seed)
        self._rng_lock = threading.Lock()
        self._sleep = sleep

    def __deepcopy__(self, memo):
        return self

    @property
    def model_id(self) -> str:
        return self.provider.model_id

    def _backoff(self, attempt: int) -> float:
        with self._rng_lock:
            jitter = self._rng.random()
        return min(self.backoff_max, self.backoff_base * (2 ** attempt) * (1.0 + jitter))

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        if self.cache is not None:
            hit = self.cache.get(request)
            if hit is not None:
                return hit
        last: ProviderError | None = None
        for attempt in range(self.max_attempts):
            started = time.perf_counter()
            try:
                text, meta = self.provider(request)
            except (RateLimited, TransportError) as exc:
                last = exc
                if attempt + 1 < self.max_attempts:
                    delay = self._backoff(attempt)
                    log.info("%s: %s; retrying in %.2fs", request.model_id, exc, delay)
                    self._sleep(delay)
                continue
            meta = dict(meta)
            meta.setdefault("latency_ms", round((time.perf_counter() - started) * 1000, 3))
            meta["attempts"] = attempt + 1
            response = CompletionResponse(text, meta, cached=False)
            if self.cache is not None:
                self.cache.put(request, response)
            return response
        assert last is not None
        raise type(last)(f"{last} (gave up after {self.max_attempts} attempts)")


def complete(provider, request: CompletionRequest, cache=None) -> CompletionResponse:
    """Single-shot convenience wrapper around :class:`LLMClient`."""
    client = provider if isinstance(provider, LLMClient) else LLMClient(provider, cache=cache)
    return client.complete(request)


# -- declarative HTTP providers ---------------------------------------------

SHAPES = {
    "messages": {
        "request_template": {
            "model": "{{model}}",
            "system": "{{system}}",
            "messages": [{"role": "user", "content": "{{user}}"}],
            "max_tokens": "{{max_output}}",
            "temperature": "{{temperature}}",
        },
        "response_path": "content.0.text",
        "usage_path": "usage",
        "auth_header": "x-api-key",
        "auth_prefix": "",
        "headers": {"anthropic-version": "2023-06-01"},
        "refusal_path": "stop_reason",
        "refusal_values": ["refusal"],
    },
    "chat/completions": {
        "request_template": {
            "model": "{{model}}",
            "messages": [
                {"role": "system", "content": "{{system}}"},
                {"role": "user", "content": "{{user}}"},
            ],
            "max_tokens": "{{max_output}}",
            "temperature": "{{temperature}}",
        },
        "response_path": "choices.0.message.content",
        "usage_path": "usage",
        "auth_header": "Authorization",
        "auth_prefix": "Bearer ",
        "headers": {},
        "refusal_path": "choices.0.finish_reason",
        "refusal_values": ["content_filter"],
    },
}


def fill_template(template, values: dict):
    """Substitute ``{{name}}`` placeholders; a whole-string placeholder keeps the value's type."""
    if isinstance(template, dict):
        return {k: fill_template(v, values) for k, v in template.items()}
    if isinstance(template, list):
        return [fill_template(v, values) for v in template]
    if isinstance(template, str):
        m = re.fullmatch(r"\{\{(\w+)\}\}", template)
        if m:
            return values[m.group(1)]
        return re.sub(r"\{\{(\w+)\}\}", lambda mm: str(values[mm.group(1)]), template)
    return template


def lookup_path(obj, path: str):
    for part in path.split(".") if path else []:
        if isinstance(obj, list):
            obj = obj[int(part)]
        else:
            obj = obj[part]
    return obj


class HTTPProvider(Provider):
    """Chat API described entirely by configuration.

    ``shape`` selects built-in defaults ("messages" or "chat/completions");
    any of them may be overridden by passing the same key explicitly.
    """

    def __init__(
        self,
        model_id: str,
        base_url: str,
        auth_env: str | None = None,
        shape: str = "chat/completions",
        upstream_model: str | None = None,
        rate_limit_per_min: float | None = None,
        max_in_flight: int = 4,
        timeout: float = 300.0,
        transport=None,
        **overrides,
    ):
        super().__init__(model_id, rate_limit_per_min, max_in_flight)
        if shape not in SHAPES:
            raise ValueError(f"unknown provider shape {shape!r}; expected one of {sorted(SHAPES)}")
        unknown = set(overrides) - set(SHAPES[shape])
        if unknown:
            raise ValueError(f"unknown provider settings: {sorted(unknown)}")
        self.settings = {**SHAPES[shape], **{k: v for k, v in overrides.items() if v is not None}}
        self.base_url = base_url
        self.auth_env = auth_env
        self.upstream_model = upstream_model or model_id
        self.timeout = timeout
        self._transport = transport
        self._http = None
        self._http_lock = threading.Lock()

    def _client(self):
        import httpx

        with self._http_lock:
            if self._http is None:
                self._http = httpx.Client(timeout=self.timeout, transport=self._transport)
            return self._http

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json", **self.settings["headers"]}
        if self.auth_env:
            key = os.environ.get(self.auth_env)
            if not key:
                raise AuthError(f"environment variable {self.auth_env} is not set")
            headers[self.settings["auth_header"]] = self.settings["auth_prefix"] + key
        return headers

    def send(self, request: CompletionRequest) -> tuple[str, dict]:
        import httpx

        body = fill_template(
            self.settings["request_template"],
            {
                "model": self.upstream_model,
                "system": request.system_prompt,
                "user": request.user_input,
                "temperature": request.temperature,
                "max_output": request.max_output,
            },
        )
        headers = self._headers()
        started = time.perf_counter()
        try:
            resp = self._client().post(self.base_url, json=body, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        latency = round((time.perf_counter() - started) * 1000, 3)
        status = resp.status_code
        if status in (401, 403):
            raise AuthError(f"HTTP {status} from {self.base_url}")
        if status == 429:
            raise RateLimited(f"HTTP 429 from {self.base_url}")
        if status >= 500:
            raise TransportError(f"HTTP {status} from {self.base_url}")
        if status >= 400:
            text = resp.text
            if re.search(r"content[_ ]policy|safety|refus", text, re.IGNORECASE):
                raise ProviderRefusal(f"HTTP {status}: {text[:200]}")
            raise ProviderError(f"HTTP {status}: {text[:200]}")
        try:
            data = resp.json()
        except ValueError as exc:
            raise TransportError(f"invalid JSON response: {exc}") from exc
        refusal_path = self.settings.get("refusal_path")
        if refusal_path:
            try:
                if lookup_path(data, refusal_path) in self.settings.get("refusal_values", ()):
                    raise ProviderRefusal(f"provider refused ({refusal_path})")
            except (KeyError, IndexError, TypeError, ValueError):
                pass
        try:
            text = lookup_path(data, self.settings["response_path"])
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"response has no {self.settings['response_path']!r}") from exc
        meta = {"latency_ms": latency}
        try:
            meta["usage"] = lookup_path(data, self.settings["usage_path"])
        except (KeyError, IndexError, TypeError, ValueError):
            pass
        if isinstance(data, dict) and "model" in data:
            meta["model_revision"] = data["model"]
        return text if isinstance(text, str) else json.dumps(text), meta
