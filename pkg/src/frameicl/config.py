"""YAML experiment configuration.

Top-level sections: ``corpus``, ``defaults``, ``budgets``, ``providers``,
``splits``, ``experiments``. Corpus paths resolve against the config file;
the CLI resolves a relative ``defaults.cache_dir`` against its ``--out``
directory.
See ``data/configs/experiments.yaml`` for a complete example.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import yaml

from .dataset import SplitConfig
from .errors import ConfigError
from .fixtures import load_fixture_store
from .framenet_xml import import_framenet
from .llm.client import DEFAULT_MAX_ATTEMPTS, SHAPES, HTTPProvider, LLMClient, ResponseCache
from .llm.mock import Corrupt, EchoGold, FixedText, MockProvider
from .runner import ExperimentSpec
from .store import FrameStore, load_normalized

_SECTIONS = {"corpus", "defaults", "budgets", "providers", "splits", "experiments"}
_MOCK_MODES = {"echo_gold", "corrupt", "fixed_text"}


@dataclass(frozen=True)
class ProviderConfig:
    model_id: str
    kind: str
    options: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"provider {self.model_id!r}: kind must be 'mock' or 'http'")
        if self.kind == "mock":
            mode = self.options.get("mode", "echo_gold")
            if mode not in _MOCK_MODES:
                raise ConfigError(f"provider {self.model_id!r}: unknown mock mode {mode!r}")
        else:
            if "base_url" not in self.options:
                raise ConfigError(f"provider {self.model_id!r}: http providers need base_url")
            shape = self.options.get("shape", "chat/completions")
            if shape not in SHAPES:
                raise ConfigError(f"provider {self.model_id!r}: unknown shape {shape!r}")

    @property
    def network(self) -> bool:
        return self.kind == "http"

    def build(self, store: FrameStore, core_only: bool = True):
        opts = dict(self.options)
        if self.kind == "mock":
            mode = opts.pop("mode", "echo_gold")
            if mode == "echo_gold":
                m = EchoGold()
            elif mode == "corrupt":
                m = Corrupt(float(opts.pop("rate")), int(opts.pop("seed", 0)))
            else:
                m = FixedText(str(opts.pop("text")))
            return MockProvider(store, m, model_id=self.model_id, core_only=core_only,
                                max_in_flight=int(opts.pop("max_in_flight", 8)))
        try:
            return HTTPProvider(self.model_id, **opts)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"provider {self.model_id!r}: {exc}") from None


@dataclass
class Config:
    providers: dict
    splits: dict
    experiments: dict
    corpus: dict = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def max_prompt_chars(self):
        return self.budgets.get("max_prompt_chars")

    def experiment(self, name: str) -> ExperimentSpec:
        try:
            return self.experiments[name]
        except KeyError:
            raise ConfigError(f"unknown experiment {name!r}; known: {sorted(self.experiments)}") from None

    def split_config(self, name: str) -> SplitConfig:
        try:
            return self.splits[name]
        except KeyError:
            raise ConfigError(f"unknown split {name!r}; known: {sorted(self.splits)}") from None

    def provider(self, model_id: str) -> ProviderConfig:
        try:
            return self.providers[model_id]
        except KeyError:
            raise ConfigError(f"no provider configured for model {model_id!r}") from None

    def resolve(self, path) -> Path:
        p = Path(path).expanduser()
        return p if p.is_absolute() else self.base_dir / p

    def load_store(self) -> FrameStore:
        source = self.corpus.get("source", "fixtures")
        if source == "fixtures":
            return load_fixture_store()
        if source == "normalized":
            return load_normalized(self.resolve(self.corpus["path"]))
        if source == "framenet":
            root = self.resolve(self.corpus["path"])
            return import_framenet(root / "frame", root / "lu", self.corpus.get("frames"))
        raise ConfigError(f"corpus.source must be fixtures, normalized or framenet, got {source!r}")

    def build_clients(self, model_ids, store: FrameStore, cache_dir=None, seed=None, core_only=True) -> dict:
        """One LLMClient per model. ``cache_dir`` is used as given (None disables caching)."""
        cache = ResponseCache(cache_dir) if cache_dir else None
        seed = self.defaults.get("seed", 0) if seed is None else seed
        attempts = int(self.defaults.get("max_attempts", DEFAULT_MAX_ATTEMPTS))
        clients = {}
        for model_id in model_ids:
            provider = self.provider(model_id).build(store, core_only)
            clients[model_id] = LLMClient(provider, cache=cache, max_attempts=attempts, seed=seed)
        return clients


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(f"{where} must be a mapping")
    return dict(value)


def parse_config(data, base_dir=".") -> Config:
    data = _mapping(data, "config")
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    defaults = _mapping(data.get("defaults"), "defaults")

    providers = {}
    for model_id, opts in _mapping(data.get("providers"), "providers").items():
        opts = _mapping(opts, f"providers.{model_id}")
        kind = opts.pop("kind", None)
        providers[str(model_id)] = ProviderConfig(str(model_id), kind, opts)

    splits = {}
    for name, opts in _mapping(data.get("splits"), "splits").items():
        opts = _mapping(opts, f"splits.{name}")
        try:
            splits[name] = SplitConfig(
                tuple(opts["frames"]), int(opts["n_icl"]), int(opts["n_eval"]),
                int(opts.get("seed", defaults.get("seed", 0))),
            )
        except KeyError as exc:
            raise ConfigError(f"splits.{name}: missing {exc.args[0]!r}") from None
        except ValueError as exc:
            raise ConfigError(f"splits.{name}: {exc}") from None

    experiments = {}
    raw = data.get("experiments") or []
    if not isinstance(raw, list):
        raise ConfigError("experiments must be a list")
    for entry in raw:
        spec = ExperimentSpec.from_dict(_mapping(entry, "experiment"))
        if spec.name in experiments:
            raise ConfigError(f"duplicate experiment name {spec.name!r}")
        if spec.split not in splits:
            raise ConfigError(f"experiment {spec.name!r}: unknown split {spec.split!r}")
        for m in spec.model_ids:
            if m not in providers:
                raise ConfigError(f"experiment {spec.name!r}: no provider configured for {m!r}")
        if spec.stage1_from is not None and spec.stage1_from not in experiments:
            raise ConfigError(f"experiment {spec.name!r}: stage1_from names unknown earlier experiment {spec.stage1_from!r}")
        experiments[spec.name] = spec

    return Config(
        providers=providers,
        splits=splits,
        experiments=experiments,
        corpus=_mapping(data.get("corpus"), "corpus"),
        defaults=defaults,
        budgets=_mapping(data.get("budgets"), "budgets"),
        base_dir=Path(base_dir),
    )


def load_config(path) -> Config:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(data, path.parent)
