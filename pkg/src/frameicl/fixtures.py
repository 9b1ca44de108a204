"""Access to the bundled synthetic FrameNet-style corpus used by tests and demos."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path

from .framenet_xml import import_framenet
from .store import FrameStore

FIXTURE_FRAMES = ("Killing", "Theft", "Rescuing")


def fixture_dir() -> Path:
    return Path(str(resources.files("frameicl") / "data" / "fixtures"))


def example_config_path() -> Path:
    return Path(str(resources.files("frameicl") / "data" / "configs" / "experiments.yaml"))


@lru_cache(maxsize=1)
def load_fixture_store() -> FrameStore:
    root = fixture_dir()
    return import_framenet(root / "frame", root / "lu")
