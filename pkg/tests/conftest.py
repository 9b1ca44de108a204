import pytest

from frameicl.dataset import SplitConfig, stratified_split
from frameicl.fixtures import load_fixture_store

FRAMES = ("Killing", "Theft", "Rescuing")


@pytest.fixture(scope="session")
def store():
    return load_fixture_store()


@pytest.fixture(scope="session")
def split_config():
    return SplitConfig(FRAMES, 15, 10, 7)


@pytest.fixture(scope="session")
def split(store, split_config):
    return stratified_split(store, split_config)


@pytest.fixture
def eval_examples(store, split):
    return [store.example(i) for i in split.eval_set]


# acceptance criteria lines, printed together at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        lines = list(ACCEPTANCE_LINES)
        if not any("criterion 12" in l for l in lines):
            lines.append("[SKIP] criterion 12: live FI smoke test (network provider; run with -m live)")
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
