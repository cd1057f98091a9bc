import numpy as np
import pytest

from cantorfence.defining_sequence import DefiningTree


@pytest.fixture(scope="session")
def shared_tree():
    """Default tree, warmed breadth first so the low schedule values are fixed."""
    tree = DefiningTree()
    for step in range(5):
        tree.level_count(step, budget=10**9)
    return tree


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; a test that raises before recording is reported as FAIL."""
    key = request.node.name

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[key] = (number, f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})")
        return ok

    yield record
    if key not in _ACCEPTANCE:
        number = getattr(request.node.function, "criterion_number", 0)
        _ACCEPTANCE[key] = (number, f"FAIL criterion {number}: {key} raised before reporting")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE.values()):
        terminalreporter.write_line(line)
