import numpy as np
import pytest

from dsfm.core import Decomposition
from dsfm.oracles import EdgeCut

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def toy():
    """Two unit edges on a 3-path with x0 = (1, 0, -1)."""
    return Decomposition(3, [EdgeCut(0, 1), EdgeCut(1, 2)], [1.0, 0.0, -1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
