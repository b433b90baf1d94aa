import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mobb.model import from_gap, from_knapsack  # noqa: E402

_REPORT: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Lines collected here are printed once at the end of the run."""
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_knapsack():
    # items (w, c1, c2) = (2, 3, 1), (2, 1, 3), (1, 1, 1), capacity 3
    return from_knapsack([2, 2, 1], 3, [[3, 1, 1], [1, 3, 1]])


def random_knapsack(rng: np.random.Generator, n: int, p: int):
    w = rng.integers(1, 20, size=n)
    profits = rng.integers(1, 20, size=(p, n))
    return from_knapsack(w, max(1, int(w.sum()) // 2), profits)


def random_gap(rng: np.random.Generator, m: int, j: int, p: int):
    r = rng.integers(1, 10, size=(m, j))
    costs = rng.integers(1, 20, size=(p, m, j))
    cap = np.maximum(1, (r.sum(axis=1) * 0.6).astype(int))
    return from_gap(costs, r, cap)
