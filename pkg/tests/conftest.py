from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from hacosa.instance import fig4_fixture, load_tsplib

DATA = Path(__file__).resolve().parents[1] / "data" / "tsplib"

# The two example parents, as 1-based labels.
PARENT1 = [1, 6, 8, 4, 5, 7, 3, 2]
PARENT2 = [6, 2, 4, 8, 5, 1, 7, 3]


def tsplib(name):
    path = DATA / f"{name}.tsp"
    if not path.exists():
        pytest.skip(f"{path} not available")
    return load_tsplib(path)


def held_karp(d) -> int:
    """Exact optimum by dynamic programming over subsets (independent of brute force)."""
    d = np.asarray(d)
    n = d.shape[0]
    if n <= 3:
        return int(sum(d[k, (k + 1) % n] for k in range(n)))
    cost = {(1 << k, k): int(d[0, k]) for k in range(1, n)}
    for size in range(2, n):
        for subset in combinations(range(1, n), size):
            bits = sum(1 << k for k in subset)
            for k in subset:
                prev = bits & ~(1 << k)
                cost[(bits, k)] = min(cost[(prev, m)] + int(d[m, k]) for m in subset if m != k)
    full = sum(1 << k for k in range(1, n))
    return min(cost[(full, k)] + int(d[k, 0]) for k in range(1, n))


@pytest.fixture
def fig4():
    return fig4_fixture()


@pytest.fixture
def parents(fig4):
    from hacosa.genetic import ParentPair
    from hacosa.tour import Tour

    return ParentPair(Tour.from_order(fig4, [c - 1 for c in PARENT1]),
                      Tour.from_order(fig4, [c - 1 for c in PARENT2]))


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
