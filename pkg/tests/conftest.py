import random
import sys
from pathlib import Path

import numpy as np
import pytest

from minplus_tsp.kernels import INF
from minplus_tsp.solvers import Instance

REPO = Path(__file__).resolve().parent.parent
TSPLIB_DIR = REPO / "data" / "tsplib"


def random_costs(rng: random.Random, n: int, max_w: int = 1000, symmetric: bool = False):
    c = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and not (symmetric and j < i):
                c[i][j] = rng.randint(1, max_w)
                if symmetric:
                    c[j][i] = c[i][j]
    return c


def random_ext_matrix(rng: np.random.Generator, m: int, p: int, inf_density: float, high: int = 1000):
    a = rng.integers(0, high, size=(m, p), dtype=np.uint64)
    a[rng.random((m, p)) < inf_density] = INF
    return a


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def small_instance():
    return Instance([[0, 1, 15, 6], [2, 0, 7, 3], [9, 6, 0, 12], [10, 4, 8, 0]])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
