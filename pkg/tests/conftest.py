import numpy as np
import pytest
from hypothesis import strategies as st

from ricciflow.graph import WeightedGraph

FIG1_EDGES = [("x1", "x2"), ("x1", "x3"), ("x2", "x3"), ("x2", "x4"),
              ("x4", "x5"), ("x4", "x6"), ("x5", "x6")]


def fig1_graph():
    return WeightedGraph([f"x{i}" for i in range(1, 7)], FIG1_EDGES)


def complete_graph(n, w=1.0):
    return WeightedGraph(range(n), [(i, j, w) for i in range(n) for j in range(i + 1, n)])


def cycle_graph(n, w=1.0):
    return WeightedGraph(range(n), [(i, (i + 1) % n, w) for i in range(n)])


def two_triangles(w1=1.0, w2=1.0):
    return WeightedGraph(range(6), [(0, 1, w1), (0, 2, w1), (1, 2, w1),
                                    (3, 4, w2), (3, 5, w2), (4, 5, w2)])


def random_connected_graph(rng, n, extra=None, wlo=0.1, whi=10.0):
    """Random spanning tree plus extra edges, weights uniform on [wlo, whi]."""
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        u, v = int(order[k]), int(order[rng.integers(0, k)])
        edges.add((min(u, v), max(u, v)))
    extra = rng.integers(0, n + 1) if extra is None else extra
    for _ in range(extra):
        u, v = rng.choice(n, 2, replace=False)
        edges.add((int(min(u, v)), int(max(u, v))))
    return WeightedGraph(range(n), [(u, v, float(rng.uniform(wlo, whi))) for u, v in sorted(edges)])


@st.composite
def connected_graphs(draw, min_n=2, max_n=8, wlo=0.1, whi=10.0):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    return random_connected_graph(np.random.default_rng(seed), n, wlo=wlo, whi=whi)


@pytest.fixture
def fig1():
    return fig1_graph()


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def karate():
    from ricciflow.io import load_dataset
    return load_dataset("karate")


# ----------------------------------------------------------------------
# acceptance verdicts: one line per criterion, repeated in the summary
# ----------------------------------------------------------------------

_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record ``PASS``/``FAIL``/``INFO`` for one acceptance criterion."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(cid: str, status: str, detail: str) -> None:
        line = f"{status} {cid}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].strip("C:"))):
            terminalreporter.write_line(line)
