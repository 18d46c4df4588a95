"""Brute-force oracles and hypothesis strategies shared by the tests.

The oracles work on plain Python sets and loops and never call the
package's kernels, so they are an independent route to every answer.
"""

from __future__ import annotations

import itertools
import sys
from collections import deque

import numpy as np
from hypothesis import settings
from hypothesis import strategies as st

from coarse_matrix.algebra import IndexSet, SubsetArray, SubsetMatrix
from coarse_matrix.space import FiniteMetricSpace, Subset, disjoint_union, from_graph, from_table, grid, interval

# first calls pay for numba compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def oracle_ball(space: FiniteMetricSpace, members, r: float) -> set[int]:
    members = list(members)
    return {x for x in range(len(space)) if any(space.dist[x, a] <= r for a in members)}


def oracle_adjacent(space: FiniteMetricSpace, x: int, y: int, r: float) -> bool:
    return any(space.dist[z, x] <= r and space.dist[z, y] <= r for z in range(len(space)))


def oracle_components(space: FiniteMetricSpace, members, r: float) -> list[set[int]]:
    """BFS over the witness-adjacency graph restricted to ``members``."""
    todo = sorted(set(int(m) for m in members))
    left = set(todo)
    out = []
    for start in todo:
        if start not in left:
            continue
        cls = {start}
        left.discard(start)
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in sorted(left):
                if oracle_adjacent(space, x, y, r):
                    left.discard(y)
                    cls.add(y)
                    queue.append(y)
        out.append(cls)
    return out


def oracle_diameter(space: FiniteMetricSpace, members) -> float:
    members = list(members)
    return max((space.dist[a, b] for a in members for b in members), default=0.0)


def oracle_components_norm(space: FiniteMetricSpace, members, r: float) -> float:
    return max((oracle_diameter(space, c) for c in oracle_components(space, members, r)), default=0.0)


def oracle_chain(space: FiniteMetricSpace, r: float, x: int, y: int) -> float:
    if x == y:
        return 0
    seen = {x: 0}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        for v in range(len(space)):
            if v not in seen and oracle_adjacent(space, u, v, r):
                seen[v] = seen[u] + 1
                queue.append(v)
    return seen.get(y, float("inf"))


def as_sets(a: SubsetArray) -> list[set[int]]:
    return [set(int(i) for i in e.indices) for e in a.entries()]


def matrix_sets(m: SubsetMatrix) -> list[list[set[int]]]:
    return [[set(int(i) for i in m[s, t].indices) for t in m.cols] for s in m.rows]


def oracle_matmul(left: list[list[set]], right: list[list[set]]) -> list[list[set]]:
    inner = len(right)
    return [
        [set().union(*(left[s][t] & right[t][c] for t in range(inner))) for c in range(len(right[0]))]
        for s in range(len(left))
    ]


def oracle_triangle_ok(table) -> bool:
    n = len(table)
    for x, y, z in itertools.product(range(n), repeat=3):
        a, b = table[x][z], table[z][y]
        if np.isfinite(a) and np.isfinite(b) and table[x][y] > a + b:
            return False
    return True


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


@st.composite
def line_spaces(draw, min_n=1, max_n=12):
    n = draw(st.integers(min_n, max_n))
    pts = sorted(draw(st.sets(st.integers(0, 3 * max_n), min_size=n, max_size=n)))
    coords = np.array(pts, dtype=float)
    return from_table(np.abs(coords[:, None] - coords[None, :]), labels=pts, name=f"L{n}")


@st.composite
def graph_spaces(draw, min_n=2, max_n=12):
    n = draw(st.integers(min_n, max_n))
    weights = st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0])
    edges = [(i, i + 1, draw(weights)) for i in range(n - 1) if draw(st.booleans()) or i % 3]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), weights), max_size=n))
    edges += [(u, v, w) for u, v, w in extra if u != v]
    return from_graph(n, edges)


@st.composite
def small_spaces(draw, max_n=12):
    kind = draw(st.sampled_from(["line", "graph", "grid", "union"]))
    if kind == "line":
        return draw(line_spaces(max_n=max_n))
    if kind == "graph":
        return draw(graph_spaces(max_n=max_n))
    if kind == "grid":
        w = draw(st.integers(1, 4))
        h = draw(st.integers(1, max(1, max_n // w)))
        return grid((w, h), draw(st.sampled_from(["l1", "sup"])))
    a = draw(st.integers(1, max_n // 2))
    return disjoint_union([interval(a), interval(draw(st.integers(1, max_n - a)))])


def subsets(space: FiniteMetricSpace):
    n = len(space)
    return st.lists(st.booleans(), min_size=n, max_size=n).map(lambda bits: Subset(space, np.array(bits, dtype=bool)))


def arrays(space: FiniteMetricSpace, index: IndexSet):
    n = len(space)
    return st.lists(st.lists(st.booleans(), min_size=n, max_size=n), min_size=len(index), max_size=len(index)).map(
        lambda rows: SubsetArray(space, index, np.array(rows, dtype=bool).reshape(len(index), n)))


def matrices(space: FiniteMetricSpace, rows: IndexSet, cols: IndexSet):
    n = len(space)
    size = len(rows) * len(cols) * n
    return st.lists(st.booleans(), min_size=size, max_size=size).map(
        lambda bits: SubsetMatrix(space, rows, cols, np.array(bits, dtype=bool).reshape(len(rows), len(cols), n)))


radii = st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
