"""Seeded random instances for property tests and the acceptance run."""

from __future__ import annotations

import numpy as np

from .algebra import IndexSet, SubsetArray, SubsetMatrix
from .space import FiniteMetricSpace, Subset, disjoint_union, from_graph, from_table, grid, interval, rescale


def rng_for(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """One of: integer points on a line, a small l1/sup grid, a random graph,
    a disjoint union of two lines.  Distances are integers or halves."""
    kind = int(rng.integers(4))
    if kind == 0 or n < 4:
        pts = np.sort(rng.choice(3 * n + 1, size=n, replace=False)).astype(float)
        return from_table(np.abs(pts[:, None] - pts[None, :]), name=f"L{n}")
    if kind == 1:
        w = max(2, int(np.sqrt(n)))
        h = max(1, n // w)
        return grid((w, h), "l1" if rng.integers(2) else "sup")
    if kind == 2:
        edges = [(i, i + 1, float(rng.integers(1, 3))) for i in range(n - 1)]
        for _ in range(n // 3):
            u, v = rng.choice(n, size=2, replace=False)
            edges.append((int(u), int(v), float(rng.integers(1, 5)) / 2))
        return from_graph(n, edges)
    a = n // 2
    return disjoint_union([interval(a), interval(n - a)])


def random_subset(rng: np.random.Generator, space: FiniteMetricSpace, density: float | None = None) -> Subset:
    p = rng.uniform(0.1, 0.7) if density is None else density
    return Subset(space, rng.random(len(space)) < p)


def random_array(rng: np.random.Generator, space: FiniteMetricSpace, size: int,
                 index: IndexSet | None = None) -> SubsetArray:
    index = index or IndexSet.range(size)
    return SubsetArray(space, index, rng.random((len(index), len(space))) < rng.uniform(0.1, 0.6))


def random_matrix(rng: np.random.Generator, space: FiniteMetricSpace, rows: IndexSet, cols: IndexSet) -> SubsetMatrix:
    p = rng.uniform(0.1, 0.6)
    return SubsetMatrix(space, rows, cols, rng.random((len(rows), len(cols), len(space))) < p)


def random_cover_array(rng: np.random.Generator, space: FiniteMetricSpace, size: int) -> SubsetArray:
    """Random array whose union is the whole space."""
    masks = rng.random((size, len(space))) < 0.3
    owner = rng.integers(size, size=len(space))
    masks[owner, np.arange(len(space))] = True
    return SubsetArray(space, IndexSet.range(size), masks)


def random_column_cover_matrix(rng: np.random.Generator, space: FiniteMetricSpace, rows: IndexSet,
                               cols: IndexSet) -> SubsetMatrix:
    masks = rng.random((len(rows), len(cols), len(space))) < 0.3
    for t in range(len(cols)):
        owner = rng.integers(len(rows), size=len(space))
        masks[owner, t, np.arange(len(space))] = True
    return SubsetMatrix(space, rows, cols, masks)


# ---------------------------------------------------------------------------
# orthogonal matrices
# ---------------------------------------------------------------------------


def cell_space(cells: int, cell: int, gap: int) -> tuple[FiniteMetricSpace, list[np.ndarray]]:
    """A line cut into ``cells`` blocks of ``cell`` points with ``gap`` empty units between blocks."""
    pts, blocks = [], []
    x = 0
    for _ in range(cells):
        blocks.append(np.arange(len(pts), len(pts) + cell))
        pts.extend(range(x, x + cell))
        x += cell + gap
    coords = np.array(pts, dtype=float)
    sp = from_table(np.abs(coords[:, None] - coords[None, :]), labels=pts, name=f"cells{cells}")
    return sp, blocks


def random_orthogonal_matrix(rng: np.random.Generator, space: FiniteMetricSpace, blocks: list[np.ndarray],
                             rows: IndexSet, cols: IndexSet) -> SubsetMatrix:
    """Entries live in blocks; within each column the blocks are distinct.

    With block gaps above ``2r`` distinct blocks are scale-``r``-disjoint, so
    every column is too.
    """
    if len(rows) > len(blocks):
        raise ValueError("need at least as many blocks as rows")
    masks = np.zeros((len(rows), len(cols), len(space)), dtype=np.bool_)
    for t in range(len(cols)):
        chosen = rng.choice(len(blocks), size=len(rows), replace=False)
        for s, b in enumerate(chosen):
            members = blocks[b]
            keep = rng.random(members.size) < rng.uniform(0.2, 1.0)
            if rng.random() < 0.15:
                keep[:] = False
            masks[s, t, members[keep]] = True
    return SubsetMatrix(space, rows, cols, masks)


# ---------------------------------------------------------------------------
# cluster sets and discrete factors
# ---------------------------------------------------------------------------


def cluster_set(space: FiniteMetricSpace, period: int, width: int, offset: int = 0) -> Subset:
    """Points of an interval space with ``(x - offset) mod period < width``."""
    idx = np.arange(len(space))
    return Subset(space, ((idx - offset) % period) < width)


def random_cluster_set(rng: np.random.Generator, n: int, clusters: int, width_max: int = 3,
                       gap_min: int = 4) -> tuple[FiniteMetricSpace, Subset]:
    space = interval(n)
    mask = np.zeros(n, dtype=np.bool_)
    x = int(rng.integers(0, gap_min))
    for _ in range(clusters):
        w = int(rng.integers(1, width_max + 1))
        if x + w > n:
            break
        mask[x:x + w] = True
        x += w + gap_min + int(rng.integers(0, 3 * gap_min))
    return space, Subset(space, mask)


def discrete_factors(count: int, size: int) -> list[FiniteMetricSpace]:
    """Factor ``i`` (from 1) is an interval of ``size`` points scaled by ``2i``."""
    out = []
    for i in range(1, count + 1):
        sp = rescale(interval(size), lambda d, c=2 * i: c * d, name=f"{2 * i}I{size}")
        out.append(sp)
    return out
