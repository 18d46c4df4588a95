"""Disjoint covers used as inputs to the decomposition constructions.

``interval_bricks`` and ``grid_bricks`` tile a line or a square box with
periodic bricks.  Same-colour bricks are far apart in the chain metric, which
is what the ring construction needs.  ``net_cover`` works on any finite space:
greedy net, nearest-centre cells, then a greedy colouring of the cells whose
balls meet.

None of these covers is trusted.  Callers certify the parts afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import IndexSet, SubsetArray
from .space import FiniteMetricSpace, Subset, _check_radius


@dataclass(frozen=True)
class BrickLayout:
    """Lengths of one period of an interval brick pattern."""

    base: int      # length of an X_0 brick
    block: int     # length of an X_1 brick
    phase: int     # offset of the first X_1 brick inside a period

    @property
    def period(self) -> int:
        return self.base + self.block


def ring_reach(r: float, m: int) -> float:
    """Ambient distance covered by the rings the ring construction uses.

    Rings sit at chain levels up to ``3m + 1``; one chain step moves at most ``2r``.
    """
    return 3 * m * 2 * r


def interval_layout(r: float, m: int) -> BrickLayout:
    """Brick lengths for a two-colour cover of a line at scale ``r`` with ``m`` rows.

    X_1 bricks are ``2(m+1)r`` long.  X_0 bricks must keep consecutive X_1
    bricks further apart than the ring reach on both sides.
    """
    reach = ring_reach(r, m)
    block = int(np.ceil(2 * (m + 1) * r))
    base = int(np.ceil(2 * reach + 2 * r))
    # centre X_1 in its period, snapped down to a whole chain step
    step = 2 * r
    phase = int(((base // 2) // step) * step)
    return BrickLayout(base=base, block=block, phase=phase)


def _coordinates(space: FiniteMetricSpace) -> np.ndarray:
    labels = space.labels
    if not labels:
        return np.zeros((0, 1), dtype=np.int64)
    if isinstance(labels[0], tuple):
        return np.array(labels, dtype=np.int64)
    return np.array(labels, dtype=np.int64)[:, None]


def _stripe(coord: np.ndarray, layout: BrickLayout) -> np.ndarray:
    return ((coord - layout.phase) % layout.period) < layout.block


def interval_bricks(space: FiniteMetricSpace, r: float, m: int) -> SubsetArray:
    """Two-part cover ``(X_0, X_1)`` of an interval space by periodic bricks."""
    _check_radius(r)
    coords = _coordinates(space)
    if coords.shape[1] != 1:
        raise ValueError("interval_bricks needs a one-dimensional space")
    x1 = _stripe(coords[:, 0], interval_layout(r, m))
    return SubsetArray(space, IndexSet.range(2), np.stack([~x1, x1]))


@dataclass(frozen=True)
class GridLayout:
    wall: int       # wall thickness
    junction: int   # side of a junction square
    period: int
    phase: int      # start of the first wall


def grid_layout(r: float, m: int, norm: str = "l1") -> GridLayout:
    """Walls of width ``2(m+1)r`` with square junctions at the crossings.

    Wall segments meeting at one junction are ``junction - wall`` apart in l1
    (half that in sup), and consecutive junctions are ``period - junction``
    apart.  Both gaps must exceed twice the ring reach.
    """
    gap = int(np.ceil(2 * ring_reach(r, m) + 2 * r)) + 1
    wall = int(np.ceil(2 * (m + 1) * r))
    junction = wall + (gap if norm == "l1" else 2 * gap)
    junction += (junction - wall) % 2  # keep the wall centred in the junction
    period = junction + gap
    return GridLayout(wall=wall, junction=junction, period=period, phase=gap // 2 + (junction - wall) // 2)


def grid_bricks(space: FiniteMetricSpace, r: float, m: int, norm: str | None = None) -> SubsetArray:
    """Three-part cover ``(cells, walls, junctions)`` of a two-dimensional grid."""
    _check_radius(r)
    norm = norm or space.norm or (space.descriptor.get("norm") if space.descriptor else None) or "l1"
    coords = _coordinates(space)
    if coords.shape[1] != 2:
        raise ValueError("grid_bricks needs a two-dimensional grid")
    lay = grid_layout(r, m, norm)
    margin = (lay.junction - lay.wall) // 2

    def band(c: np.ndarray, width: int, start: int) -> np.ndarray:
        return ((c - start) % lay.period) < width

    in_wall = band(coords[:, 0], lay.wall, lay.phase) | band(coords[:, 1], lay.wall, lay.phase)
    j0 = lay.phase - margin
    in_junction = band(coords[:, 0], lay.junction, j0) & band(coords[:, 1], lay.junction, j0)
    x2 = in_junction
    x1 = in_wall & ~in_junction
    x0 = ~(x1 | x2)
    return SubsetArray(space, IndexSet.range(3), np.stack([x0, x1, x2]))


# ---------------------------------------------------------------------------
# covers of arbitrary finite spaces
# ---------------------------------------------------------------------------


def greedy_net(space: FiniteMetricSpace, radius: float, within: Subset | None = None) -> np.ndarray:
    """Indices of a ``radius``-net of ``within``, chosen greedily in index order."""
    members = np.arange(len(space)) if within is None else within.indices
    covered = np.zeros(len(space), dtype=np.bool_)
    centres = []
    for x in members:
        if covered[x]:
            continue
        centres.append(int(x))
        covered |= space.dist[x] <= radius
    return np.array(centres, dtype=np.int64)


def net_cover(space: FiniteMetricSpace, scale: float, radius: float | None = None,
              within: Subset | None = None) -> SubsetArray:
    """Colour-class cover of ``within`` (default: all points).

    Cells are nearest-centre regions of a greedy ``radius``-net.  Two cells
    conflict when their ``scale``-balls meet; a greedy colouring makes each
    colour class a union of pairwise scale-disjoint cells, so its
    scale-components sit inside single cells of diameter at most ``2 radius``.
    """
    scale = _check_radius(scale)
    radius = 2 * scale if radius is None else float(radius)
    members = np.arange(len(space)) if within is None else within.indices
    if members.size == 0:
        return SubsetArray(space, IndexSet.range(0), np.zeros((0, len(space)), dtype=np.bool_))
    centres = greedy_net(space, radius, within)
    # nearest centre, ties to the earlier centre
    owner = np.argmin(space.dist[np.ix_(members, centres)], axis=1)
    cells = np.zeros((centres.size, len(space)), dtype=np.bool_)
    cells[owner, members] = True
    near = space.dist <= scale
    reach = np.stack([near[:, c].any(axis=1) for c in cells]) if cells.size else cells
    conflict = (reach.astype(np.int32) @ reach.T.astype(np.int32)) > 0
    colour = np.full(centres.size, -1, dtype=np.int64)
    for c in range(centres.size):
        taken = set(colour[conflict[c] & (colour >= 0)].tolist())
        k = 0
        while k in taken:
            k += 1
        colour[c] = k
    ncol = int(colour.max()) + 1
    parts = np.zeros((ncol, len(space)), dtype=np.bool_)
    for c in range(centres.size):
        parts[colour[c]] |= cells[c]
    return SubsetArray(space, IndexSet.range(ncol), parts)
