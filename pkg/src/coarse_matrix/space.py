"""Finite infinity-pseudo-metric spaces, subsets, balls and scale-r components.

A space is a dense distance table over an ordered list of point labels.
Distances are non-negative floats; ``math.inf`` separates points that live
in different summands of a disjoint union.  Subsets are read-only boolean
masks bound to one space.

Balls are closed: ``ball(A, r) = {x : d(x, A) <= r}``.  Two points are
chain-adjacent at scale ``r`` when some ambient witness lies within ``r`` of
both, and chain length counts steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csgraph

from . import _kernels

INF = math.inf


class MetricValidationError(ValueError):
    """A distance table breaks one of the infinity-pseudo-metric axioms."""

    def __init__(self, message: str, triple: tuple | None = None):
        super().__init__(message)
        self.triple = triple


class SpaceMismatchError(ValueError):
    pass


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class FiniteMetricSpace:
    """A finite set of labelled points with an infinity-pseudo-metric.

    ``descriptor`` remembers how the space was generated so that it can be
    serialised compactly; ``factors`` and ``norm`` are set on product spaces.
    """

    __slots__ = ("name", "labels", "dist", "descriptor", "factors", "norm", "_index", "_hash")

    def __init__(
        self,
        labels: Sequence[Any],
        dist: Any,
        *,
        name: str = "X",
        descriptor: dict | None = None,
        factors: tuple["FiniteMetricSpace", ...] | None = None,
        norm: str | None = None,
        validate: bool = True,
    ):
        labels = tuple(labels)
        table = np.ascontiguousarray(np.array(dist, dtype=np.float64))
        if table.ndim != 2 or table.shape != (len(labels), len(labels)):
            raise MetricValidationError(
                f"distance table has shape {table.shape}, expected {(len(labels), len(labels))}"
            )
        if len(set(labels)) != len(labels):
            raise MetricValidationError("point labels must be distinct")
        if validate:
            _validate_table(table, labels)
        self.name = name
        self.labels = labels
        self.dist = _freeze(table)
        self.descriptor = descriptor if descriptor is not None else {"kind": "table"}
        self.factors = factors
        self.norm = norm
        self._index = None
        self._hash = None

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"FiniteMetricSpace({self.name!r}, {len(self)} points, {self.descriptor.get('kind')})"

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((len(self.labels), self.labels[:8], self.dist.tobytes()[:256]))
        return self._hash

    def index_of(self, label: Any) -> int:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self.labels)}
        return self._index[label]

    def subset(self, members: Iterable[int]) -> "Subset":
        return Subset.from_indices(self, members)

    def subset_of_labels(self, labels: Iterable[Any]) -> "Subset":
        return Subset.from_indices(self, [self.index_of(lab) for lab in labels])

    def full(self) -> "Subset":
        return Subset(self, np.ones(len(self), dtype=np.bool_))

    def empty(self) -> "Subset":
        return Subset(self, np.zeros(len(self), dtype=np.bool_))

    def where(self, predicate: Callable[[Any], bool]) -> "Subset":
        """Subset of points whose label satisfies ``predicate``."""
        return Subset(self, np.fromiter((bool(predicate(lab)) for lab in self.labels), np.bool_, len(self)))


def _validate_table(table: np.ndarray, labels: Sequence[Any]) -> None:
    if np.isnan(table).any():
        raise MetricValidationError("distance table contains NaN")
    if (table < 0).any():
        i, j = np.argwhere(table < 0)[0]
        raise MetricValidationError(f"negative distance d({labels[i]!r}, {labels[j]!r})", (int(i), int(j)))
    diag = np.diagonal(table)
    if (diag != 0).any():
        i = int(np.flatnonzero(diag != 0)[0])
        raise MetricValidationError(f"d({labels[i]!r}, {labels[i]!r}) = {diag[i]} is not 0", (i, i))
    asym = table != table.T
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise MetricValidationError(
            f"asymmetric: d({labels[i]!r}, {labels[j]!r}) != d({labels[j]!r}, {labels[i]!r})",
            (int(i), int(j)),
        )
    x, y, z = _kernels.triangle_violation(table)
    if x >= 0:
        raise MetricValidationError(
            f"triangle inequality fails: d({labels[x]!r}, {labels[y]!r}) = {table[x, y]} > "
            f"d({labels[x]!r}, {labels[z]!r}) + d({labels[z]!r}, {labels[y]!r}) = {table[x, z] + table[z, y]}",
            (x, y, z),
        )


def validate(space: FiniteMetricSpace) -> None:
    """Re-run the axiom checks; raises :class:`MetricValidationError`."""
    _validate_table(space.dist, space.labels)


def same_space(a: FiniteMetricSpace, b: FiniteMetricSpace) -> bool:
    return a is b or a == b


def require_same_space(a: FiniteMetricSpace, b: FiniteMetricSpace) -> None:
    if not same_space(a, b):
        raise SpaceMismatchError(f"subsets live in different spaces: {a!r} vs {b!r}")


class Subset:
    """An immutable subset of a finite space, stored as a boolean mask."""

    __slots__ = ("space", "mask")

    def __init__(self, space: FiniteMetricSpace, mask: np.ndarray):
        mask = np.asarray(mask, dtype=np.bool_)
        if mask.shape != (len(space),):
            raise ValueError(f"mask of shape {mask.shape} does not fit a space of {len(space)} points")
        if mask.flags.writeable:
            mask = _freeze(mask.copy())
        self.space = space
        self.mask = mask

    @classmethod
    def from_indices(cls, space: FiniteMetricSpace, members: Iterable[int]) -> "Subset":
        mask = np.zeros(len(space), dtype=np.bool_)
        idx = np.fromiter((int(i) for i in members), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= len(space)):
            raise IndexError(f"point index out of range for a space of {len(space)} points")
        mask[idx] = True
        return cls(space, mask)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __iter__(self):
        return iter(int(i) for i in self.indices)

    def __contains__(self, point: int) -> bool:
        return bool(self.mask[point])

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __repr__(self) -> str:
        idx = self.indices
        shown = ", ".join(str(i) for i in idx[:12])
        more = ", ..." if idx.size > 12 else ""
        return f"Subset({{{shown}{more}}} of {self.space.name})"

    def _other(self, other: "Subset") -> np.ndarray:
        require_same_space(self.space, other.space)
        return other.mask

    def __or__(self, other: "Subset") -> "Subset":
        return Subset(self.space, self.mask | self._other(other))

    def __and__(self, other: "Subset") -> "Subset":
        return Subset(self.space, self.mask & self._other(other))

    def __sub__(self, other: "Subset") -> "Subset":
        return Subset(self.space, self.mask & ~self._other(other))

    def complement(self) -> "Subset":
        return Subset(self.space, ~self.mask)

    def __le__(self, other: "Subset") -> bool:
        return not (self.mask & ~self._other(other)).any()

    def __ge__(self, other: "Subset") -> bool:
        return other <= self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subset):
            return NotImplemented
        return same_space(self.space, other.space) and np.array_equal(self.mask, other.mask)

    def __hash__(self) -> int:
        return hash((len(self.space), np.packbits(self.mask).tobytes()))

    def is_empty(self) -> bool:
        return not self.mask.any()

    def labels(self) -> list:
        return [self.space.labels[i] for i in self.indices]


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def interval(n: int, *, step: float = 1, name: str | None = None) -> FiniteMetricSpace:
    """Points ``0, step, ..., (n-1)*step`` of the real line (labels are indices)."""
    if n < 0:
        raise ValueError("interval size must be non-negative")
    coords = np.arange(n, dtype=np.float64) * step
    dist = np.abs(coords[:, None] - coords[None, :])
    desc: dict = {"kind": "interval", "n": int(n)}
    if step != 1:
        desc["step"] = step
    return FiniteMetricSpace(range(n), dist, name=name or f"I{n}", descriptor=desc, validate=False)


def grid(dims: Sequence[int], norm: str = "l1", *, name: str | None = None) -> FiniteMetricSpace:
    """Integer box ``prod(range(d) for d in dims)`` under the l1 or sup norm."""
    _check_norm(norm)
    dims = tuple(int(d) for d in dims)
    axes = np.indices(dims).reshape(len(dims), -1).T.astype(np.float64)
    n = axes.shape[0]
    dist = np.zeros((n, n))
    for k in range(len(dims)):
        diff = np.abs(axes[:, None, k] - axes[None, :, k])
        dist = dist + diff if norm == "l1" else np.maximum(dist, diff)
    labels = [tuple(int(c) for c in row) for row in axes]
    desc = {"kind": "grid", "dims": list(dims), "norm": norm}
    tag = "x".join(str(d) for d in dims)
    return FiniteMetricSpace(labels, dist, name=name or f"Z{tag}_{norm}", descriptor=desc, validate=False)


def from_table(dist: Any, labels: Sequence[Any] | None = None, *, name: str = "X") -> FiniteMetricSpace:
    table = np.array(dist, dtype=np.float64)
    labels = list(range(table.shape[0])) if labels is None else list(labels)
    return FiniteMetricSpace(labels, table, name=name, descriptor={"kind": "table"}, validate=True)


def from_graph(
    labels: Sequence[Any] | int,
    edges: Iterable[tuple[int, int, float]],
    *,
    name: str = "G",
) -> FiniteMetricSpace:
    """Shortest-path metric of an undirected weighted graph; unreachable pairs are at infinity."""
    labels = list(range(labels)) if isinstance(labels, int) else list(labels)
    n = len(labels)
    edges = [(int(u), int(v), float(w)) for u, v, w in edges]
    if any(w < 0 for _, _, w in edges):
        raise MetricValidationError("edge weights must be non-negative")
    # explicit zero weights would vanish in a sparse matrix, so keep a dense copy
    dense = np.full((n, n), INF)
    np.fill_diagonal(dense, 0.0)
    for u, v, w in edges:
        dense[u, v] = min(dense[u, v], w)
        dense[v, u] = min(dense[v, u], w)
    dist = csgraph.floyd_warshall(dense, directed=False) if n else dense
    desc = {"kind": "graph", "edges": [[u, v, w] for u, v, w in edges]}
    return FiniteMetricSpace(labels, dist, name=name, descriptor=desc, validate=False)


def disjoint_union(spaces: Sequence[FiniteMetricSpace], *, name: str | None = None) -> FiniteMetricSpace:
    sizes = [len(s) for s in spaces]
    n = sum(sizes)
    dist = np.full((n, n), INF)
    labels = []
    offset = 0
    for k, sp in enumerate(spaces):
        dist[offset : offset + len(sp), offset : offset + len(sp)] = sp.dist
        labels.extend((k, lab) for lab in sp.labels)
        offset += len(sp)
    desc = {"kind": "disjoint_union", "parts": list(spaces)}
    return FiniteMetricSpace(
        labels,
        dist,
        name=name or "+".join(s.name for s in spaces),
        descriptor=desc,
        factors=None,
        validate=False,
    )


def _check_norm(norm: str) -> None:
    if norm not in ("l1", "sup"):
        raise ValueError(f"norm must be 'l1' or 'sup', got {norm!r}")


def product(x: FiniteMetricSpace, y: FiniteMetricSpace, norm: str = "l1", *, name: str | None = None) -> FiniteMetricSpace:
    """Cartesian product; the point ``(i, j)`` sits at index ``i * len(y) + j``."""
    _check_norm(norm)
    nx, ny = len(x), len(y)
    dx = x.dist[:, None, :, None]
    dy = y.dist[None, :, None, :]
    dist = (dx + dy) if norm == "l1" else np.maximum(dx, dy)
    dist = dist.reshape(nx * ny, nx * ny)
    labels = [(a, b) for a in x.labels for b in y.labels]
    desc = {"kind": "product", "norm": norm, "factors": [x, y]}
    return FiniteMetricSpace(
        labels,
        dist,
        name=name or f"({x.name}x{y.name})_{norm}",
        descriptor=desc,
        factors=(x, y),
        norm=norm,
        validate=False,
    )


def point_space(name: str = "pt") -> FiniteMetricSpace:
    return FiniteMetricSpace([0], [[0.0]], name=name, descriptor={"kind": "table"}, validate=False)


def rescale(space: FiniteMetricSpace, beta: Callable[[float], float], *, name: str | None = None) -> FiniteMetricSpace:
    """Compose the metric with a non-decreasing subadditive ``beta`` with ``beta(0) = 0``.

    Subadditivity and monotonicity are checked on every sum of two observed
    finite distances, which is all the triangle inequality needs.
    """
    finite = np.unique(space.dist[np.isfinite(space.dist)])
    values = {float(a): float(beta(float(a))) for a in finite}
    if values.get(0.0, 0.0) != 0.0:
        raise MetricValidationError("beta(0) must be 0")
    ordered = sorted(values)
    for a, b in zip(ordered, ordered[1:]):
        if values[b] < values[a]:
            raise MetricValidationError(f"beta decreases between {a} and {b}")
    for a in ordered:
        for b in ordered:
            if beta(a + b) > values[a] + values[b]:
                raise MetricValidationError(f"beta is not subadditive at ({a}, {b})")
    table = np.vectorize(lambda d: d if math.isinf(d) else values[float(d)], otypes=[np.float64])(space.dist)
    return FiniteMetricSpace(space.labels, table, name=name or f"beta({space.name})", validate=False)


# ---------------------------------------------------------------------------
# balls, chains and components
# ---------------------------------------------------------------------------


def _check_radius(r: float) -> float:
    r = float(r)
    if not r > 0:
        raise ValueError(f"scale must be positive, got {r}")
    return r


def ball(a: Subset, r: float) -> Subset:
    """Closed ball ``{x : d(x, A) <= r}``."""
    r = _check_radius(r)
    if a.is_empty():
        return a.space.empty()
    return Subset(a.space, _kernels.ball_mask(a.space.dist, a.indices, r))


def distance_to(a: Subset) -> np.ndarray:
    """``d(x, A)`` for every point ``x`` (infinity when ``A`` is empty)."""
    if a.is_empty():
        return np.full(len(a.space), INF)
    return a.space.dist[:, a.indices].min(axis=1)


def chain_levels(a: Subset, r: float, within: Subset | None = None) -> np.ndarray:
    """Scale-``r`` chain distance from ``a`` to every point, ``-1`` when unreachable.

    Chain points are confined to ``within`` (the whole space by default);
    ball-overlap witnesses always range over the ambient space.
    """
    r = _check_radius(r)
    domain = np.ones(len(a.space), dtype=np.bool_) if within is None else within.mask
    return _kernels.bfs_levels(a.space.dist, a.mask, domain, r)


def chain_metric(space: FiniteMetricSpace, r: float, x: int, y: int) -> float:
    """Length (in steps) of the shortest scale-``r`` chain from ``x`` to ``y``."""
    if x == y:
        return 0
    levels = chain_levels(Subset.from_indices(space, [x]), r)
    return INF if levels[y] < 0 else int(levels[y])


def diameter(a: Subset) -> float:
    """Diameter of a set; the empty set has diameter 0."""
    idx = a.indices
    if idx.size < 2:
        return 0.0
    return float(a.space.dist[np.ix_(idx, idx)].max())


@dataclass(frozen=True)
class Dim0Certificate:
    """Every scale-``scale`` component of the certified set has diameter at most ``bound``."""

    scale: float
    bound: float

    def at(self, scale: float) -> "Dim0Certificate":
        """The same bound holds at every smaller scale."""
        if scale > self.scale:
            raise ValueError(f"a certificate at scale {self.scale} says nothing about scale {scale}")
        return Dim0Certificate(scale, self.bound)

    def to_json(self) -> dict:
        return {"scale": _num(self.scale), "bound": _num(self.bound)}


def _num(x: float):
    if math.isinf(x):
        return "inf"
    return int(x) if float(x).is_integer() else float(x)


@dataclass(frozen=True)
class ComponentsPartition:
    base: Subset
    classes: tuple[Subset, ...]
    scale: float
    diameters: tuple[float, ...]

    @property
    def norm(self) -> float:
        return max(self.diameters, default=0.0)

    def __len__(self) -> int:
        return len(self.classes)

    def labels(self) -> np.ndarray:
        """Class number of every base point, ``-1`` outside the base."""
        out = np.full(len(self.base.space), -1, dtype=np.int64)
        for k, cls in enumerate(self.classes):
            out[cls.mask] = k
        return out


def _component_labels(a: Subset, r: float) -> tuple[np.ndarray, np.ndarray, int]:
    idx = a.indices
    labels, k = _kernels.witness_labels(a.space.dist, idx, r)
    return idx, labels, k


def components(a: Subset, r: float) -> ComponentsPartition:
    """Partition ``a`` into scale-``r`` chain classes, ordered by smallest member."""
    r = _check_radius(r)
    idx, labels, k = _component_labels(a, r)
    diams = _kernels.class_diameters(a.space.dist, idx, labels, k)
    classes = []
    for c in range(k):
        mask = np.zeros(len(a.space), dtype=np.bool_)
        mask[idx[labels == c]] = True
        classes.append(Subset(a.space, mask))
    return ComponentsPartition(a, tuple(classes), r, tuple(float(d) for d in diams))


def components_norm(a: Subset, r: float) -> float:
    """Largest diameter among the scale-``r`` components of ``a`` (0 for the empty set)."""
    r = _check_radius(r)
    if a.is_empty():
        return 0.0
    idx, labels, k = _component_labels(a, r)
    diams = _kernels.class_diameters(a.space.dist, idx, labels, k)
    return float(diams.max(initial=0.0))


def dim0_certificate(a: Subset, r: float) -> Dim0Certificate:
    return Dim0Certificate(float(r), components_norm(a, r))


def projection(sub: Subset, axis: int) -> Subset:
    """Project a subset of a two-factor product space onto one factor."""
    space = sub.space
    if space.factors is None:
        raise SpaceMismatchError(f"{space!r} is not a product space")
    x, y = space.factors
    grid_mask = sub.mask.reshape(len(x), len(y))
    if axis == 0:
        return Subset(x, grid_mask.any(axis=1))
    return Subset(y, grid_mask.any(axis=0))


def cross(a: Subset, b: Subset, space: FiniteMetricSpace) -> Subset:
    """``a x b`` inside the product ``space`` whose factors are ``a.space`` and ``b.space``."""
    require_product_of(space, a.space, b.space)
    return Subset(space, np.outer(a.mask, b.mask).ravel())


def require_product_of(space: FiniteMetricSpace, x: FiniteMetricSpace, y: FiniteMetricSpace) -> None:
    if space.factors is None:
        raise SpaceMismatchError(f"{space!r} is not a product space")
    fx, fy = space.factors
    if not (same_space(fx, x) and same_space(fy, y)):
        raise SpaceMismatchError(f"{space!r} is not the product of {x!r} and {y!r}")
