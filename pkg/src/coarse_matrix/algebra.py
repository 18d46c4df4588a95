"""Arrays and matrices of subsets.

An array over index set ``S`` sends each label to a subset of one space; a
matrix is an array over ``S x T``.  Entries are kept as stacked boolean masks
(``(len(S), N)`` for arrays, ``(len(S), len(T), N)`` for matrices) so that the
cap and cross products are plain numpy reductions.

Index sets are ordered and nominal: two arrays combine only when their index
sets are equal label for label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .space import FiniteMetricSpace, Subset, _check_radius, require_product_of, require_same_space


class IndexMismatchError(ValueError):
    def __init__(self, what: str, left: "IndexSet", right: "IndexSet"):
        super().__init__(f"{what}: index sets differ, {list(left.labels)} vs {list(right.labels)}")
        self.left = left
        self.right = right


@dataclass(frozen=True)
class IndexSet:
    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"index labels must be distinct: {list(labels)}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, labels: Iterable[Any]) -> "IndexSet":
        return cls(tuple(labels))

    @classmethod
    def range(cls, n: int) -> "IndexSet":
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def position(self, label: Any) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"{label!r} is not in index {list(self.labels)}") from None

    def times(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(tuple((s, t) for s in self.labels for t in other.labels))


# the one-element index used for rows and columns of vectors
UNIT = IndexSet(("*",))


def _stack(space: FiniteMetricSpace, n: int) -> np.ndarray:
    return np.zeros((n, len(space)), dtype=np.bool_)


def _ro(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.bool_)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


class SubsetArray:
    """A function from an :class:`IndexSet` to subsets of one space."""

    __slots__ = ("space", "index", "masks")

    def __init__(self, space: FiniteMetricSpace, index: IndexSet, masks: np.ndarray):
        masks = np.asarray(masks, dtype=np.bool_)
        if masks.shape != (len(index), len(space)):
            raise ValueError(f"masks of shape {masks.shape} do not fit index {len(index)} x {len(space)} points")
        self.space = space
        self.index = index
        self.masks = _ro(masks)

    @classmethod
    def from_subsets(cls, entries: Sequence[Subset] | Mapping[Any, Subset], index: IndexSet | None = None,
                     space: FiniteMetricSpace | None = None) -> "SubsetArray":
        if isinstance(entries, Mapping):
            index = index or IndexSet.of(entries.keys())
            subsets = [entries[s] for s in index]
        else:
            subsets = list(entries)
            index = index or IndexSet.range(len(subsets))
        if len(subsets) != len(index):
            raise ValueError(f"{len(subsets)} entries for an index of size {len(index)}")
        if space is None:
            if not subsets:
                raise ValueError("cannot infer the space of an empty array")
            space = subsets[0].space
        masks = _stack(space, len(index))
        for k, sub in enumerate(subsets):
            require_same_space(space, sub.space)
            masks[k] = sub.mask
        return cls(space, index, masks)

    @classmethod
    def from_indices(cls, space: FiniteMetricSpace, members: Sequence[Iterable[int]],
                     index: IndexSet | None = None) -> "SubsetArray":
        return cls.from_subsets([space.subset(m) for m in members], index, space)

    def __len__(self) -> int:
        return len(self.index)

    def __getitem__(self, label: Any) -> Subset:
        return Subset(self.space, self.masks[self.index.position(label)])

    def at(self, k: int) -> Subset:
        return Subset(self.space, self.masks[k])

    def entries(self) -> list[Subset]:
        return [Subset(self.space, m) for m in self.masks]

    def items(self):
        return zip(self.index.labels, self.entries())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubsetArray):
            return NotImplemented
        return (self.index == other.index and self.space == other.space
                and np.array_equal(self.masks, other.masks))

    def __hash__(self) -> int:
        return hash((self.index, np.packbits(self.masks).tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{s!r}: {list(map(int, np.flatnonzero(m)))}" for s, m in zip(self.index, self.masks))
        return f"SubsetArray({{{body}}})"

    def __or__(self, other: "SubsetArray") -> "SubsetArray":
        return array_union(self, other)

    def __le__(self, other: "SubsetArray") -> bool:
        return leq(self, other)

    def reindex(self, index: IndexSet) -> "SubsetArray":
        if len(index) != len(self.index):
            raise ValueError("reindex needs an index of the same size")
        return SubsetArray(self.space, index, self.masks)

    def drop_empty(self) -> "SubsetArray":
        keep = self.masks.any(axis=1)
        labels = tuple(s for s, k in zip(self.index, keep) if k)
        return SubsetArray(self.space, IndexSet(labels), self.masks[keep])


class SubsetMatrix:
    """An array over ``rows x cols``; ``masks[s, t]`` is the entry at ``(s, t)``."""

    __slots__ = ("space", "rows", "cols", "masks")

    def __init__(self, space: FiniteMetricSpace, rows: IndexSet, cols: IndexSet, masks: np.ndarray):
        masks = np.asarray(masks, dtype=np.bool_)
        if masks.shape != (len(rows), len(cols), len(space)):
            raise ValueError(
                f"masks of shape {masks.shape} do not fit {len(rows)} x {len(cols)} entries over {len(space)} points"
            )
        self.space = space
        self.rows = rows
        self.cols = cols
        self.masks = _ro(masks)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Subset]], row_index: IndexSet | None = None,
                  col_index: IndexSet | None = None, space: FiniteMetricSpace | None = None) -> "SubsetMatrix":
        rows = [list(r) for r in rows]
        row_index = row_index or IndexSet.range(len(rows))
        ncols = len(rows[0]) if rows else (len(col_index) if col_index else 0)
        col_index = col_index or IndexSet.range(ncols)
        if space is None:
            space = rows[0][0].space
        masks = np.zeros((len(row_index), len(col_index), len(space)), dtype=np.bool_)
        for s, row in enumerate(rows):
            if len(row) != len(col_index):
                raise ValueError(f"row {s} has {len(row)} entries, expected {len(col_index)}")
            for t, sub in enumerate(row):
                require_same_space(space, sub.space)
                masks[s, t] = sub.mask
        return cls(space, row_index, col_index, masks)

    @classmethod
    def from_indices(cls, space: FiniteMetricSpace, rows: Sequence[Sequence[Iterable[int]]],
                     row_index: IndexSet | None = None, col_index: IndexSet | None = None) -> "SubsetMatrix":
        return cls.from_rows([[space.subset(e) for e in row] for row in rows], row_index, col_index, space)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def __getitem__(self, key: tuple) -> Subset:
        s, t = key
        return Subset(self.space, self.masks[self.rows.position(s), self.cols.position(t)])

    def row(self, label: Any) -> SubsetArray:
        return SubsetArray(self.space, self.cols, self.masks[self.rows.position(label)])

    def column(self, label: Any) -> SubsetArray:
        return SubsetArray(self.space, self.rows, self.masks[:, self.cols.position(label)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubsetMatrix):
            return NotImplemented
        return (self.rows == other.rows and self.cols == other.cols and self.space == other.space
                and np.array_equal(self.masks, other.masks))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, np.packbits(self.masks).tobytes()))

    def __repr__(self) -> str:
        lines = []
        for s, row in zip(self.rows, self.masks):
            cells = " | ".join(str(list(map(int, np.flatnonzero(m)))) for m in row)
            lines.append(f"  {s!r}: {cells}")
        return "SubsetMatrix(\n" + "\n".join(lines) + "\n)"

    def __le__(self, other: "SubsetMatrix") -> bool:
        return leq(self, other)

    def select_cols(self, labels: Sequence[Any]) -> "SubsetMatrix":
        pos = [self.cols.position(t) for t in labels]
        return SubsetMatrix(self.space, self.rows, IndexSet.of(labels), self.masks[:, pos])

    def is_diagonal(self) -> bool:
        """All off-diagonal entries empty (rows and cols must be the same index)."""
        if self.rows != self.cols:
            raise IndexMismatchError("diagonal test", self.rows, self.cols)
        occupied = self.masks.any(axis=2)
        np.fill_diagonal(occupied, False)
        return not occupied.any()


# ---------------------------------------------------------------------------
# vector operations
# ---------------------------------------------------------------------------


def _same_index(what: str, a: SubsetArray, b: SubsetArray) -> None:
    require_same_space(a.space, b.space)
    if a.index != b.index:
        raise IndexMismatchError(what, a.index, b.index)


def cap_dot(a: SubsetArray, b: SubsetArray) -> Subset:
    """``union over s of a(s) & b(s)``."""
    _same_index("cap_dot", a, b)
    return Subset(a.space, (a.masks & b.masks).any(axis=0))


def set_norm(a: SubsetArray) -> Subset:
    """Union of all entries."""
    return Subset(a.space, a.masks.any(axis=0))


def array_union(a: SubsetArray, b: SubsetArray) -> SubsetArray:
    _same_index("array_union", a, b)
    return SubsetArray(a.space, a.index, a.masks | b.masks)


def leq(a: SubsetArray | SubsetMatrix, b: SubsetArray | SubsetMatrix) -> bool:
    """Entrywise inclusion."""
    require_same_space(a.space, b.space)
    if isinstance(a, SubsetMatrix) or isinstance(b, SubsetMatrix):
        if not (isinstance(a, SubsetMatrix) and isinstance(b, SubsetMatrix)):
            raise TypeError("leq compares two arrays or two matrices")
        if a.rows != b.rows:
            raise IndexMismatchError("leq rows", a.rows, b.rows)
        if a.cols != b.cols:
            raise IndexMismatchError("leq cols", a.cols, b.cols)
    elif a.index != b.index:
        raise IndexMismatchError("leq", a.index, b.index)
    return not (a.masks & ~b.masks).any()


def const_array(y: Subset, index: IndexSet) -> SubsetArray:
    return SubsetArray(y.space, index, np.broadcast_to(y.mask, (len(index), len(y.space))))


def scalar_cap(b: Subset, a: SubsetArray) -> SubsetArray:
    """``s -> b & a(s)``."""
    require_same_space(b.space, a.space)
    return SubsetArray(a.space, a.index, a.masks & b.mask)


def is_cover(a: SubsetArray) -> bool:
    return bool(a.masks.any(axis=0).all())


def ball_array(a: SubsetArray, r: float) -> SubsetArray:
    r = _check_radius(r)
    out = np.zeros_like(a.masks)
    for k, m in enumerate(a.masks):
        if m.any():
            out[k] = _kernels.ball_mask(a.space.dist, np.flatnonzero(m), r)
    return SubsetArray(a.space, a.index, out)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


def transpose(m: SubsetMatrix) -> SubsetMatrix:
    return SubsetMatrix(m.space, m.cols, m.rows, m.masks.transpose(1, 0, 2))


def as_row(a: SubsetArray) -> SubsetMatrix:
    return SubsetMatrix(a.space, UNIT, a.index, a.masks[None, :, :])


def as_column(a: SubsetArray) -> SubsetMatrix:
    return SubsetMatrix(a.space, a.index, UNIT, a.masks[:, None, :])


def to_array(m: SubsetMatrix) -> SubsetArray:
    """Read a single-row or single-column matrix as an array."""
    if len(m.cols) == 1:
        return SubsetArray(m.space, m.rows, m.masks[:, 0])
    if len(m.rows) == 1:
        return SubsetArray(m.space, m.cols, m.masks[0])
    raise ValueError(f"a {m.shape[0]} x {m.shape[1]} matrix is not a vector")


def matmul_cap(m: SubsetMatrix, n: SubsetMatrix) -> SubsetMatrix:
    """Entry ``(s, r)`` is ``cap_dot(row s of m, column r of n)``."""
    require_same_space(m.space, n.space)
    if m.cols != n.rows:
        raise IndexMismatchError("matmul_cap inner index", m.cols, n.rows)
    out = np.zeros((len(m.rows), len(n.cols), len(m.space)), dtype=np.bool_)
    for t in range(len(m.cols)):
        out |= m.masks[:, t, None, :] & n.masks[None, t, :, :]
    return SubsetMatrix(m.space, m.rows, n.cols, out)


def identity_matrix(space: FiniteMetricSpace, index: IndexSet) -> SubsetMatrix:
    masks = np.zeros((len(index), len(index), len(space)), dtype=np.bool_)
    for k in range(len(index)):
        masks[k, k] = True
    return SubsetMatrix(space, index, index, masks)


def columns_cover(m: SubsetMatrix) -> bool:
    """Every column covers the space, read off the diagonal of ``m^T . m``."""
    gram = matmul_cap(transpose(m), m)
    return all(gram.masks[k, k].all() for k in range(len(m.cols)))


def ball_matrix(m: SubsetMatrix, r: float) -> SubsetMatrix:
    flat = SubsetArray(m.space, IndexSet.range(len(m.rows) * len(m.cols)),
                       m.masks.reshape(-1, len(m.space)))
    balls = ball_array(flat, r).masks.reshape(m.masks.shape)
    return SubsetMatrix(m.space, m.rows, m.cols, balls)


# ---------------------------------------------------------------------------
# cross products
# ---------------------------------------------------------------------------


def cross_dot(a: SubsetArray, b: SubsetArray, product_space: FiniteMetricSpace) -> Subset:
    """``union over s of a(s) x b(s)`` inside an explicit product space."""
    require_product_of(product_space, a.space, b.space)
    if a.index != b.index:
        raise IndexMismatchError("cross_dot", a.index, b.index)
    grid = (a.masks[:, :, None] & b.masks[:, None, :]).any(axis=0)
    return Subset(product_space, grid.ravel())


def matmul_cross(m: SubsetMatrix, n: SubsetMatrix, product_space: FiniteMetricSpace) -> SubsetMatrix:
    """Entry ``(s, r)`` is ``union over t of m(s, t) x n(t, r)``."""
    require_product_of(product_space, m.space, n.space)
    if m.cols != n.rows:
        raise IndexMismatchError("matmul_cross inner index", m.cols, n.rows)
    counts = np.einsum("stx,try->srxy", m.masks.astype(np.int32), n.masks.astype(np.int32))
    out = (counts > 0).reshape(len(m.rows), len(n.cols), len(product_space))
    return SubsetMatrix(product_space, m.rows, n.cols, out)


def cartesian_product_arrays(a: SubsetArray, b: SubsetArray, product_space: FiniteMetricSpace) -> SubsetArray:
    """The array ``(s, t) -> a(s) x b(t)`` over ``S x T``."""
    require_product_of(product_space, a.space, b.space)
    grid = a.masks[:, None, :, None] & b.masks[None, :, None, :]
    return SubsetArray(product_space, a.index.times(b.index),
                       grid.reshape(len(a) * len(b), len(product_space)))
