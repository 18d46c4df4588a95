"""Scale-r disjointness of sets and r-orthogonality of arrays and matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    IndexMismatchError,
    SubsetArray,
    SubsetMatrix,
    as_column,
    as_row,
    ball_array,
    ball_matrix,
    cap_dot,
    matmul_cap,
    transpose,
)
from .space import Subset, ball, require_same_space


def sets_scale_disjoint(c: Subset, d: Subset, r: float) -> bool:
    """True when the closed ``r``-balls of ``c`` and ``d`` do not meet."""
    require_same_space(c.space, d.space)
    return (ball(c, r) & ball(d, r)).is_empty()


def array_scale_disjoint(a: SubsetArray, r: float) -> bool:
    """Off-diagonal entries of ``B(a, r)^T . B(a, r)`` are all empty."""
    balls = ball_array(a, r)
    gram = matmul_cap(as_column(balls), as_row(balls))
    return gram.is_diagonal()


def arrays_orthogonal(a: SubsetArray, b: SubsetArray, r: float) -> bool:
    if a.index != b.index:
        raise IndexMismatchError("arrays_orthogonal", a.index, b.index)
    return cap_dot(ball_array(a, r), ball_array(b, r)).is_empty()


@dataclass(frozen=True)
class OrthogonalityReport:
    """Three independently computed forms of r-orthogonality of a matrix."""

    columns_disjoint: bool
    rows_orthogonal: bool
    ball_product_diagonal: bool

    @property
    def cond1(self) -> bool:
        return self.columns_disjoint

    @property
    def cond2(self) -> bool:
        return self.rows_orthogonal

    @property
    def cond3(self) -> bool:
        return self.ball_product_diagonal

    @property
    def consistent(self) -> bool:
        return self.cond1 == self.cond2 == self.cond3

    @property
    def holds(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3

    def to_json(self) -> dict:
        return {"columns_disjoint": self.cond1, "rows_orthogonal": self.cond2, "ball_product_diagonal": self.cond3}


def _columns_disjoint(m: SubsetMatrix, r: float) -> bool:
    return all(array_scale_disjoint(m.column(t), r) for t in m.cols)


def _rows_orthogonal(m: SubsetMatrix, r: float) -> bool:
    labels = m.rows.labels
    for i, s in enumerate(labels):
        for s2 in labels[i + 1:]:
            if not arrays_orthogonal(m.row(s), m.row(s2), r):
                return False
    return True


def _ball_product_diagonal(m: SubsetMatrix, r: float) -> bool:
    return matmul_cap(ball_matrix(m, r), ball_matrix(transpose(m), r)).is_diagonal()


def matrix_orthogonal(m: SubsetMatrix, r: float) -> OrthogonalityReport:
    return OrthogonalityReport(
        columns_disjoint=_columns_disjoint(m, r),
        rows_orthogonal=_rows_orthogonal(m, r),
        ball_product_diagonal=_ball_product_diagonal(m, r),
    )


def pairwise_touching(a: SubsetArray, r: float) -> list[tuple[int, int]]:
    """Index pairs whose ``r``-balls meet; handy for error messages."""
    balls = ball_array(a, r).masks
    hits = (balls[:, None, :] & balls[None, :, :]).any(axis=2)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(hits, 1)))]
