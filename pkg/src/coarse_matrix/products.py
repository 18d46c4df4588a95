"""Weighted product metrics on finite truncations of infinite products.

Two ways to combine factor distances ``rho_d`` with weights ``w_d > 0``:

* asymptotic: each coordinate contributes ``w_d`` if it moved by at most
  ``w_d``, its own distance if it moved further, and 0 if it did not move;
* reduced: the weighted sum ``sum_d w_d * rho_d``.

The envelope ``E(t) = max{d_A(u, v) : d_B(u, v) <= t}`` over all pairs is a
finite stand-in for a coarse-equivalence control function.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import INF, FiniteMetricSpace, MetricValidationError, validate

KINDS = ("asymptotic", "reduced")


@dataclass(frozen=True)
class WeightFn:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(not x > 0 for x in w):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, d: int) -> float:
        return self.weights[d]

    def scaled(self, c: float) -> "WeightFn":
        return WeightFn(tuple(c * x for x in self.weights))

    @property
    def increasing(self) -> bool:
        return all(a <= b for a, b in zip(self.weights, self.weights[1:]))


def _check(factors: Sequence[FiniteMetricSpace], w: WeightFn) -> None:
    if len(factors) != len(w):
        raise ValueError(f"{len(factors)} factors but {len(w)} weights")


def _term(rho: float, weight: float, same: bool) -> float:
    if same:
        return 0.0
    return weight if rho <= weight else rho


def asymptotic_metric(factors: Sequence[FiniteMetricSpace], w: WeightFn, u: Sequence[int], v: Sequence[int]) -> float:
    """Capped sum; ``u`` and ``v`` are tuples of point indices, one per factor."""
    _check(factors, w)
    return float(sum(_term(f.dist[a, b], w[d], a == b) for d, (f, a, b) in enumerate(zip(factors, u, v))))


def reduced_metric(factors: Sequence[FiniteMetricSpace], w: WeightFn, u: Sequence[int], v: Sequence[int]) -> float:
    _check(factors, w)
    total = 0.0
    for d, (f, a, b) in enumerate(zip(factors, u, v)):
        rho = f.dist[a, b]
        if math.isinf(rho):
            return INF
        total += w[d] * rho
    return float(total)


def is_c_discrete(space: FiniteMetricSpace, c: float) -> bool:
    """Distinct points are at distance at least ``c``."""
    if not c > 0:
        raise ValueError("c must be positive")
    off = ~np.eye(len(space), dtype=np.bool_)
    return bool((space.dist[off] >= c).all())


class BudgetError(ValueError):
    pass


def product_points(factors: Sequence[FiniteMetricSpace], budget: int, allow_sampling: bool = False) -> list[tuple[int, ...]]:
    """All coordinate tuples, or a deterministic truncation.

    The truncation enumerates the longest leading run of factors that fits in
    the budget and pins the remaining coordinates to point 0.
    """
    sizes = [len(f) for f in factors]
    total = math.prod(sizes)
    if total <= budget:
        return list(itertools.product(*(range(s) for s in sizes)))
    if not allow_sampling:
        raise BudgetError(f"full product has {total} points, budget is {budget}")
    lead, count = 0, 1
    while lead < len(sizes) and count * sizes[lead] <= budget:
        count *= sizes[lead]
        lead += 1
    head = itertools.product(*(range(s) for s in sizes[:lead]))
    return [h + (0,) * (len(sizes) - lead) for h in head]


def product_table(factors: Sequence[FiniteMetricSpace], w: WeightFn, points: Sequence[tuple[int, ...]], kind: str) -> np.ndarray:
    if kind not in KINDS:
        raise ValueError(f"metric kind must be one of {KINDS}, got {kind!r}")
    _check(factors, w)
    pts = np.array(points, dtype=np.int64).reshape(len(points), len(factors))
    n = len(points)
    table = np.zeros((n, n))
    for d, f in enumerate(factors):
        col = pts[:, d]
        rho = f.dist[np.ix_(col, col)]
        if kind == "reduced":
            with np.errstate(invalid="ignore"):
                table += np.where(np.isinf(rho), INF, w[d] * rho)
        else:
            same = col[:, None] == col[None, :]
            term = np.where(same, 0.0, np.where(rho <= w[d], w[d], rho))
            table += term
    return table


def build_product_space(factors: Sequence[FiniteMetricSpace], w: WeightFn, kind: str = "reduced", *,
                        budget: int = 4096, allow_sampling: bool = False, validate_metric: bool = True) -> FiniteMetricSpace:
    points = product_points(factors, budget, allow_sampling)
    table = product_table(factors, w, points, kind)
    labels = [tuple(factors[d].labels[c] for d, c in enumerate(p)) for p in points]
    space = FiniteMetricSpace(
        labels,
        table,
        name=f"{kind}({','.join(f.name for f in factors)})",
        descriptor={"kind": "table"},
        validate=False,
    )
    if validate_metric:
        validate(space)
    return space


@dataclass(frozen=True)
class Envelope:
    thresholds: tuple[float, ...]
    forward: tuple[float, ...]   # max d_a over pairs with d_b <= t
    backward: tuple[float, ...]  # max d_b over pairs with d_a <= t
    exhaustive: bool = True

    def finite(self) -> bool:
        return all(math.isfinite(x) for x in self.forward + self.backward)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "forward", "backward"])
        for row in zip(self.thresholds, self.forward, self.backward):
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _envelope(src: np.ndarray, dst: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    # max dst over pairs with src <= t, via a running max along sorted src
    order = np.argsort(src, kind="stable")
    s, d = src[order], np.maximum.accumulate(dst[order])
    pos = np.searchsorted(s, thresholds, side="right")
    return np.where(pos > 0, d[np.maximum(pos - 1, 0)], 0.0)


def coarse_envelope(da: np.ndarray | FiniteMetricSpace, db: np.ndarray | FiniteMetricSpace,
                    thresholds: Sequence[float] | None = None) -> Envelope:
    """Forward and backward envelopes between two metrics on one point set."""
    a = da.dist if isinstance(da, FiniteMetricSpace) else np.asarray(da, dtype=np.float64)
    b = db.dist if isinstance(db, FiniteMetricSpace) else np.asarray(db, dtype=np.float64)
    if isinstance(da, FiniteMetricSpace) and isinstance(db, FiniteMetricSpace) and da.labels != db.labels:
        raise MetricValidationError("envelopes need two metrics on the same point set")
    if a.shape != b.shape:
        raise MetricValidationError(f"point sets differ: {a.shape} vs {b.shape}")
    iu = np.triu_indices(a.shape[0], 1)
    pa, pb = a[iu], b[iu]
    if thresholds is None:
        finite = np.concatenate([pa[np.isfinite(pa)], pb[np.isfinite(pb)]])
        thresholds = np.unique(np.concatenate([[0.0], finite]))
    ts = np.asarray(thresholds, dtype=np.float64)
    fwd = _envelope(pb, pa, ts)
    bwd = _envelope(pa, pb, ts)
    return Envelope(tuple(ts.tolist()), tuple(fwd.tolist()), tuple(bwd.tolist()))
