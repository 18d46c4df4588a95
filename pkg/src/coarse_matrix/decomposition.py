"""Ring arrays, augmented decomposition matrices, refinements and product splits.

The central object is an augmented matrix ``[B | A]`` with ``m`` rows: column
``b`` followed by ``a1 .. an``.  Every row covers the space, the ``A``
columns are scale-``r``-disjoint, and every entry has scale-``r`` components
of bounded diameter.  ``asdim_matrix`` builds one from a disjoint cover
``X_0 .. X_n`` by repeatedly carving chain-distance rings out of the running
``B`` column; ``verify_asdim_matrix`` rechecks the three properties from
scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    IndexSet,
    SubsetArray,
    SubsetMatrix,
    array_union,
    as_column,
    ball_matrix,
    const_array,
    cross_dot,
    is_cover,
    leq,
    matmul_cap,
    matmul_cross,
    set_norm,
    to_array,
    transpose,
)
from .covers import net_cover
from .disjointness import array_scale_disjoint, arrays_orthogonal
from .report import ConstructionDefect, DecompositionReport
from .space import (
    Dim0Certificate,
    FiniteMetricSpace,
    Subset,
    _check_radius,
    chain_levels,
    components,
    components_norm,
    point_space,
    product,
    require_same_space,
)


class PartitionError(ValueError):
    """Input parts are not a disjoint cover."""


class CertificateError(ValueError):
    """A supplied certificate does not hold."""


class DiscretenessError(ValueError):
    pass


# ---------------------------------------------------------------------------
# rings
# ---------------------------------------------------------------------------


def outer_ring(a: Subset, s: float, k: int, within: Subset | None = None) -> Subset:
    """Points at chain distance exactly ``k + 1`` from ``a`` at scale ``s``."""
    if k < 0:
        raise ValueError("ring index must be non-negative")
    if a.is_empty():
        return a.space.empty()
    levels = chain_levels(a, s, within)
    return Subset(a.space, levels == k + 1)


def ring_level(i: int) -> int:
    """Chain distance of the ``i``-th ring of a perpendicular array."""
    return 3 * i + 4


def perp_array(y: Subset, s: float, m: int, within: Subset | None = None) -> SubsetArray:
    """Entries ``0..m``: the rings of ``y`` at chain distance ``3i + 4``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    _check_radius(s)
    masks = np.zeros((m + 1, len(y.space)), dtype=np.bool_)
    if not y.is_empty():
        levels = chain_levels(y, s, within)
        for i in range(m + 1):
            masks[i] = levels == ring_level(i)
    return SubsetArray(y.space, IndexSet.range(m + 1), masks)


def rows_of(a: SubsetArray, count: int) -> SubsetArray:
    """The first ``count`` entries, reindexed ``0..count-1``."""
    return SubsetArray(a.space, IndexSet.range(count), a.masks[:count])


@dataclass(frozen=True)
class PerpSplit:
    inner: SubsetArray
    outer: SubsetArray
    outer_bounds: tuple[float, ...]
    scale: float


def perp_split(y: Subset, z: SubsetArray, yperp: SubsetArray, r: float) -> PerpSplit:
    """``inner = z & yperp`` and ``outer = (y | z) - yperp``, entrywise."""
    require_same_space(y.space, z.space)
    if z.index != yperp.index:
        raise ValueError(f"shape mismatch: z has {len(z)} entries, yperp has {len(yperp)}")
    inner = SubsetArray(z.space, z.index, z.masks & yperp.masks)
    outer = SubsetArray(z.space, z.index, (z.masks | y.mask) & ~yperp.masks)
    bounds = tuple(components_norm(e, r) for e in outer.entries())
    return PerpSplit(inner, outer, bounds, float(r))


def check_perp(y: Subset, s: float, m: int, z: SubsetArray | None = None, r: float | None = None) -> DecompositionReport:
    """Ring-array conditions and, when ``z`` is given, the split conditions."""
    rep = DecompositionReport("perp", scales={"s": s, "m": m})
    yperp = perp_array(y, s, m)
    rep.check("perp.rings_disjoint", array_scale_disjoint(yperp, s))
    rep.check("perp.orthogonal_to_y", arrays_orthogonal(yperp, const_array(y, yperp.index), s))
    if z is not None:
        r = s if r is None else r
        rep.scales["r"] = r
        sp = perp_split(y, z, yperp, r)
        rep.check("perp.outer_contains_y", leq(const_array(y, z.index), sp.outer))
        union = array_union(const_array(y, z.index), z)
        rep.check("perp.union_restored", array_union(sp.inner, sp.outer) == union)
        rep.check("perp.outer_bounded", all(math.isfinite(b) for b in sp.outer_bounds))
        rep.measured["outer_bounds"] = list(sp.outer_bounds)
    rep.measured["ring_sizes"] = [len(e) for e in yperp.entries()]
    return rep


# ---------------------------------------------------------------------------
# union bound
# ---------------------------------------------------------------------------


def union_bound(m_bound: float, s: float, r: float) -> float:
    return m_bound + s + 2 * r


@dataclass(frozen=True)
class UnionCheck:
    hypothesis: bool
    measured: float
    bound: float

    @property
    def holds(self) -> bool:
        return (not self.hypothesis) or self.measured <= self.bound


def check_union_bound(a: Subset, b: Subset, r: float, m_bound: float, s: float) -> UnionCheck:
    """Compare ``components_norm(a | b, r)`` with ``union_bound(m_bound, s, r)``.

    The hypothesis is ``components_norm(a, r) <= m_bound`` and
    ``components_norm(b, m_bound + 2r) <= s``.
    """
    hyp = components_norm(a, r) <= m_bound and components_norm(b, m_bound + 2 * r) <= s
    return UnionCheck(bool(hyp), components_norm(a | b, r), union_bound(m_bound, s, r))


def union_bound_sharp(m_bound: float, s: float, r: float) -> float:
    """A bound that does hold under the same hypothesis: ``2M + s + 4r``.

    A component of ``a | b`` meets ``b`` in one piece of diameter at most
    ``s``, and every ``a``-component it reaches sits within ``2r`` of it.
    """
    return 2 * m_bound + s + 4 * r


# ---------------------------------------------------------------------------
# augmented matrices
# ---------------------------------------------------------------------------


def augmented_cols(n: int) -> IndexSet:
    return IndexSet(("b",) + tuple(f"a{i}" for i in range(1, n + 1)))


@dataclass
class AugmentedMatrix:
    matrix: SubsetMatrix
    scale: float
    certs: dict = field(default_factory=dict)
    parts: SubsetArray | None = None
    part_certs: tuple = ()

    @property
    def space(self) -> FiniteMetricSpace:
        return self.matrix.space

    @property
    def m(self) -> int:
        return len(self.matrix.rows)

    @property
    def n(self) -> int:
        return len(self.matrix.cols) - 1

    @property
    def b(self) -> SubsetArray:
        return self.matrix.column("b")

    @property
    def a(self) -> SubsetMatrix:
        return self.matrix.select_cols(self.matrix.cols.labels[1:])

    def bound(self) -> float:
        return max((c.bound for c in self.certs.values()), default=0.0)

    def entry_bounds(self) -> dict:
        return {f"{s}:{t}": c.bound for (s, t), c in sorted(self.certs.items(), key=lambda kv: str(kv[0]))}


def _validate_parts(parts: SubsetArray) -> None:
    overlap = parts.masks.sum(axis=0)
    if (overlap > 1).any():
        x = int(np.flatnonzero(overlap > 1)[0])
        raise PartitionError(f"parts are not disjoint: point {parts.space.labels[x]!r} is in several parts")
    if not is_cover(parts):
        x = int(np.flatnonzero(overlap == 0)[0])
        raise PartitionError(f"parts do not cover the space: point {parts.space.labels[x]!r} is missing")


def measure_certs(matrix: SubsetMatrix, r: float) -> dict:
    return {
        (s, t): Dim0Certificate(float(r), components_norm(matrix[s, t], r))
        for s in matrix.rows
        for t in matrix.cols
    }


def asdim_matrix(parts: SubsetArray, r: float, m: int, *, verify: bool = True) -> AugmentedMatrix:
    """Build ``[B | A]`` with ``m`` rows from a disjoint cover ``X_0 .. X_n``.

    Start with ``B = (X_0, ..., X_0)``.  For each later part ``X_i`` take its
    rings at chain levels ``3j + 4`` (scale ``r``), put ``A(j, i) = ring_j & B(j)``
    and then ``B(j) = (X_i | B(j)) - A(j, i)``.
    """
    r = _check_radius(r)
    if m < 1:
        raise ValueError("m must be at least 1")
    _validate_parts(parts)
    space = parts.space
    n = len(parts) - 1
    rows = IndexSet.range(m)
    part_scale = (m + 1) * r
    part_certs = tuple(Dim0Certificate(part_scale, components_norm(p, part_scale)) for p in parts.entries())

    b = np.broadcast_to(parts.masks[0], (m, len(space))).copy()
    a_cols = []
    for i in range(1, n + 1):
        xi = parts.at(i)
        rings = rows_of(perp_array(xi, r, m), m)
        ai = rings.masks & b
        b = (b | xi.mask) & ~ai
        a_cols.append(ai)
    masks = np.stack([b] + a_cols, axis=1) if a_cols else b[:, None, :]
    matrix = SubsetMatrix(space, rows, augmented_cols(n), masks)
    aug = AugmentedMatrix(matrix, r, measure_certs(matrix, r), parts, part_certs)
    if verify:
        rep = verify_asdim_matrix(aug, r)
        if not rep.passed:
            raise ConstructionDefect(rep)
    return aug


def verify_asdim_matrix(aug: AugmentedMatrix, r: float | None = None) -> DecompositionReport:
    """Recheck row cover, ``A``-column disjointness and the recorded entry bounds."""
    r = aug.scale if r is None else r
    mat = aug.matrix
    rep = DecompositionReport("asdim", scales={"r": r, "m": aug.m, "n": aug.n})
    gram = matmul_cap(mat, transpose(mat))
    rep.check("asdim.row_cover", all(gram.masks[k, k].all() for k in range(aug.m)))
    if aug.n:
        a = aug.a
        prod = matmul_cap(ball_matrix(a, r), ball_matrix(transpose(a), r))
        rep.check("asdim.a_columns_disjoint", prod.is_diagonal())
    else:
        rep.check("asdim.a_columns_disjoint", True)
    measured = measure_certs(mat, r)
    recorded_ok = set(aug.certs) == set(measured) and all(
        aug.certs[k].scale == r and aug.certs[k].bound == measured[k].bound for k in measured
    )
    rep.check("asdim.entries_certified", recorded_ok and all(math.isfinite(c.bound) for c in measured.values()))
    rep.measured["entry_bounds"] = {f"{s}:{t}": c.bound for (s, t), c in measured.items()}
    rep.measured["max_bound"] = max((c.bound for c in measured.values()), default=0.0)
    rep.certificates = [c for _, c in sorted(measured.items(), key=lambda kv: str(kv[0]))]
    return rep


# ---------------------------------------------------------------------------
# disjoint refinement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Refinement:
    parts: SubsetArray
    certs: tuple[Dim0Certificate, ...]
    cover_scale: float
    cover_bound: float
    predicted: float
    r: float
    s: float


def refine_disjoint(xset: Subset, r: float, s: float, m_bound: float | None = None) -> Refinement:
    """Split ``xset`` into scale-``r``-disjoint parts of scale-``s`` dimension 0.

    ``xset`` must have scale-``r`` components of diameter at most ``m_bound``.
    A net cover ``Y_0 .. Y_p`` at scale ``R = M + 2s + 2r`` groups the
    components: ``Z_i`` collects the components meeting ``Y_i`` and part ``i``
    is ``Z_i`` minus the earlier ``Z_j``.  Parts inherit whole components, so
    they are scale-``r``-disjoint; each scale-``s`` component of a part lies
    within ``M`` of a single scale-``R`` component of ``Y_i``, which gives the
    prediction ``K + 2M`` with ``K`` the cover's bound.
    """
    r = _check_radius(r)
    s = _check_radius(s)
    space = xset.space
    measured = components_norm(xset, r)
    if m_bound is None:
        m_bound = measured
    elif measured > m_bound:
        raise CertificateError(f"scale-{r} components reach diameter {measured} > {m_bound}")
    big = m_bound + 2 * s + 2 * r
    if xset.is_empty():
        empty = SubsetArray(space, IndexSet.range(0), np.zeros((0, len(space)), dtype=np.bool_))
        return Refinement(empty, (), big, 0.0, 0.0, r, s)
    ys = net_cover(space, big, within=xset)
    cover_bound = max(components_norm(y, big) for y in ys.entries())
    comps = components(xset, r)
    labels = comps.labels()
    taken = np.zeros(len(space), dtype=np.bool_)
    out = []
    for y in ys.entries():
        hit = np.unique(labels[y.mask])
        hit = hit[hit >= 0]
        z = np.isin(labels, hit) & ~taken
        taken |= z
        if z.any():
            out.append(z)
    parts = SubsetArray(space, IndexSet.range(len(out)), np.stack(out))
    certs = tuple(Dim0Certificate(s, components_norm(p, s)) for p in parts.entries())
    return Refinement(parts, certs, big, cover_bound, cover_bound + 2 * m_bound, r, s)


def check_refinement(xset: Subset, ref: Refinement) -> DecompositionReport:
    rep = DecompositionReport("refine", scales={"r": ref.r, "s": ref.s, "cover_scale": ref.cover_scale})
    rep.check("refine.covers", set_norm(ref.parts) == xset if len(ref.parts) else xset.is_empty())
    rep.check("refine.inside", all(p <= xset for p in ref.parts.entries()))
    rep.check("refine.r_disjoint", array_scale_disjoint(ref.parts, ref.r))
    bounds = [components_norm(p, ref.s) for p in ref.parts.entries()]
    rep.check("refine.certs_recorded", bounds == [c.bound for c in ref.certs])
    rep.check("refine.within_prediction", all(b <= ref.predicted for b in bounds))
    rep.measured.update(entry_bounds=bounds, cover_bound=ref.cover_bound, predicted=ref.predicted)
    rep.certificates = list(ref.certs)
    return rep


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossCertificate:
    certificate: Dim0Certificate
    predicted: float

    @property
    def measured(self) -> float:
        return self.certificate.bound


def _combine(a: float, b: float, norm: str) -> float:
    return a + b if norm == "l1" else max(a, b)


def cross_dim0(a: SubsetArray, b: SubsetArray, r: float, product_space: FiniteMetricSpace,
               disjoint_side: str = "left") -> CrossCertificate:
    """Certificate for ``cross_dot(a, b)`` at scale ``r``.

    One side must be scale-``r``-disjoint; then every component of the cross
    product sits in a single ``a(s) x b(s)`` and inside a product of
    components, so its diameter is at most the sum (l1) or max (sup) of the
    two factor bounds.
    """
    r = _check_radius(r)
    side = a if disjoint_side == "left" else b
    if not array_scale_disjoint(side, r):
        raise CertificateError(f"the {disjoint_side} array is not scale-{r}-disjoint")
    norm = product_space.norm or "l1"
    ba = max((components_norm(e, r) for e in a.entries()), default=0.0)
    bb = max((components_norm(e, r) for e in b.entries()), default=0.0)
    target = cross_dot(a, b, product_space)
    predicted = _combine(ba, bb, norm) if not target.is_empty() else 0.0
    return CrossCertificate(Dim0Certificate(r, components_norm(target, r)), predicted)


@dataclass(frozen=True)
class ProductSplit:
    z: SubsetArray
    report: DecompositionReport


def product_split(mx: AugmentedMatrix, yparts: SubsetArray, product_space: FiniteMetricSpace,
                  r: float, s: float) -> ProductSplit:
    """``Z(j) = union over i of Mx(i, j) x Y_i`` for the columns ``j`` of ``Mx``.

    ``Z(b)`` is checked at scale ``r`` against the cross-product prediction;
    the ``a`` columns are measured at scale ``s`` and reported as they come.
    """
    if mx.m != len(yparts):
        raise ValueError(f"shape mismatch: Mx has {mx.m} rows but there are {len(yparts)} Y parts")
    ycol = as_column(SubsetArray(yparts.space, mx.matrix.rows, yparts.masks))
    zmat = matmul_cross(transpose(mx.matrix), ycol, product_space)
    z = to_array(zmat)
    rep = DecompositionReport("product", scales={"r": r, "s": s, "norm": product_space.norm})
    rep.check("product.cover_direct", is_cover(z))
    # second route: rows of Mx cover X and the Y parts cover Y
    rows_cover = all(mx.matrix.masks[k].any(axis=0).all() for k in range(mx.m))
    rep.check("product.cover_by_rows", rows_cover and is_cover(yparts))
    rep.check("product.y_parts_r_disjoint", array_scale_disjoint(yparts, r))
    zb = cross_dim0(mx.b, yparts, r, product_space, disjoint_side="right")
    rep.check("product.z0_within_prediction", zb.measured <= zb.predicted)
    tail = [components_norm(z[t], s) for t in mx.matrix.cols.labels[1:]]
    rep.check("product.tail_bounded", all(math.isfinite(b) for b in tail))
    rep.measured.update(z0_bound=zb.measured, z0_predicted=zb.predicted, tail_bounds=tail)
    rep.certificates = [zb.certificate] + [Dim0Certificate(s, b) for b in tail]
    return ProductSplit(z, rep)


def is_discrete(space: FiniteMetricSpace, c: float) -> bool:
    off = space.dist[~np.eye(len(space), dtype=np.bool_)]
    return bool((off >= c).all())


def product_of(spaces: Sequence[FiniteMetricSpace], norm: str = "l1") -> FiniteMetricSpace:
    if not spaces:
        return point_space()
    out = spaces[0]
    for sp in spaces[1:]:
        out = product(out, sp, norm)
    return out


@dataclass(frozen=True)
class TruncatedProduct:
    space: FiniteMetricSpace
    z0: Subset
    z1_parts: SubsetArray
    head: AugmentedMatrix
    report: DecompositionReport


def truncated_product_decomposition(factors: Sequence[FiniteMetricSpace], k: int, s: float, truncation: int,
                                    *, norm: str = "l1", head_parts: SubsetArray | None = None) -> TruncatedProduct:
    """Split ``X_1 x ... x X_T`` into ``Z_0`` (scale ``k``) and ``Z_1`` (scale ``s`` pieces).

    Factor ``i`` (counting from 1) must be ``2i``-discrete.  The first
    ``min(k, T)`` factors form the head; the tail is ``2(k+1)``-discrete, so
    its points are separate scale-``k`` components.  The head gets a one-row
    augmented matrix at scale ``k``; ``Z_0`` is its ``b`` entry times the tail
    and ``Z_1`` is the union of the ``a`` entries times the tail.
    """
    if truncation < 1 or truncation > len(factors):
        raise ValueError(f"truncation must be between 1 and {len(factors)}")
    for i, f in enumerate(factors[:truncation], start=1):
        if not is_discrete(f, 2 * i):
            raise DiscretenessError(f"factor {i} ({f.name}) is not {2 * i}-discrete")
    split = min(k, truncation)
    head = product_of(factors[:split], norm)
    tail = product_of(factors[split:truncation], norm)
    if head_parts is None:
        head_parts = net_cover(head, 2 * k)
    mx = asdim_matrix(head_parts, k, 1)
    whole = product(head, tail, norm)
    yparts = SubsetArray(tail, IndexSet.range(1), np.ones((1, len(tail)), dtype=np.bool_))
    ps = product_split(mx, yparts, whole, k, s)
    z0 = ps.z.at(0)
    z1 = SubsetArray(whole, IndexSet.of(mx.matrix.cols.labels[1:]), ps.z.masks[1:])
    rep = ps.report
    rep.kind = "trunc-product"
    rep.scales.update(k=k, truncation=truncation)
    rep.check("trunc.factors_discrete", True)
    rep.check("trunc.tail_discrete", split == truncation or is_discrete(tail, 2 * (split + 1)))
    rep.check("trunc.z1_pieces", len(z1) == mx.n)
    rep.measured["z0_bound"] = components_norm(z0, k)
    rep.measured["z1_piece_bounds"] = [components_norm(p, s) for p in z1.entries()]
    rep.measured["pieces"] = len(z1)
    return TruncatedProduct(whole, z0, z1, mx, rep)
