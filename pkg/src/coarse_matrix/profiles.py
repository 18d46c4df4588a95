"""Dimension profiles: arrays of non-decreasing step functions.

A profile ``(a_0, ..., a_k)`` says that for scales ``r_0 <= ... <= r_k`` a
space splits into parts ``X_0 .. X_k`` where ``X_i`` is a union of
``floor(a_i(r_{i-1}))`` pieces, each with bounded scale-``r_i`` components.
``a_0`` is a constant.

Thresholds and values are held as exact fractions so that composition and
evaluation at breakpoints never round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .algebra import IndexSet, SubsetArray, is_cover, set_norm
from .report import DecompositionReport
from .space import FiniteMetricSpace, components_norm

Number = Union[int, float, Fraction]


def _q(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("profile numbers must be finite")
    return Fraction(x)


def _out(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


@dataclass(frozen=True)
class ProfileFn:
    """Non-decreasing step function on ``[0, inf)``.

    ``breakpoints`` holds ``(threshold, value)`` pairs; the value applies from
    its threshold up to the next one.  The canonical form starts at 0 and has
    no repeated values.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        pts = sorted(((_q(t), _q(v)) for t, v in self.breakpoints), key=lambda p: p[0])
        if not pts:
            raise ValueError("a step function needs at least one breakpoint")
        if any(v < 0 for _, v in pts):
            raise ValueError("profile values must be non-negative")
        merged: list[tuple[Fraction, Fraction]] = []
        for t, v in pts:
            if merged and merged[-1][0] == t:
                merged[-1] = (t, max(merged[-1][1], v))
            else:
                merged.append((t, v))
        for (_, a), (_, b) in zip(merged, merged[1:]):
            if b < a:
                raise ValueError(f"step function decreases: {[(_out(t), _out(v)) for t, v in merged]}")
        canon = [(Fraction(0), merged[0][1])]
        for t, v in merged[1:]:
            if t <= 0:
                canon[0] = (Fraction(0), v)
            elif v != canon[-1][1]:
                canon.append((t, v))
        object.__setattr__(self, "breakpoints", tuple(canon))

    @classmethod
    def const(cls, value: Number) -> "ProfileFn":
        return cls(((0, value),))

    @classmethod
    def steps(cls, pairs: Iterable[tuple[Number, Number]]) -> "ProfileFn":
        return cls(tuple(pairs))

    @property
    def is_constant(self) -> bool:
        return len(self.breakpoints) == 1

    @property
    def thresholds(self) -> tuple[Fraction, ...]:
        return tuple(t for t, _ in self.breakpoints)

    def __call__(self, r: Number) -> Fraction:
        r = _q(r)
        value = self.breakpoints[0][1]
        for t, v in self.breakpoints:
            if t <= r:
                value = v
            else:
                break
        return value

    def to_json(self) -> list:
        return [[_out(t), _out(v)] for t, v in self.breakpoints]

    def __repr__(self) -> str:
        if self.is_constant:
            return f"const({_out(self.breakpoints[0][1])})"
        return "steps(" + ", ".join(f"{_out(t)}:{_out(v)}" for t, v in self.breakpoints) + ")"


@dataclass(frozen=True)
class LinearFn:
    """``r -> slope * r + intercept`` with ``slope >= 0``; a rescaling map."""

    slope: Fraction
    intercept: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "slope", _q(self.slope))
        object.__setattr__(self, "intercept", _q(self.intercept))
        if self.slope < 0:
            raise ValueError("a rescaling map must be non-decreasing")

    def __call__(self, r: Number) -> Fraction:
        return self.slope * _q(r) + self.intercept


Monotone = Union[ProfileFn, LinearFn]


def compose(f: Monotone, g: Monotone) -> Monotone:
    """``f o g`` for step and linear maps; the result is exact."""
    if isinstance(g, ProfileFn):
        return ProfileFn(tuple((t, f(v)) for t, v in g.breakpoints))
    if isinstance(f, LinearFn):
        return LinearFn(f.slope * g.slope, f.slope * g.intercept + f.intercept)
    if g.slope == 0:
        return ProfileFn.const(f(g.intercept))
    # f(g(r)) jumps where g(r) crosses a threshold of f
    pts = [(Fraction(0), f(g(0)))]
    for t, v in f.breakpoints:
        at = (t - g.intercept) / g.slope
        if at > 0:
            pts.append((at, v))
    return ProfileFn(tuple(pts))


def combine(f: ProfileFn, g: ProfileFn, op: Callable[[Fraction, Fraction], Fraction]) -> ProfileFn:
    """Pointwise ``op`` of two step functions over their merged breakpoints."""
    ts = sorted(set(f.thresholds) | set(g.thresholds))
    return ProfileFn(tuple((t, op(f(t), g(t))) for t in ts))


@dataclass(frozen=True)
class Profile:
    fns: tuple[ProfileFn, ...]

    def __post_init__(self):
        fns = tuple(f if isinstance(f, ProfileFn) else ProfileFn.const(f) for f in self.fns)
        if not fns:
            raise ValueError("a profile has at least one function")
        if not fns[0].is_constant:
            raise ValueError("the first function of a profile must be constant")
        object.__setattr__(self, "fns", fns)

    @classmethod
    def of(cls, *fns: ProfileFn | Number) -> "Profile":
        return cls(tuple(fns))

    @property
    def k(self) -> int:
        return len(self.fns) - 1

    @property
    def head(self) -> Fraction:
        return self.fns[0](0)

    def __len__(self) -> int:
        return len(self.fns)

    def to_json(self) -> dict:
        return {"fns": [f.to_json() for f in self.fns]}

    @classmethod
    def from_json(cls, data: dict) -> "Profile":
        return cls(tuple(ProfileFn(tuple((t, v) for t, v in f)) for f in data["fns"]))

    def __repr__(self) -> str:
        return "Profile(" + ", ".join(map(repr, self.fns)) + ")"


def eval(p: Profile, i: int, r: Number = 0) -> Fraction:  # noqa: A001 - mirrors the notation
    """Value of ``a_i`` at ``r``; the argument is ignored for ``i = 0``."""
    if not 0 <= i <= p.k:
        raise IndexError(f"profile index {i} out of range 0..{p.k}")
    return p.fns[0](0) if i == 0 else p.fns[i](r)


def piece_count(value: Number) -> int:
    """Pieces allowed by a dimension bound of ``value - 1``.

    A non-integral bound ``d`` means the largest integer below ``d``, so the
    count is ``floor(value)`` either way.
    """
    return max(0, math.floor(_q(value)))


def normalize(p: Profile) -> Profile:
    """``(a_0, a_1, ...) -> (1, a_0 - 1, a_1, ...)``."""
    if p.head < 1:
        raise ValueError(f"normalize needs a_0 >= 1, got {_out(p.head)}")
    return Profile((ProfileFn.const(1), ProfileFn.const(p.head - 1)) + p.fns[1:])


def to_integral(p: Profile) -> Profile:
    """Restrict to integer arguments and take integer parts of the values."""
    return Profile(tuple(
        ProfileFn(tuple((math.ceil(t), math.floor(v)) for t, v in f.breakpoints)) for f in p.fns
    ))


def from_integral(p: Profile) -> Profile:
    """Extend an integral profile to real arguments via ``r -> floor(r) + 1``."""
    return Profile(tuple(
        ProfileFn(tuple((max(Fraction(0), t - 1), v) for t, v in f.breakpoints)) for f in p.fns
    ))


def pullback(p: Profile, beta: Monotone) -> Profile:
    """Compose every function with a non-decreasing ``beta``."""
    return Profile(tuple(compose(f, beta) for f in p.fns))


def _shape_one(p: Profile, what: str) -> ProfileFn:
    if p.k != 1 or p.head != 1:
        raise ValueError(f"{what} needs profiles of the form (1, a), got {p!r}")
    return p.fns[1]


def union_profile(p: Profile, q: Profile) -> Profile:
    """``(1, a)`` and ``(1, b)`` give ``(2, max(a, b))`` for the union."""
    a, b = _shape_one(p, "union_profile"), _shape_one(q, "union_profile")
    return Profile.of(ProfileFn.const(2), combine(a, b, max))


def product_profile(p: Profile, q: Profile) -> Profile:
    """``(1, a)`` and ``(1, b)`` give ``(2, a b + a + b)`` for the product."""
    a, b = _shape_one(p, "product_profile"), _shape_one(q, "product_profile")
    return Profile.of(ProfileFn.const(2), combine(a, b, lambda x, y: x * y + x + y))


# ---------------------------------------------------------------------------
# scheduling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    c: tuple[int, ...]           # pieces per part
    p: tuple[int, ...]           # running slot totals
    t: tuple[Fraction, ...]      # scale each part is certified at
    slots: tuple[tuple[int, int], ...]  # slot j (1-based) -> (part, scale index)
    literal: bool = False

    def slot_scale(self, j: int) -> Fraction:
        part = self.slots[j - 1][0]
        return self.t[part]

    def violations(self, r_seq: Sequence[Number]) -> list[int]:
        """Slots whose assigned scale is below the required ``r_j``."""
        return [j for j in range(1, len(self.slots) + 1) if self.slot_scale(j) < _q(r_seq[j - 1])]

    def to_json(self) -> dict:
        return {
            "c": list(self.c),
            "p": list(self.p),
            "t": [_out(x) for x in self.t],
            "slots": [{"slot": j, "part": part, "piece": piece}
                      for j, (part, piece) in enumerate(self.slots, start=1)],
            "literal": self.literal,
        }


class ScheduleError(ValueError):
    pass


def _r(r_seq: Sequence[Fraction], j: int) -> Fraction:
    if j > len(r_seq):
        raise ScheduleError(f"scale sequence too short: index {j} needed, only {len(r_seq)} given")
    return r_seq[max(j, 1) - 1]


def apc_schedule(p: Profile, r_seq: Sequence[Number], *, literal: bool = False) -> Schedule:
    """Assign the pieces of each part to consecutive scale slots ``1, 2, ...``.

    Default recurrence: ``c_0 = a_0``, ``p_0 = c_0``, ``t_0 = r_{p_0}``; then
    ``c_i = a_i(t_{i-1})``, ``p_i = p_{i-1} + c_i``, ``t_i = r_{p_i}``.  Part
    ``i`` fills slots ``p_{i-1}+1 .. p_i``, all at or below its own scale.

    ``literal=True`` follows the printed recurrence instead:
    ``s_1 = r_{a_0}``, ``s_{i+1} = r_{q_i}`` with ``q_i = sum_{j<=i} a_j(s_j)``,
    part ``i`` certified at ``s_i`` (``s_0`` read as ``s_1``) with
    ``a_i(s_{i-1})`` pieces.  It can leave slots under-scaled.
    """
    rs = [_q(x) for x in r_seq]
    if any(b < a for a, b in zip(rs, rs[1:])):
        raise ScheduleError("scale sequence must be non-decreasing")
    c, ps, ts = [], [], []
    if not literal:
        c0 = piece_count(eval(p, 0))
        c.append(c0)
        ps.append(c0)
        ts.append(_r(rs, c0))
        for i in range(1, p.k + 1):
            ci = piece_count(eval(p, i, ts[-1]))
            c.append(ci)
            ps.append(ps[-1] + ci)
            ts.append(_r(rs, ps[-1]))
    else:
        c0 = piece_count(eval(p, 0))
        s = {1: _r(rs, c0)}
        q = 0
        for i in range(1, p.k):
            q += piece_count(eval(p, i, s[i]))
            s[i + 1] = _r(rs, q)
        s[0] = s[1]
        c.append(c0)
        ps.append(c0)
        ts.append(s[0])
        for i in range(1, p.k + 1):
            ci = piece_count(eval(p, i, s[i - 1]))
            c.append(ci)
            ps.append(ps[-1] + ci)
            ts.append(s[i])
        if ps[-1] > len(rs):
            raise ScheduleError(f"scale sequence too short: index {ps[-1]} needed, only {len(rs)} given")
    slots = tuple((i, piece) for i, ci in enumerate(c) for piece in range(ci))
    return Schedule(tuple(c), tuple(ps), tuple(ts), slots, literal)


# ---------------------------------------------------------------------------
# uniformizing scale-dependent families
# ---------------------------------------------------------------------------


def _tuples(bounds: Sequence[int]):
    """Non-decreasing non-negative integer tuples with ``r_j <= bounds[j]``."""
    if not bounds:
        yield ()
        return
    for head in range(int(bounds[0]) + 1):
        for rest in _tuples(bounds[1:]):
            t = (head,) + rest
            if all(a <= b for a, b in zip(t, t[1:])):
                yield t


def uniformize(alpha0: int, alphas: Sequence[Callable[..., int]], *, literal_index: bool = False) -> Profile:
    """Turn functions of all earlier scales into an integral profile.

    ``alphas[i - 1]`` is ``a_i(r_0, ..., r_{i-1})``.  ``b_0 = a_0`` and
    ``b_{i+1}(r)`` is the largest ``a_{i+1}(r_0, ..., r_i)`` over
    non-decreasing tuples with ``r_j <= b_j(r)``.  With ``literal_index`` the
    maximum is over ``a_i(r_0, ..., r_{i-1})`` instead, as printed.

    Each ``b_j`` is built from constants only, so every result is constant.
    """
    betas = [int(alpha0)]
    family = [lambda: int(alpha0)] + list(alphas)
    for i in range(len(alphas)):
        fn = family[i] if literal_index else family[i + 1]
        arity = i if literal_index else i + 1
        best = max((int(fn(*t)) for t in _tuples(betas[:arity])), default=0)
        betas.append(best)
    return Profile(tuple(ProfileFn.const(b) for b in betas))


# ---------------------------------------------------------------------------
# instance verification
# ---------------------------------------------------------------------------


def verify_profile_instance(space: FiniteMetricSpace, p: Profile, r_arr: Sequence[Number], parts: SubsetArray,
                            bounds: Sequence[Number], pieces: Sequence[SubsetArray] | None = None) -> DecompositionReport:
    """Check a concrete decomposition against a profile.

    Part ``i`` must be the union of at most ``floor(a_i(r_{i-1}))`` pieces,
    each with scale-``r_i`` components of diameter at most ``bounds[i]``.
    Without explicit ``pieces`` the part itself is the single piece.
    """
    rep = DecompositionReport("profile", scales={"r": [float(x) for x in r_arr]})
    rep.input = {"profile": p.to_json(), "bounds": list(bounds)}
    k = p.k
    if not (len(parts) == k + 1 == len(r_arr) == len(bounds)):
        rep.check("profile.shape", False)
        rep.notes.append(f"need {k + 1} parts, scales and bounds; got {len(parts)}, {len(r_arr)}, {len(bounds)}")
        return rep
    rep.check("profile.shape", True)
    rep.check("profile.cover", parts.space == space and is_cover(parts))
    rs = [_q(x) for x in r_arr]
    rep.check("profile.scales_sorted", all(a <= b for a, b in zip(rs, rs[1:])))
    counts, measured = [], []
    for i in range(k + 1):
        part = parts.at(i)
        allowed = piece_count(eval(p, i, rs[i - 1] if i else 0))
        if pieces is None:
            ps = [part] if not part.is_empty() else []
        else:
            ps = [e for e in pieces[i].entries() if not e.is_empty()]
            joined = set_norm(pieces[i]) if len(pieces[i]) else space.empty()
            rep.check(f"profile.part{i}.pieces_cover", joined == part)
        norms = [components_norm(e, float(rs[i])) for e in ps]
        counts.append(len(ps))
        measured.append(max(norms, default=0.0))
        rep.check(f"profile.part{i}.count", len(ps) <= allowed)
        rep.check(f"profile.part{i}.bounded", all(b <= float(bounds[i]) for b in norms))
    rep.measured.update(pieces=counts, bounds=measured)
    return rep


@dataclass(frozen=True)
class ProfileInstance:
    parts: SubsetArray
    pieces: tuple[SubsetArray, ...]
    scales: tuple
    bounds: tuple


def normalize_instance(inst: ProfileInstance, r0: Number) -> ProfileInstance:
    """Instance for ``normalize(p)`` from one for ``p``.

    The first piece of ``X_0`` becomes the new part 0 at the extra scale
    ``r0`` (at most the old first scale), the remaining pieces of ``X_0``
    become part 1, and every later part moves up by one.
    """
    if _q(r0) > _q(inst.scales[0]):
        raise ValueError("the new leading scale must not exceed the old first scale")
    space = inst.parts.space
    first = inst.pieces[0]
    if len(first):
        head = SubsetArray(space, IndexSet.range(1), first.masks[:1])
        rest = SubsetArray(space, IndexSet.range(len(first) - 1), first.masks[1:])
    else:
        head = first
        rest = first
    part0 = head.masks.any(axis=0) if len(head) else np.zeros(len(space), dtype=np.bool_)
    part1 = rest.masks.any(axis=0) if len(rest) else np.zeros(len(space), dtype=np.bool_)
    masks = np.vstack([part0, part1, inst.parts.masks[1:]])
    parts = SubsetArray(space, IndexSet.range(masks.shape[0]), masks)
    return ProfileInstance(parts, (head, rest) + tuple(inst.pieces[1:]),
                           (r0,) + tuple(inst.scales), (inst.bounds[0],) + tuple(inst.bounds))
