"""Command-line front end.

Exit codes: 0 when every verdict passes, 2 for unusable input, 3 when a
construction or a re-verification fails.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from . import io as cio
from . import profiles as prof
from .algebra import SubsetArray
from .covers import grid_bricks, interval_bricks, net_cover
from .decomposition import (
    CertificateError,
    DiscretenessError,
    PartitionError,
    asdim_matrix,
    check_perp,
    check_refinement,
    perp_array,
    perp_split,
    product_split,
    refine_disjoint,
    truncated_product_decomposition,
    verify_asdim_matrix,
)
from .generators import cluster_set, discrete_factors, rng_for
from .products import WeightFn, build_product_space, coarse_envelope
from .report import ConstructionDefect, DecompositionReport, jsonable
from .space import FiniteMetricSpace, MetricValidationError, Subset, from_table, grid, interval, product

DEFAULT_SEED = 20240501

EXIT_OK, EXIT_INPUT, EXIT_DEFECT = 0, 2, 3


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def parse_set(text: str | None, space: FiniteMetricSpace) -> Subset:
    """``"0-4,30-34"`` -> those point indices; ``None`` -> the whole space."""
    if text is None:
        return space.full()
    members: list[int] = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        if "-" in chunk[1:]:
            lo, hi = chunk.split("-", 1) if not chunk.startswith("-") else (chunk, chunk)
            members.extend(range(int(lo), int(hi) + 1))
        else:
            members.append(int(chunk))
    try:
        return space.subset(members)
    except IndexError as exc:
        raise InputError(str(exc)) from None


def parse_array(text: str, space: FiniteMetricSpace) -> SubsetArray:
    """Entries separated by ``;``, each in :func:`parse_set` syntax."""
    entries = [parse_set(part, space) for part in text.split(";")]
    return SubsetArray.from_subsets(entries, space=space)


def parse_fn(text: str) -> prof.ProfileFn:
    """``"3"`` is a constant, ``"0:2,10:5"`` a step function."""
    text = text.strip()
    if ":" not in text:
        return prof.ProfileFn.const(Fraction(text))
    pairs = []
    for item in text.split(","):
        t, v = item.split(":")
        pairs.append((Fraction(t), Fraction(v)))
    return prof.ProfileFn.steps(pairs)


def parse_profile(text: str) -> prof.Profile:
    """Functions separated by ``;`` e.g. ``"1;0:2,10:5"``."""
    try:
        return prof.Profile(tuple(parse_fn(f) for f in text.split(";")))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad profile {text!r}: {exc}") from None


def parse_family(text: str | None) -> list[int]:
    if not text:
        return []
    sizes = [int(x) for x in text.split(",") if x.strip()]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InputError("family sizes must be strictly increasing")
    return sizes


def load_space(path: str | None) -> FiniteMetricSpace:
    if path is None:
        raise InputError("--space is required")
    return cio.space_from_json(cio.load_json(path))


def default_cover(space: FiniteMetricSpace, r: float, m: int) -> SubsetArray:
    """Bricks on intervals and 2-d grids, a net cover elsewhere."""
    kind = space.descriptor.get("kind")
    if kind == "interval":
        return interval_bricks(space, r, m)
    if kind == "grid" and len(space.descriptor["dims"]) == 2:
        return grid_bricks(space, r, m, space.descriptor["norm"])
    return net_cover(space, (m + 1) * r)


def _positive(name: str, value):
    if value is None:
        raise InputError(f"-{name} is required")
    if not value > 0:
        raise InputError(f"-{name} must be positive")
    return value


def _emit(doc, out: str | None) -> None:
    cio.write_text(out, cio.dumps(doc))


def _report_doc(rep: DecompositionReport, recipe: dict, artifact: dict) -> dict:
    doc = rep.to_json()
    doc["recipe"] = recipe
    doc["artifact"] = artifact
    return doc


def _finish(rep: DecompositionReport) -> int:
    if not rep.passed:
        print(f"FAIL {rep.kind}: {', '.join(rep.failed())}", file=sys.stderr)
        return EXIT_DEFECT
    return EXIT_OK


# ---------------------------------------------------------------------------
# space
# ---------------------------------------------------------------------------


def cmd_space(args) -> int:
    if args.interval is not None:
        sp = interval(args.interval)
    elif args.grid is not None:
        dims = [int(x) for x in args.grid.lower().split("x")]
        sp = grid(dims, args.norm)
    elif args.clusters is not None:
        n, period, width = (int(x) for x in args.clusters.split(":"))
        base = interval(n)
        sub = cluster_set(base, period, width)
        idx = sub.indices
        sp = from_table(base.dist[np.ix_(idx, idx)], labels=[int(i) for i in idx], name=f"C{n}_{period}_{width}")
    elif args.table is not None:
        data = cio.load_json(args.table)
        if "metric" in data:
            sp = cio.space_from_json(data)
        else:
            table = [[cio._parse_num(d) for d in row] for row in data["dist"]]
            sp = from_table(table, labels=data.get("labels"), name=data.get("name", "X"))
    else:
        raise InputError("choose one of --interval, --grid, --clusters, --table")
    _emit(cio.space_to_json(sp), args.output)
    print(f"valid {sp.name}: {len(sp)} points", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


def run_asdim(space: FiniteMetricSpace, r: float, m: int) -> dict:
    parts = default_cover(space, r, m)
    aug = asdim_matrix(parts, r, m, verify=False)
    rep = verify_asdim_matrix(aug, r)
    rep.input = {"space": space.name, "points": len(space)}
    rep.measured["part_certificates"] = [c.to_json() for c in aug.part_certs]
    recipe = {"op": "asdim", "r": r, "m": m, "space": cio.space_to_json(space)}
    artifact = {"parts": cio.array_to_json(parts), "matrix": cio.augmented_to_json(aug)}
    return _report_doc(rep, recipe, artifact)


def run_perp(space: FiniteMetricSpace, y: Subset, s: float, m: int, z: SubsetArray | None, r: float) -> dict:
    if z is not None and len(z) != m + 1:
        raise InputError(f"--z needs {m + 1} entries, got {len(z)}")
    rep = check_perp(y, s, m, z, r)
    rep.input = {"space": space.name}
    yperp = perp_array(y, s, m)
    artifact = {"y": cio.subset_to_json(y), "yperp": cio.array_to_json(yperp)}
    recipe = {"op": "perp", "s": s, "m": m, "r": r, "space": cio.space_to_json(space), "y": cio.subset_to_json(y)}
    if z is not None:
        z = z.reindex(yperp.index)
        sp = perp_split(y, z, yperp, r)
        recipe["z"] = cio.array_to_json(z)
        artifact.update(inner=cio.array_to_json(sp.inner), outer=cio.array_to_json(sp.outer))
    return _report_doc(rep, recipe, artifact)


def run_refine(space: FiniteMetricSpace, xset: Subset, r: float, s: float) -> dict:
    ref = refine_disjoint(xset, r, s)
    rep = check_refinement(xset, ref)
    rep.input = {"space": space.name, "points": len(xset)}
    recipe = {"op": "refine", "r": r, "s": s, "space": cio.space_to_json(space), "set": cio.subset_to_json(xset)}
    artifact = {"parts": cio.array_to_json(ref.parts), "certs": [c.to_json() for c in ref.certs],
                "cover_bound": jsonable(ref.cover_bound), "predicted": jsonable(ref.predicted)}
    return _report_doc(rep, recipe, artifact)


def run_product(x: FiniteMetricSpace, y: FiniteMetricSpace, r: float, s: float, norm: str) -> dict:
    ref = refine_disjoint(y.full(), r, s)
    p = len(ref.parts)
    mx = asdim_matrix(default_cover(x, r, p), r, p)
    ps = product_split(mx, ref.parts, product(x, y, norm), r, s)
    rep = ps.report
    rep.input = {"x": x.name, "y": y.name, "rows": p}
    recipe = {"op": "product", "r": r, "s": s, "norm": norm, "x": cio.space_to_json(x), "y": cio.space_to_json(y)}
    artifact = {"z": cio.array_to_json(ps.z)}
    return _report_doc(rep, recipe, artifact)


def run_trunc(count: int, size: int, k: int, s: float, truncation: int) -> dict:
    factors = discrete_factors(count, size)
    tp = truncated_product_decomposition(factors, k, s, truncation)
    rep = tp.report
    rep.input = {"factors": [f.name for f in factors]}
    recipe = {"op": "trunc-product", "factors": count, "factor_size": size, "k": k, "s": s, "truncation": truncation}
    artifact = {"z0": cio.subset_to_json(tp.z0), "z1": cio.array_to_json(tp.z1_parts)}
    return _report_doc(rep, recipe, artifact)


def cmd_decompose(args) -> int:
    op = args.op
    if op == "asdim":
        space = load_space(args.space)
        doc = run_asdim(space, _positive("r", args.r), int(_positive("m", args.m)))
    elif op == "perp":
        space = load_space(args.space)
        s = _positive("s", args.s)
        m = int(_positive("m", args.m))
        z = parse_array(args.z, space) if args.z else None
        doc = run_perp(space, parse_set(args.set, space), s, m, z, args.r or s)
    elif op == "refine":
        space = load_space(args.space)
        doc = run_refine(space, parse_set(args.set, space), _positive("r", args.r), _positive("s", args.s))
    elif op == "product":
        x = load_space(args.space)
        y = load_space(args.space2) if args.space2 else x
        doc = run_product(x, y, _positive("r", args.r), _positive("s", args.s), args.norm)
    elif op == "trunc-product":
        doc = run_trunc(args.factors, args.factor_size, int(_positive("k", args.k)), _positive("s", args.s),
                        args.truncation)
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown construction {op}")
    doc["seed"] = args.seed
    _emit(doc, args.output)
    return EXIT_OK if doc["passed"] else EXIT_DEFECT


# ---------------------------------------------------------------------------
# profiles, envelopes, scaling
# ---------------------------------------------------------------------------


def cmd_profile(args) -> int:
    p = parse_profile(args.p)
    if args.op in ("union", "product"):
        if not args.q:
            raise InputError("--q is required")
        q = parse_profile(args.q)
        fn = prof.union_profile if args.op == "union" else prof.product_profile
        try:
            out = fn(p, q)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        doc = {"op": args.op, "p": p.to_json(), "q": q.to_json(), "result": out.to_json()}
    elif args.op == "pullback":
        if args.beta is None:
            raise InputError("--beta is required")
        beta = parse_fn(args.beta) if ":" in args.beta else prof.LinearFn(Fraction(args.beta))
        out = prof.pullback(p, beta)
        doc = {"op": "pullback", "p": p.to_json(), "beta": args.beta, "result": out.to_json()}
    elif args.op == "normalize":
        doc = {"op": "normalize", "p": p.to_json(), "result": prof.normalize(p).to_json()}
    else:
        if not args.r_seq:
            raise InputError("--r-seq is required")
        rs = [Fraction(x) for x in args.r_seq.split(",")]
        try:
            sched = prof.apc_schedule(p, rs, literal=args.literal)
        except prof.ScheduleError as exc:
            raise InputError(str(exc)) from None
        bad = sched.violations(rs)
        doc = {"op": "schedule", "p": p.to_json(), "r_seq": [prof._out(x) for x in rs],
               "schedule": sched.to_json(), "violations": bad, "passed": not bad}
        _emit(doc, args.output)
        return EXIT_OK if not bad else EXIT_DEFECT
    _emit(doc, args.output)
    return EXIT_OK


def cmd_envelope(args) -> int:
    factors = [interval(args.factor_size) for _ in range(args.factors)]
    weights = [float(x) for x in args.weights.split(",")] if args.weights else [float(d + 1) for d in range(args.factors)]
    w = WeightFn(tuple(weights))
    a = build_product_space(factors, w, "reduced")
    b = build_product_space(factors, w, "asymptotic")
    env = coarse_envelope(a, b)
    cio.write_text(args.output, env.to_csv())
    return EXIT_OK if env.finite() else EXIT_DEFECT


SCALING_HEADER = ["N", "construction", "r", "m", "max_bound", "entry_bounds"]


def scaling_rows(kind: str, family: Sequence[int], r: float, m: int, norm: str) -> list[list]:
    rows = []
    for n in family:
        space = interval(n) if kind == "interval" else grid((n, n), norm)
        aug = asdim_matrix(default_cover(space, r, m), r, m)
        bounds = aug.entry_bounds()
        rows.append([n, f"asdim-{kind}", cio._num(r), m, cio._num(aug.bound()),
                     " ".join(f"{k}={cio._num(v)}" for k, v in bounds.items())])
    return rows


def cmd_scaling(args) -> int:
    family = parse_family(args.family)
    r = _positive("r", args.r)
    m = int(_positive("m", args.m))
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCALING_HEADER)
    writer.writerows(scaling_rows(args.kind, family, r, m, args.norm))
    cio.write_text(args.output, buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _compare(rep: DecompositionReport, recorded: dict, fresh: dict, keys: Sequence[str]) -> None:
    for key in keys:
        rep.check(f"recorded.{key}", jsonable(recorded.get(key)) == jsonable(fresh.get(key)))


def verify_document(doc: dict) -> DecompositionReport:
    """Re-verify a report from its recipe and artifact, independently of the writer."""
    kind = doc.get("kind")
    recipe, artifact = doc.get("recipe"), doc.get("artifact")
    if kind == "profile-instance":
        return verify_profile_document(doc)
    if not isinstance(recipe, dict) or not isinstance(artifact, dict):
        raise cio.FormatError("report has no recipe/artifact section")
    if kind == "asdim":
        space = cio.space_from_json(recipe["space"])
        aug = cio.augmented_from_json(space, artifact["matrix"])
        parts = cio.array_from_json(space, artifact["parts"])
        rep = verify_asdim_matrix(aug, cio._parse_num(recipe["r"]))
        rebuilt = asdim_matrix(parts, cio._parse_num(recipe["r"]), int(recipe["m"]), verify=False)
        rep.check("rebuild.same_matrix", rebuilt.matrix == aug.matrix)
        _compare(rep, doc.get("measured", {}), rep.to_json()["measured"], ["entry_bounds", "max_bound"])
        return rep
    if kind == "perp":
        space = cio.space_from_json(recipe["space"])
        y = cio.subset_from_json(space, recipe["y"])
        z = cio.array_from_json(space, recipe["z"]) if "z" in recipe else None
        fresh = check_perp(y, recipe["s"], recipe["m"], z, recipe["r"])
        rep = fresh
        rep.check("recorded.yperp", artifact["yperp"] == cio.array_to_json(perp_array(y, recipe["s"], recipe["m"])))
        _compare(rep, doc.get("measured", {}), fresh.to_json()["measured"], ["outer_bounds", "ring_sizes"])
        return rep
    if kind == "refine":
        space = cio.space_from_json(recipe["space"])
        xset = cio.subset_from_json(space, recipe["set"])
        fresh = run_refine(space, xset, recipe["r"], recipe["s"])
        rep = DecompositionReport("refine", scales=doc.get("scales", {}))
        rep.verdicts.update(fresh["verdicts"])
        rep.check("recorded.parts", fresh["artifact"] == artifact)
        _compare(rep, doc.get("measured", {}), fresh["measured"], ["entry_bounds", "cover_bound", "predicted"])
        return rep
    if kind == "product":
        x, y = cio.space_from_json(recipe["x"]), cio.space_from_json(recipe["y"])
        fresh = run_product(x, y, recipe["r"], recipe["s"], recipe["norm"])
    elif kind == "trunc-product":
        fresh = run_trunc(recipe["factors"], recipe["factor_size"], recipe["k"], recipe["s"], recipe["truncation"])
    else:
        raise cio.FormatError(f"unknown report kind {kind!r}")
    rep = DecompositionReport(kind, scales=doc.get("scales", {}))
    rep.verdicts.update(fresh["verdicts"])
    rep.check("recorded.artifact", fresh["artifact"] == artifact)
    _compare(rep, doc.get("measured", {}), fresh["measured"], sorted(fresh["measured"]))
    return rep


def profile_instance_doc(space: FiniteMetricSpace, p: prof.Profile, scales: Sequence, parts: SubsetArray,
                         bounds: Sequence, pieces: Sequence[SubsetArray] | None = None) -> dict:
    """Self-contained JSON for a profile instance, accepted by ``verify``."""
    rep = prof.verify_profile_instance(space, p, scales, parts, bounds, pieces)
    return {
        "kind": "profile-instance",
        "space": cio.space_to_json(space),
        "profile": p.to_json(),
        "scales": [prof._out(prof._q(x)) for x in scales],
        "bounds": jsonable(list(bounds)),
        "parts": cio.array_to_json(parts),
        "pieces": [cio.array_to_json(a) for a in pieces] if pieces is not None else None,
        "measured": jsonable(rep.measured),
        "verdicts": rep.verdicts,
        "passed": rep.passed,
    }


def verify_profile_document(doc: dict) -> DecompositionReport:
    space = cio.space_from_json(doc["space"])
    p = prof.Profile.from_json(doc["profile"])
    parts = cio.array_from_json(space, doc["parts"])
    pieces = [cio.array_from_json(space, a) for a in doc["pieces"]] if doc.get("pieces") else None
    scales = [cio._parse_num(x) for x in doc["scales"]]
    bounds = [cio._parse_num(b) for b in doc["bounds"]]
    rep = prof.verify_profile_instance(space, p, scales, parts, bounds, pieces)
    if "measured" in doc:
        _compare(rep, doc["measured"], jsonable(rep.measured), sorted(rep.measured))
    return rep


def cmd_verify(args) -> int:
    doc = cio.load_json(args.report)
    if not isinstance(doc, dict):
        raise cio.FormatError("report must be a JSON object")
    try:
        rep = verify_document(doc)
    except KeyError as exc:
        raise cio.FormatError(f"report is missing {exc}") from None
    _emit({"kind": rep.kind, "verdicts": rep.verdicts, "passed": rep.passed}, args.output)
    return _finish(rep)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coarse-matrix", description="Set-matrix decompositions of finite metric spaces.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="generate and validate a space")
    sp.add_argument("--interval", type=int)
    sp.add_argument("--grid")
    sp.add_argument("--clusters", help="N:PERIOD:WIDTH cluster subspace of an interval")
    sp.add_argument("--table", help="JSON file with a distance table")
    sp.add_argument("--norm", choices=["l1", "sup"], default="l1")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_space)

    dp = sub.add_parser("decompose", help="run a construction and write a report")
    dp.add_argument("op", choices=["asdim", "perp", "refine", "product", "trunc-product"])
    dp.add_argument("--space")
    dp.add_argument("--space2", help="second factor for 'product'")
    dp.add_argument("--set", help="point indices like 0-4,30-34 (default: all)")
    dp.add_argument("--z", help="array entries separated by ';' for 'perp'")
    dp.add_argument("-r", type=float)
    dp.add_argument("-s", type=float)
    dp.add_argument("-m", type=int)
    dp.add_argument("-k", type=int)
    dp.add_argument("--norm", choices=["l1", "sup"], default="l1")
    dp.add_argument("--factors", type=int, default=4)
    dp.add_argument("--factor-size", type=int, default=5)
    dp.add_argument("--truncation", type=int, default=3)
    dp.add_argument("-o", "--output")
    dp.set_defaults(func=cmd_decompose)

    pp = sub.add_parser("profile", help="profile arithmetic and scheduling")
    pp.add_argument("op", choices=["union", "product", "pullback", "normalize", "schedule"])
    pp.add_argument("--p", required=True, help="functions separated by ';', e.g. '1;0:2,10:5'")
    pp.add_argument("--q")
    pp.add_argument("--beta", help="slope of a linear rescaling, or a step function")
    pp.add_argument("--r-seq", help="comma-separated non-decreasing scales")
    pp.add_argument("--literal", action="store_true", help="use the unrepaired recurrence")
    pp.add_argument("-o", "--output")
    pp.set_defaults(func=cmd_profile)

    ep = sub.add_parser("envelope", help="reduced vs asymptotic product envelopes (CSV)")
    ep.add_argument("--factors", type=int, default=2)
    ep.add_argument("--factor-size", type=int, default=6)
    ep.add_argument("--weights")
    ep.add_argument("-o", "--output")
    ep.set_defaults(func=cmd_envelope)

    sc = sub.add_parser("scaling", help="entry bounds across a growing family (CSV)")
    sc.add_argument("--kind", choices=["interval", "grid"], default="interval")
    sc.add_argument("--family", default="")
    sc.add_argument("-r", type=float, default=2.0)
    sc.add_argument("-m", type=int, default=1)
    sc.add_argument("--norm", choices=["l1", "sup"], default="l1")
    sc.add_argument("-o", "--output")
    sc.set_defaults(func=cmd_scaling)

    vp = sub.add_parser("verify", help="re-verify a report")
    vp.add_argument("report")
    vp.add_argument("-o", "--output")
    vp.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rng_for(args.seed)
    try:
        return args.func(args)
    except (InputError, cio.FormatError, MetricValidationError, PartitionError, CertificateError,
            DiscretenessError, prof.ScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConstructionDefect as exc:
        print(f"construction defect: {exc.condition}", file=sys.stderr)
        return EXIT_DEFECT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
