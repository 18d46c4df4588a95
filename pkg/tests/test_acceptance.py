"""Acceptance run: criteria 1-13, one PASS/FAIL line each.

Run under pytest (each criterion is one test and the lines are repeated in
the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
Every criterion draws from its own generator seeded by ``(SEED, number)``,
and returns a JSON-able report; criterion 13 reruns 1-12 and compares the
serialized reports byte for byte.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
from collections import deque
from fractions import Fraction

import numpy as np
import pytest

from coarse_matrix import io as cio
from coarse_matrix import profiles as prof
from coarse_matrix.algebra import (
    IndexSet,
    SubsetArray,
    as_row,
    ball_matrix,
    is_cover,
    leq,
    matmul_cap,
    matmul_cross,
    to_array,
    transpose,
)
from coarse_matrix.covers import grid_bricks, interval_bricks
from coarse_matrix.decomposition import (
    asdim_matrix,
    check_perp,
    check_refinement,
    check_union_bound,
    product_split,
    refine_disjoint,
    truncated_product_decomposition,
    union_bound_sharp,
    verify_asdim_matrix,
)
from coarse_matrix.disjointness import matrix_orthogonal
from coarse_matrix.generators import (
    cell_space,
    cluster_set,
    discrete_factors,
    random_column_cover_matrix,
    random_cluster_set,
    random_cover_array,
    random_matrix,
    random_orthogonal_matrix,
    random_space,
    random_subset,
)
from coarse_matrix.products import WeightFn, asymptotic_metric, build_product_space, coarse_envelope, product_points
from coarse_matrix.report import jsonable
from coarse_matrix.space import components, components_norm, from_table, grid, interval, product

sys.path.insert(0, os.path.dirname(__file__))
from conftest import matrix_sets, oracle_matmul  # noqa: E402

SEED = 20240501
RESULTS: dict[int, str] = {}
REPORTS: dict[int, dict] = {}


def rng(n: int) -> np.random.Generator:
    return np.random.default_rng([SEED, n])


def _index(rg) -> IndexSet:
    return IndexSet.range(int(rg.integers(1, 5)))


# ---------------------------------------------------------------------------
# 1. algebra laws
# ---------------------------------------------------------------------------


def criterion_1():
    rg = rng(1)
    per_law = 200
    fails: dict[str, int] = {}

    def law(name, ok):
        fails[name] = fails.get(name, 0) + (not ok)

    for _ in range(per_law):
        sp = random_space(rg, int(rg.integers(1, 13)))
        r, s, t, u = (_index(rg) for _ in range(4))
        a, b, c = random_matrix(rg, sp, r, s), random_matrix(rg, sp, s, t), random_matrix(rg, sp, t, u)
        ab = matmul_cap(a, b)
        law("matmul_associative", matmul_cap(ab, c) == matmul_cap(a, matmul_cap(b, c)))
        law("matmul_oracle", matrix_sets(ab) == oracle_matmul(matrix_sets(a), matrix_sets(b)))
        law("transpose_reverses", transpose(ab) == matmul_cap(transpose(b), transpose(a)))
        b2 = random_matrix(rg, sp, s, t)
        union = type(b)(sp, s, t, b.masks | b2.masks)
        law("distributes_over_union",
            np.array_equal(matmul_cap(a, union).masks, ab.masks | matmul_cap(a, b2).masks))

        m = random_column_cover_matrix(rg, sp, r, s)
        cov = random_cover_array(rg, sp, len(s))
        cov = SubsetArray(sp, s, cov.masks)
        law("column_covers_compose", is_cover(to_array(matmul_cap(m, transpose(as_row(cov))))))

        rad = float(rg.choice([0.5, 1.0, 1.5, 2.0, 3.0]))
        law("ball_of_cap_product", leq(ball_matrix(ab, rad), matmul_cap(ball_matrix(a, rad), ball_matrix(b, rad))))

        x = random_space(rg, int(rg.integers(1, 5)))
        y = random_space(rg, int(rg.integers(1, 4)))
        xy = product(x, y, str(rg.choice(["l1", "sup"])))
        ma, mb = random_matrix(rg, x, r, s), random_matrix(rg, y, s, t)
        law("ball_of_cross_product",
            leq(ball_matrix(matmul_cross(ma, mb, xy), rad),
                matmul_cross(ball_matrix(ma, rad), ball_matrix(mb, rad), xy)))
        mc = random_column_cover_matrix(rg, x, r, s)
        ya = SubsetArray(y, s, random_cover_array(rg, y, len(s)).masks)
        law("cross_column_covers_compose", is_cover(to_array(matmul_cross(mc, transpose(as_row(ya)), xy))))

    ok = not any(fails.values())
    detail = f"{len(fails)} laws x {per_law} instances, failures {sum(fails.values())}"
    return ok, detail, {"instances_per_law": per_law, "failures": fails}


# ---------------------------------------------------------------------------
# 2. three orthogonality conditions agree
# ---------------------------------------------------------------------------


def criterion_2():
    rg = rng(2)
    agree = holds = 0
    total = 300
    for i in range(total):
        r = float(rg.choice([0.5, 1.0, 2.0]))
        if i % 2:
            sp = random_space(rg, int(rg.integers(2, 13)))
            mat = random_matrix(rg, sp, _index(rg), _index(rg))
        else:
            sp, blocks = cell_space(4, 2, int(rg.integers(1, 6)))
            mat = random_orthogonal_matrix(rg, sp, blocks, _index(rg), _index(rg))
        rep = matrix_orthogonal(mat, r)
        agree += rep.consistent
        holds += rep.holds
    ok = agree == total
    return ok, f"{agree}/{total} agree ({holds} orthogonal)", {"agree": agree, "orthogonal": holds, "total": total}


# ---------------------------------------------------------------------------
# 3. products of orthogonal matrices
# ---------------------------------------------------------------------------


def criterion_3():
    rg = rng(3)
    total, good = 100, 0
    for _ in range(total):
        r = float(rg.choice([1.0, 2.0]))
        sp, blocks = cell_space(4, 3, int(2 * r) + 1 + int(rg.integers(0, 3)))
        p, q, t = (IndexSet.range(int(rg.integers(1, 4))) for _ in range(3))
        m = random_orthogonal_matrix(rg, sp, blocks, p, q)
        n = random_orthogonal_matrix(rg, sp, blocks, q, t)
        assert matrix_orthogonal(m, r).holds and matrix_orthogonal(n, r).holds
        good += matrix_orthogonal(matmul_cap(m, n), r).holds
    return good == total, f"{good}/{total} products orthogonal", {"good": good, "total": total}


# ---------------------------------------------------------------------------
# 4. components against a brute-force BFS
# ---------------------------------------------------------------------------


def _bfs_components(dist: np.ndarray, members: np.ndarray, r: float) -> list[frozenset]:
    near = (dist <= r).astype(np.int32)
    adj = (near.T @ near) > 0
    left = set(int(m) for m in members)
    out = []
    for start in sorted(left):
        if start not in left:
            continue
        left.discard(start)
        cls, queue = {start}, deque([start])
        while queue:
            x = queue.popleft()
            for y in [y for y in left if adj[x, y]]:
                left.discard(y)
                cls.add(y)
                queue.append(y)
        out.append(frozenset(cls))
    return out


def criterion_4():
    rg = rng(4)
    total, good, sizes = 50, 0, []
    for _ in range(total):
        sp = random_space(rg, int(rg.integers(20, 401)))
        a = random_subset(rg, sp)
        r = float(rg.choice([0.5, 1.0, 1.5, 2.0, 3.0]))
        got = {frozenset(int(i) for i in c.indices) for c in components(a, r).classes}
        good += got == set(_bfs_components(sp.dist, a.indices, r))
        sizes.append(len(sp))
    return good == total, f"{good}/{total} partitions equal (sizes {min(sizes)}..{max(sizes)})", \
        {"good": good, "total": total, "sizes": sizes}


# ---------------------------------------------------------------------------
# 5. union bound
# ---------------------------------------------------------------------------


def criterion_5():
    rg = rng(5)
    target, seen = 200, 0
    violations, near, sharp_ok = [], 0, True
    while seen < target:
        sp = random_space(rg, int(rg.integers(4, 21)))
        a, b = random_subset(rg, sp), random_subset(rg, sp)
        r = float(rg.choice([0.5, 1.0, 1.5, 2.0]))
        m = components_norm(a, r)
        s = components_norm(b, m + 2 * r)
        if not (math.isfinite(m) and math.isfinite(s)):
            continue
        chk = check_union_bound(a, b, r, m, s)
        assert chk.hypothesis
        seen += 1
        if not math.isfinite(chk.measured):
            violations.append({"space": sp.name, "r": r, "M": m, "s": s, "measured": "inf"})
            continue
        if chk.measured > chk.bound:
            violations.append({"space": sp.name, "r": r, "M": m, "s": s, "measured": chk.measured, "bound": chk.bound,
                               "a": [int(i) for i in a.indices], "b": [int(i) for i in b.indices]})
        elif chk.bound - chk.measured <= 2 * r:
            near += 1
        sharp_ok &= chk.measured <= union_bound_sharp(m, s, r)
    ok = not violations
    detail = f"{len(violations)}/{target} instances exceed M+s+2r; {near} within 2r of it; 2M+s+4r held: {sharp_ok}"
    return ok, detail, {"violations": violations, "near_bound": near, "sharp_bound_held": sharp_ok}


# ---------------------------------------------------------------------------
# 6. perp postconditions and outer-entry uniformity
# ---------------------------------------------------------------------------


def _periodic_array(sp, period, width, offsets):
    return SubsetArray(sp, IndexSet.range(len(offsets)),
                       np.stack([cluster_set(sp, period, width, o).mask for o in offsets]))


def criterion_6():
    rg = rng(6)
    passed, instances = 0, 0
    for _ in range(10):
        n = int(rg.integers(30, 121))
        sp = interval(n)
        m = int(rg.integers(1, 4))
        s = float(rg.choice([1.0, 2.0]))
        y = cluster_set(sp, int(rg.integers(15, 40)), int(rg.integers(1, 6)), int(rg.integers(0, 10)))
        z = _periodic_array(sp, int(rg.integers(10, 30)), 3, [int(o) for o in rg.integers(0, 20, size=m + 1)])
        passed += check_perp(y, s, m, z, s).passed
        instances += 1
    for _ in range(10):
        w = int(rg.integers(6, 16))
        sp = grid((w, w), str(rg.choice(["l1", "sup"])))
        m = int(rg.integers(1, 3))
        y = random_subset(rg, sp, 0.15)
        z = SubsetArray(sp, IndexSet.range(m + 1), np.stack([random_subset(rg, sp, 0.2).mask for _ in range(m + 1)]))
        passed += check_perp(y, 1.0, m, z, 1.0).passed
        instances += 1

    bounds = {}
    for n in (61, 121, 241):
        sp = interval(n)
        y = cluster_set(sp, 30, 5)
        z = _periodic_array(sp, 30, 3, [10, 20])
        rep = check_perp(y, 1.0, 1, z, 1.0)
        passed += rep.passed
        instances += 1
        bounds[n] = rep.measured["outer_bounds"]
    uniform = len({tuple(b) for b in bounds.values()}) == 1
    ok = passed == instances and uniform
    detail = f"{passed}/{instances} perp checks pass; outer bounds over N=61,121,241: " + \
        ", ".join(f"{n}:{b}" for n, b in bounds.items())
    return ok, detail, {"passed": passed, "instances": instances, "outer_bounds": bounds}


# ---------------------------------------------------------------------------
# 7. asdim matrices on boxes
# ---------------------------------------------------------------------------


def criterion_7():
    groups = []
    for m in (1, 2, 3):
        groups.append(("Z1", m, [(n, interval(n)) for n in (64, 128, 256)], interval_bricks))
    for m in (1, 2):
        groups.append(("Z2", m, [(n, grid((n, n), "l1")) for n in (32, 64)], grid_bricks))
    all_verify, all_uniform = True, True
    summary, data = [], {}
    for name, m, spaces, bricks in groups:
        seen = {}
        for n, sp in spaces:
            aug = asdim_matrix(bricks(sp, 2, m), 2, m)
            all_verify &= verify_asdim_matrix(aug, 2).passed
            seen[n] = {k: v for k, v in aug.entry_bounds().items()}
        uniform = len({tuple(sorted(b.items())) for b in seen.values()}) == 1
        all_uniform &= uniform
        summary.append(f"{name} m={m} {'uniform' if uniform else 'varies'}")
        data[f"{name}_m{m}"] = seen
    ok = all_verify and all_uniform
    detail = f"verify {'all pass' if all_verify else 'FAILS'}; " + "; ".join(summary)
    return ok, detail, jsonable(data)


# ---------------------------------------------------------------------------
# 8. disjoint refinement
# ---------------------------------------------------------------------------


def _pairwise_far(parts: SubsetArray, r: float) -> bool:
    """Second route to scale-r-disjointness: no common witness within r of both entries."""
    dist = parts.space.dist
    near = [(dist[:, e.indices] <= r).any(axis=1) for e in parts.entries()]
    return all(not (near[i] & near[j]).any() for i in range(len(near)) for j in range(i + 1, len(near)))


def criterion_8():
    rg = rng(8)
    total, good, worst = 20, 0, []
    for _ in range(total):
        r = float(rg.choice([1.0, 2.0]))
        s = float(rg.choice([3.0, 5.0, 8.0]))
        _, x = random_cluster_set(rg, int(rg.integers(60, 200)), int(rg.integers(3, 12)))
        ref = refine_disjoint(x, r, s)
        rep = check_refinement(x, ref)
        bounds = rep.measured["entry_bounds"]
        fine = rep.passed and _pairwise_far(ref.parts, r) and all(b <= ref.predicted for b in bounds)
        good += fine
        worst.append([max(bounds, default=0.0), ref.predicted])
    return good == total, f"{good}/{total} refinements disjoint and within prediction", \
        {"good": good, "total": total, "max_vs_predicted": worst}


# ---------------------------------------------------------------------------
# 9. products and truncated products
# ---------------------------------------------------------------------------


def _clusters(n: int, period: int, width: int):
    idx = np.array([i for i in range(n) if i % period < width])
    base = interval(n)
    return from_table(base.dist[np.ix_(idx, idx)], labels=[int(i) for i in idx], name=f"C{n}")


def criterion_9():
    r, s = 2.0, 8.0
    splits = {}
    split_ok = True
    for n in (64, 128):
        x, y = interval(n), _clusters(n, 16, 2)
        ref = refine_disjoint(y.full(), r, s)
        p = len(ref.parts)
        mx = asdim_matrix(interval_bricks(x, r, p), r, p)
        ps = product_split(mx, ref.parts, product(x, y), r, s)
        split_ok &= ps.report.passed
        splits[n] = ps.report.measured["z0_bound"]
    z0 = {}
    trunc_ok = True
    factors = discrete_factors(4, 5)
    for t in (2, 3, 4):
        tp = truncated_product_decomposition(factors, 2, s, t)
        trunc_ok &= tp.report.passed
        z0[t] = tp.report.measured["z0_bound"]
    constant = len(set(z0.values())) == 1
    ok = split_ok and trunc_ok and constant
    detail = (f"product_split {'pass' if split_ok else 'FAIL'} (z0 {splits}); truncated "
              f"{'pass' if trunc_ok else 'FAIL'}; Z0 bound by truncation {z0}")
    return ok, detail, jsonable({"split_z0": splits, "trunc_z0": z0})


# ---------------------------------------------------------------------------
# 10. profile arithmetic
# ---------------------------------------------------------------------------


def criterion_10():
    alpha = prof.ProfileFn.steps([(0, 2), (10, 5)])
    got = {
        "union": prof.union_profile(prof.Profile.of(1, 2), prof.Profile.of(1, 3)),
        "product": prof.product_profile(prof.Profile.of(1, 2), prof.Profile.of(1, 3)),
        "normalize": prof.normalize(prof.Profile.of(3, alpha)),
    }
    want = {
        "union": prof.Profile.of(2, 3),
        "product": prof.Profile.of(2, 11),
        "normalize": prof.Profile.of(1, 2, alpha),
    }
    ok = got == want
    return ok, ", ".join(f"{k} {'ok' if got[k] == want[k] else 'WRONG'}" for k in want), \
        {k: v.to_json() for k, v in got.items()}


# ---------------------------------------------------------------------------
# 11. scheduler
# ---------------------------------------------------------------------------


def _random_profile(rg) -> prof.Profile:
    fns = [prof.ProfileFn.const(int(rg.integers(1, 4)))]
    for _ in range(int(rg.integers(0, 4))):
        steps = int(rg.integers(1, 4))
        ts = sorted(set(int(t) for t in rg.integers(1, 30, size=steps - 1)))
        vs = sorted(int(v) for v in rg.integers(0, 5, size=len(ts) + 1))
        fns.append(prof.ProfileFn.steps(list(zip([0] + ts, vs))))
    return prof.Profile(tuple(fns))


def criterion_11():
    rg = rng(11)
    total, good = 100, 0
    for _ in range(total):
        p = _random_profile(rg)
        rs = sorted(Fraction(int(x), int(rg.integers(1, 3))) for x in rg.integers(1, 40, size=80))
        sched = prof.apc_schedule(p, rs)
        good += sched.violations(rs) == []
    ex = prof.apc_schedule(prof.Profile.of(1, 2), [1, 2, 3, 4, 5])
    worked = (ex.c, ex.p, ex.t) == ((1, 2), (1, 3), (1, 3))
    ok = good == total and worked
    return ok, f"{good}/{total} schedules cover their slots; worked example c={list(ex.c)} p={list(ex.p)} t={[int(x) for x in ex.t]}", \
        {"good": good, "total": total, "worked": jsonable([list(ex.c), list(ex.p), list(ex.t)])}


# ---------------------------------------------------------------------------
# 12. product-metric envelopes
# ---------------------------------------------------------------------------


def criterion_12():
    factors = [interval(6), interval(6)]
    pts = product_points(factors, 100)
    finite, below, envs = True, True, {}
    for ws in [(1, 1), (1, 2), (2, 3), (1.5, 4)]:
        w = WeightFn(ws)
        red = build_product_space(factors, w, "reduced")
        asym = build_product_space(factors, w, "asymptotic")
        env = coarse_envelope(red, asym)
        finite &= env.finite()
        below &= bool((asym.dist <= red.dist).all())
        # pointwise route, independent of the tables
        below &= all(asymptotic_metric(factors, w, u, v) <= red.dist[i, j]
                     for i, u in enumerate(pts) for j, v in enumerate(pts))
        envs[str(ws)] = [max(env.forward), max(env.backward)]
    ok = finite and below
    return ok, f"envelopes finite: {finite}; asymptotic <= reduced: {below}", {"envelope_max": envs}


# ---------------------------------------------------------------------------
# 13. determinism
# ---------------------------------------------------------------------------

CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}


def _serialize(n: int, report: dict) -> str:
    return cio.dumps(jsonable({"criterion": n, "report": report}))


def dump_reports() -> str:
    return "".join(_serialize(n, CRITERIA[n]()[2]) for n in sorted(CRITERIA))


def _fresh_dump() -> str:
    out = subprocess.run([sys.executable, __file__, "--dump"], capture_output=True, text=True, check=True)
    return out.stdout


def _cli_report_bytes() -> bytes:
    code = ("from coarse_matrix import cli, io as cio; from coarse_matrix.space import interval;"
            "import sys; sys.stdout.write(cio.dumps(cli.run_asdim(interval(128), 2, 2)))")
    return subprocess.run([sys.executable, "-c", code], capture_output=True, check=True).stdout


def criterion_13():
    a, b = _fresh_dump(), _fresh_dump()
    # reports already produced in this process must match the fresh runs too
    in_process = all(_serialize(n, REPORTS[n]) in a for n in REPORTS)
    cli_same = _cli_report_bytes() == _cli_report_bytes()
    ok = a == b and in_process and cli_same
    detail = (f"two fresh runs of criteria 1-12 byte-identical: {a == b} ({len(a)} bytes); "
              f"matches this run: {in_process} ({len(REPORTS)} reports); CLI report identical: {cli_same}")
    return ok, detail, {"bytes": len(a), "fresh_identical": a == b, "in_process": in_process, "cli": cli_same}


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def run_criterion(n: int) -> tuple[bool, str]:
    if n == 13:
        ok, detail, _ = criterion_13()
    else:
        ok, detail, report = CRITERIA[n]()
        REPORTS[n] = report
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    return ok, detail


ALL = sorted(CRITERIA) + [13]


@pytest.mark.parametrize("n", ALL)
def test_criterion(n):
    ok, detail = run_criterion(n)
    assert ok, detail


if __name__ == "__main__":
    if sys.argv[1:] == ["--dump"]:
        sys.stdout.write(dump_reports())
        sys.exit(0)
    outcomes = [run_criterion(n)[0] for n in ALL]
    sys.exit(0 if all(outcomes) else 1)
