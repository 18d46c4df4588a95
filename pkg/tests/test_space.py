import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_matrix import io as cio
from coarse_matrix.space import (
    INF,
    Dim0Certificate,
    MetricValidationError,
    Subset,
    ball,
    chain_metric,
    components,
    components_norm,
    cross,
    dim0_certificate,
    disjoint_union,
    from_graph,
    from_table,
    grid,
    interval,
    product,
    projection,
    rescale,
)

from conftest import (
    oracle_ball,
    oracle_chain,
    oracle_components,
    oracle_components_norm,
    oracle_triangle_ok,
    radii,
    small_spaces,
    subsets,
)

I10 = interval(10)


def S(space, *pts):
    return space.subset(pts)


# --- build_space -----------------------------------------------------------


def test_interval_distances():
    assert len(I10) == 10
    assert I10.dist[2, 7] == 5
    assert I10.name == "I10"


def test_disjoint_union_is_infinite_across():
    u = disjoint_union([I10, I10])
    assert len(u) == 20
    assert u.dist[0, 10] == INF
    assert u.dist[3, 5] == 2


def test_product_l1_and_sup():
    i3 = interval(3)
    p = product(i3, i3, "l1")
    assert p.dist[p.index_of((0, 0)), p.index_of((2, 1))] == 3
    q = product(i3, i3, "sup")
    assert q.dist[q.index_of((0, 0)), q.index_of((2, 1))] == 2


def test_grid_matches_product():
    g = grid((4, 3), "l1")
    p = product(interval(4), interval(3), "l1")
    assert np.array_equal(g.dist, p.dist)


def test_bad_table_names_triple():
    with pytest.raises(MetricValidationError) as err:
        from_table([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    assert err.value.triple is not None
    assert set(err.value.triple) == {0, 1, 2}


def test_asymmetric_table_rejected():
    with pytest.raises(MetricValidationError):
        from_table([[0, 1], [2, 0]])


def test_pseudo_metric_zero_distance_allowed():
    sp = from_table([[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    assert sp.dist[0, 1] == 0


def test_graph_shortest_paths():
    g = from_graph(4, [(0, 1, 1), (1, 2, 1), (0, 2, 5)])
    assert g.dist[0, 2] == 2
    assert g.dist[0, 3] == INF


def test_dist_is_read_only():
    with pytest.raises(ValueError):
        I10.dist[0, 1] = 7


def test_rescale_checks_subadditivity():
    doubled = rescale(interval(5), lambda d: 2 * d)
    assert doubled.dist[0, 4] == 8
    with pytest.raises(MetricValidationError):
        rescale(interval(5), lambda d: d * d)


@given(small_spaces())
def test_generated_spaces_are_metrics(sp):
    assert oracle_triangle_ok(sp.dist.tolist())
    assert np.array_equal(sp.dist, sp.dist.T)
    assert (np.diag(sp.dist) == 0).all()


@given(small_spaces())
def test_json_round_trip(sp):
    assert cio.space_from_json(cio.space_to_json(sp)) == sp


# --- balls -----------------------------------------------------------------


def test_ball_examples():
    assert ball(S(I10, 3), 1.5) == S(I10, 2, 3, 4)
    assert ball(I10.empty(), 2).is_empty()
    assert ball(S(I10, 0, 9), 100) == I10.full()


def test_ball_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        ball(S(I10, 1), 0)


@given(st.data(), small_spaces(), radii)
def test_ball_matches_oracle(data, sp, r):
    a = data.draw(subsets(sp))
    assert set(ball(a, r).indices) == oracle_ball(sp, a.indices, r)


@given(st.data(), small_spaces(), radii, radii)
def test_ball_monotone(data, sp, r, s):
    a = data.draw(subsets(sp))
    b = a | data.draw(subsets(sp))
    lo, hi = sorted((r, s))
    assert ball(a, lo) <= ball(a, hi)
    assert ball(a, r) <= ball(b, r)


# --- chain metric ----------------------------------------------------------


def test_chain_metric_examples():
    assert chain_metric(I10, 1, 0, 5) == 3
    assert chain_metric(I10, 1, 4, 4) == 0
    u = disjoint_union([I10, I10])
    assert chain_metric(u, 1, 0, 10) == INF


@settings(max_examples=40)
@given(small_spaces(max_n=9), radii)
def test_chain_metric_is_pseudo_metric(sp, r):
    n = len(sp)
    d = [[chain_metric(sp, r, x, y) for y in range(n)] for x in range(n)]
    assert all(d[x][x] == 0 for x in range(n))
    assert d == [list(row) for row in zip(*d)]
    assert oracle_triangle_ok(np.array(d, dtype=float).tolist())
    assert all(d[x][y] == oracle_chain(sp, r, x, y) for x in range(n) for y in range(n))


@given(small_spaces(max_n=9), radii, radii)
def test_chain_metric_shrinks_with_scale(sp, r, s):
    lo, hi = sorted((r, s))
    for x in range(len(sp)):
        for y in range(len(sp)):
            assert chain_metric(sp, hi, x, y) <= chain_metric(sp, lo, x, y)


# --- components ------------------------------------------------------------


def test_components_examples():
    a = S(I10, 0, 1, 2, 6, 7)
    parts = components(a, 1)
    assert [set(c.indices) for c in parts.classes] == [{0, 1, 2}, {6, 7}]
    assert components_norm(a, 1) == 2
    assert len(components(I10.empty(), 1)) == 0
    assert [set(c.indices) for c in components(S(I10, 4, 5), 1).classes] == [{4, 5}]
    assert components_norm(I10.empty(), 3) == 0
    assert components_norm(I10.full(), 1) == 9


def test_witness_outside_the_set_links_points():
    # 0 and 2 share the witness 1, which is not in the set
    assert len(components(S(I10, 0, 2), 1)) == 1


def test_certificates():
    a = S(I10, 0, 1, 2, 6, 7)
    assert dim0_certificate(a, 1) == Dim0Certificate(1.0, 2.0)
    assert dim0_certificate(I10.empty(), 5) == Dim0Certificate(5.0, 0.0)
    assert dim0_certificate(I10.full(), 1) == Dim0Certificate(1.0, 9.0)
    assert dim0_certificate(a, 1).at(0.5).bound == 2
    with pytest.raises(ValueError):
        dim0_certificate(a, 1).at(2)


@given(st.data(), small_spaces(), radii)
def test_components_match_oracle(data, sp, r):
    a = data.draw(subsets(sp))
    got = [set(int(i) for i in c.indices) for c in components(a, r).classes]
    assert got == oracle_components(sp, a.indices, r)
    assert components_norm(a, r) == oracle_components_norm(sp, a.indices, r)


@given(st.data(), small_spaces(), radii)
def test_components_partition_and_separate(data, sp, r):
    a = data.draw(subsets(sp))
    parts = components(a, r)
    union = sp.empty()
    for c in parts.classes:
        assert (union & c).is_empty()
        union = union | c
    assert union == a
    for i, c in enumerate(parts.classes):
        for d in parts.classes[i + 1:]:
            assert (ball(c, r) & ball(d, r)).is_empty()


@given(st.data(), small_spaces(), radii, radii)
def test_components_norm_monotone_in_scale(data, sp, r, s):
    a = data.draw(subsets(sp))
    lo, hi = sorted((r, s))
    assert components_norm(a, lo) <= components_norm(a, hi)


# --- products of components ------------------------------------------------


@settings(max_examples=40)
@given(st.data(), st.integers(2, 5), st.integers(2, 5), st.sampled_from(["l1", "sup"]), radii)
def test_product_components_sit_in_products_of_components(data, nx, ny, norm, r):
    x, y = interval(nx), interval(ny)
    xy = product(x, y, norm)
    a = data.draw(subsets(x))
    b = data.draw(subsets(y))
    ab = cross(a, b, xy)
    comps_a = components(a, r).classes
    comps_b = components(b, r).classes
    for c in components(ab, r).classes:
        pa, pb = projection(c, 0), projection(c, 1)
        assert any(pa <= ca for ca in comps_a)
        assert any(pb <= cb for cb in comps_b)
    na, nb = components_norm(a, r), components_norm(b, r)
    bound = na + nb if norm == "l1" else max(na, nb)
    assert components_norm(ab, r) <= bound


def test_subset_index_errors():
    with pytest.raises(IndexError):
        I10.subset([10])
    with pytest.raises(ValueError):
        Subset(I10, np.ones(3, dtype=bool))


def test_infinite_norm_never_arises_within_a_summand():
    u = disjoint_union([interval(3), interval(3)])
    assert math.isfinite(components_norm(u.full(), 1))
    assert components_norm(u.full(), 1) == 2
