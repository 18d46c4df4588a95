import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_matrix import _kernels as K

from conftest import oracle_ball, radii, small_spaces, subsets

pytestmark = pytest.mark.skipif(not K.HAS_NUMBA, reason="numba not importable")

NP, NB = K.NUMPY_KERNELS, K.NUMBA_KERNELS


def _idx(sub):
    return np.asarray(sub.indices, dtype=np.int64)


@given(st.data(), small_spaces(), radii)
def test_ball_mask_backends_agree(data, sp, r):
    idx = _idx(data.draw(subsets(sp)))
    a = NP["ball_mask"](sp.dist, idx, r)
    b = NB["ball_mask"](sp.dist, idx, r)
    assert np.array_equal(a, b)
    assert set(np.flatnonzero(a)) == oracle_ball(sp, idx, r)


@given(st.data(), small_spaces(), radii)
def test_witness_labels_backends_agree(data, sp, r):
    idx = _idx(data.draw(subsets(sp)))
    la, ka = NP["witness_labels"](sp.dist, idx, r)
    lb, kb = NB["witness_labels"](sp.dist, idx, r)
    assert ka == kb
    assert np.array_equal(la, lb)


@given(st.data(), small_spaces(), radii)
def test_bfs_levels_backends_agree(data, sp, s):
    src = data.draw(subsets(sp)).mask
    dom = data.draw(subsets(sp)).mask
    assert np.array_equal(NP["bfs_levels"](sp.dist, src, dom, s),
                          NB["bfs_levels"](sp.dist, src, dom, s))


@given(st.data(), small_spaces(), radii)
def test_class_diameters_backends_agree(data, sp, r):
    idx = _idx(data.draw(subsets(sp)))
    labels, k = NP["witness_labels"](sp.dist, idx, r)
    assert np.array_equal(NP["class_diameters"](sp.dist, idx, labels, k),
                          NB["class_diameters"](sp.dist, idx, labels, k))


@settings(max_examples=60)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_triangle_violation_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 6, size=(n, n)).astype(float)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0)
    d = np.ascontiguousarray(d)
    assert NP["triangle_violation"](d) == NB["triangle_violation"](d)


def test_triangle_violation_example():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    for kern in (NP, NB):
        assert kern["triangle_violation"](d) == (0, 2, 1)
        assert kern["triangle_violation"](np.minimum(d, 2)) == (-1, -1, -1)


def test_empty_inputs():
    d = np.zeros((3, 3))
    none = np.zeros(0, dtype=np.int64)
    for kern in (NP, NB):
        assert not kern["ball_mask"](d, none, 1).any()
        labels, k = kern["witness_labels"](d, none, 1)
        assert k == 0 and labels.size == 0


def _backend_in_subprocess(value):
    env = dict(os.environ, COARSE_MATRIX_BACKEND=value)
    return subprocess.run(
        [sys.executable, "-c", "from coarse_matrix import _kernels; print(_kernels.BACKEND)"],
        env=env, capture_output=True, text=True,
    )


@pytest.mark.parametrize("value", ["numpy", "numba", " NumPy "])
def test_backend_env_var_is_honoured(value):
    out = _backend_in_subprocess(value)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == value.strip().lower()


def test_bad_backend_is_rejected():
    out = _backend_in_subprocess("fortran")
    assert out.returncode != 0
    assert "COARSE_MATRIX_BACKEND" in out.stderr
