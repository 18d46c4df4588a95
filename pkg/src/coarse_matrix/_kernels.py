"""Hot loops over dense distance tables.

Every kernel exists twice: a numba ``@njit`` version and a numpy/scipy
version with identical results.  The active backend is chosen once at import
time from the ``COARSE_MATRIX_BACKEND`` environment variable (``numba`` or
``numpy``); the default is numba when it imports cleanly.

All kernels take ``dist`` as a C-contiguous float64 square table where
``inf`` marks points in different summands.  Comparisons are exact.
"""

from __future__ import annotations

import os

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_CHUNK = 512


def _canonical_labels(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel so that classes are numbered by their first occurrence."""
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse].astype(np.int64), int(order.size)


# ---------------------------------------------------------------------------
# numpy / scipy implementations
# ---------------------------------------------------------------------------


def ball_mask_numpy(dist: np.ndarray, idx: np.ndarray, r: float) -> np.ndarray:
    n = dist.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for start in range(0, idx.size, _CHUNK):
        cols = idx[start : start + _CHUNK]
        out |= (dist[:, cols] <= r).any(axis=1)
    return out


def _member_witness_graph(dist: np.ndarray, idx: np.ndarray, r: float) -> sparse.csr_matrix:
    # bipartite graph: members 0..k-1, witnesses k..k+n-1
    k, n = idx.size, dist.shape[0]
    rows, cols = [], []
    for start in range(0, k, _CHUNK):
        block = dist[idx[start : start + _CHUNK]] <= r
        rr, cc = np.nonzero(block)
        rows.append(rr + start)
        cols.append(cc + k)
    rr = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cc = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    data = np.ones(rr.size, dtype=np.int8)
    return sparse.csr_matrix((data, (rr, cc)), shape=(k + n, k + n))


def witness_labels_numpy(dist: np.ndarray, idx: np.ndarray, r: float) -> tuple[np.ndarray, int]:
    if idx.size == 0:
        return np.zeros(0, dtype=np.int64), 0
    graph = _member_witness_graph(dist, idx, r)
    _, labels = csgraph.connected_components(graph, directed=False)
    return _canonical_labels(labels[: idx.size])


def bfs_levels_numpy(dist: np.ndarray, source: np.ndarray, domain: np.ndarray, s: float) -> np.ndarray:
    n = dist.shape[0]
    level = np.full(n, -1, dtype=np.int64)
    frontier = source & domain
    level[frontier] = 0
    if not frontier.any():
        return level
    adj = sparse.csr_matrix(dist <= s, dtype=np.int32)
    seen_witness = np.zeros(n, dtype=np.bool_)
    depth = 0
    while frontier.any():
        witnesses = (adj @ frontier.astype(np.int32)) > 0
        witnesses &= ~seen_witness
        seen_witness |= witnesses
        reached = (adj @ witnesses.astype(np.int32)) > 0
        frontier = reached & domain & (level < 0)
        depth += 1
        level[frontier] = depth
    return level


def class_diameters_numpy(dist: np.ndarray, idx: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(k, dtype=np.float64)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(k + 1))
    for c in range(k):
        members = idx[order[bounds[c] : bounds[c + 1]]]
        if members.size > 1:
            out[c] = dist[np.ix_(members, members)].max()
    return out


def triangle_violation_numpy(dist: np.ndarray) -> tuple[int, int, int]:
    finite = np.isfinite(dist)
    for z in range(dist.shape[0]):
        through = dist[:, z, None] + dist[None, z, :]
        ok = finite[:, z, None] & finite[None, z, :]
        bad = ok & (dist > through)
        if bad.any():
            x, y = np.argwhere(bad)[0]
            return int(x), int(y), int(z)
    return -1, -1, -1


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def ball_mask_numba(dist, idx, r):
        n = dist.shape[0]
        out = np.zeros(n, dtype=np.bool_)
        for x in range(n):
            for p in range(idx.size):
                if dist[x, idx[p]] <= r:
                    out[x] = True
                    break
        return out

    @njit(cache=True)
    def _find(parent, a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            nxt = parent[a]
            parent[a] = root
            a = nxt
        return root

    @njit(cache=True)
    def _witness_raw(dist, idx, r):
        n = dist.shape[0]
        k = idx.size
        parent = np.arange(k)
        owner = np.full(n, -1, dtype=np.int64)
        for p in range(k):
            row = idx[p]
            for z in range(n):
                if dist[row, z] <= r:
                    q = owner[z]
                    if q < 0:
                        owner[z] = p
                    else:
                        a = _find(parent, p)
                        b = _find(parent, q)
                        if a != b:
                            if a < b:
                                parent[b] = a
                            else:
                                parent[a] = b
        raw = np.empty(k, dtype=np.int64)
        for p in range(k):
            raw[p] = _find(parent, p)
        return raw

    @njit(cache=True)
    def _bfs_levels_kernel(dist, source, domain, s):
        n = dist.shape[0]
        level = np.full(n, -1, dtype=np.int64)
        seen_witness = np.zeros(n, dtype=np.bool_)
        frontier = np.empty(n, dtype=np.int64)
        nxt = np.empty(n, dtype=np.int64)
        size = 0
        for x in range(n):
            if source[x] and domain[x]:
                level[x] = 0
                frontier[size] = x
                size += 1
        depth = 0
        while size > 0:
            depth += 1
            nsize = 0
            for f in range(size):
                x = frontier[f]
                for z in range(n):
                    if seen_witness[z] or dist[x, z] > s:
                        continue
                    seen_witness[z] = True
                    for y in range(n):
                        if level[y] < 0 and domain[y] and dist[z, y] <= s:
                            level[y] = depth
                            nxt[nsize] = y
                            nsize += 1
            for f in range(nsize):
                frontier[f] = nxt[f]
            size = nsize
        return level

    @njit(cache=True)
    def class_diameters_numba(dist, idx, labels, k):
        out = np.zeros(k, dtype=np.float64)
        m = idx.size
        for a in range(m):
            la = labels[a]
            ra = idx[a]
            for b in range(a + 1, m):
                if labels[b] == la:
                    d = dist[ra, idx[b]]
                    if d > out[la]:
                        out[la] = d
        return out

    @njit(cache=True)
    def _triangle_kernel(dist):
        n = dist.shape[0]
        for z in range(n):
            for x in range(n):
                dxz = dist[x, z]
                if not np.isfinite(dxz):
                    continue
                for y in range(n):
                    dzy = dist[z, y]
                    if np.isfinite(dzy) and dist[x, y] > dxz + dzy:
                        return x, y, z
        return -1, -1, -1

    def witness_labels_numba(dist, idx, r):
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64), 0
        return _canonical_labels(_witness_raw(dist, idx, float(r)))

    def bfs_levels_numba(dist, source, domain, s):
        return _bfs_levels_kernel(dist, source, domain, float(s))

    def triangle_violation_numba(dist):
        x, y, z = _triangle_kernel(dist)
        return int(x), int(y), int(z)


NUMPY_KERNELS = {
    "ball_mask": ball_mask_numpy,
    "witness_labels": witness_labels_numpy,
    "bfs_levels": bfs_levels_numpy,
    "class_diameters": class_diameters_numpy,
    "triangle_violation": triangle_violation_numpy,
}

if HAS_NUMBA:
    NUMBA_KERNELS = {
        "ball_mask": lambda d, i, r: ball_mask_numba(d, i, float(r)),
        "witness_labels": witness_labels_numba,
        "bfs_levels": bfs_levels_numba,
        "class_diameters": class_diameters_numba,
        "triangle_violation": triangle_violation_numba,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = NUMPY_KERNELS


def _select_backend() -> str:
    wanted = os.environ.get("COARSE_MATRIX_BACKEND", "numba").strip().lower()
    if wanted not in ("numba", "numpy"):
        raise ValueError(f"COARSE_MATRIX_BACKEND must be 'numba' or 'numpy', got {wanted!r}")
    if wanted == "numba" and not HAS_NUMBA:  # pragma: no cover
        return "numpy"
    return wanted


BACKEND = _select_backend()
KERNELS = NUMBA_KERNELS if BACKEND == "numba" else NUMPY_KERNELS

ball_mask = KERNELS["ball_mask"]
witness_labels = KERNELS["witness_labels"]
bfs_levels = KERNELS["bfs_levels"]
class_diameters = KERNELS["class_diameters"]
triangle_violation = KERNELS["triangle_violation"]
