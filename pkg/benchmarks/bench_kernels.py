"""Time each kernel under both backends.

    python3 benchmarks/bench_kernels.py --sizes 400 1600 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from coarse_matrix import _kernels as K
from coarse_matrix.space import grid


def _cases(n: int, rng: np.random.Generator):
    side = int(np.sqrt(n))
    sp = grid((side, side), "l1")
    dist = np.ascontiguousarray(sp.dist)
    idx = np.flatnonzero(rng.random(len(sp)) < 0.3).astype(np.int64)
    src = np.zeros(len(sp), dtype=bool)
    src[idx[:3]] = True
    dom = rng.random(len(sp)) < 0.6
    dom |= src
    return dist, {
        "ball_mask": lambda kern: kern["ball_mask"](dist, idx, 2.0),
        "witness_labels": lambda kern: kern["witness_labels"](dist, idx, 2.0),
        "bfs_levels": lambda kern: kern["bfs_levels"](dist, src, dom, 2.0),
        "class_diameters": lambda kern: kern["class_diameters"](dist, idx, *K.NUMPY_KERNELS["witness_labels"](dist, idx, 2.0)),
        "triangle_violation": lambda kern: kern["triangle_violation"](dist),
    }


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[400, 1600])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'n':>6}{'numpy ms':>12}{'numba ms':>12}{'speedup':>9}")
    for n in args.sizes:
        dist, cases = _cases(n, rng)
        for name, call in cases.items():
            call(K.NUMBA_KERNELS)  # compile outside the timing
            a = _best(lambda: call(K.NUMPY_KERNELS), args.repeat)
            b = _best(lambda: call(K.NUMBA_KERNELS), args.repeat)
            print(f"{name:<20}{len(dist):>6}{a * 1e3:>12.2f}{b * 1e3:>12.2f}{a / b:>9.1f}")


if __name__ == "__main__":
    main()
