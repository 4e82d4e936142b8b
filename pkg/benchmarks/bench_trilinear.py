"""Compare the numba and numpy trilinear-weight kernels.

    python3 benchmarks/bench_trilinear.py [n_points] [repeats]

The numba kernel is compiled once before timing.  Both kernels must return
identical indices and weights; the script exits nonzero otherwise.
"""

import sys
import time

import numpy as np

from fitwire import _kernels
from fitwire.mesh import graded_axis


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(n_points=200_000, repeats=5):
    ax = graded_axis(0.0, 1.0, 0.5, 60, 0.5)
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.0, 1.0, size=(n_points, 3))
    args = (ax, ax, ax, pts)

    t_np = best_of(lambda: _kernels.trilinear_weights_numpy(*args), repeats)
    print(f"numpy : {t_np * 1e3:9.2f} ms  ({n_points} points, {ax.size}^3 grid)")
    if not _kernels.HAVE_NUMBA:
        print("numba : unavailable or disabled (FITWIRE_DISABLE_NUMBA)")
        return 0
    _kernels.trilinear_weights(*(a[:4] if a.ndim == 2 else a for a in args))  # compile
    t_nb = best_of(lambda: _kernels.trilinear_weights(*args), repeats)
    print(f"numba : {t_nb * 1e3:9.2f} ms  speedup {t_np / t_nb:.1f}x")

    i1, w1 = _kernels.trilinear_weights_numpy(*args)
    i2, w2 = _kernels.trilinear_weights(*args)
    same = np.array_equal(i1, i2) and np.array_equal(w1, w2)
    print("results identical:", same)
    return 0 if same else 1


if __name__ == "__main__":
    a = [int(x) for x in sys.argv[1:3]]
    sys.exit(main(*a))
