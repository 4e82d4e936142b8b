"""Point-location and trilinear weight kernels.

The numba versions are used when numba imports cleanly and the environment
variable ``FITWIRE_DISABLE_NUMBA`` is unset (or ``0``).  The pure numpy
versions compute identical results and serve as the fallback and as the
reference in the tests.
"""

from __future__ import annotations

import os

import numpy as np

_SNAP = 1e-12


def _numba_requested() -> bool:
    return os.environ.get("FITWIRE_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


try:  # pragma: no cover - exercised through the flag test
    if not _numba_requested():
        raise ImportError("disabled by FITWIRE_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # numba missing or disabled
    njit = None
    HAVE_NUMBA = False


def locate_numpy(axis: np.ndarray, p: np.ndarray):
    """Cell index and snapped local coordinate of each ``p`` along ``axis``."""
    n = axis.size
    i = np.searchsorted(axis, p, side="right") - 1
    i = np.clip(i, 0, n - 2)
    t = (p - axis[i]) / (axis[i + 1] - axis[i])
    t = np.where(np.abs(t) < _SNAP, 0.0, t)
    t = np.where(np.abs(t - 1.0) < _SNAP, 1.0, t)
    return i, np.clip(t, 0.0, 1.0)


def trilinear_weights_numpy(x, y, z, pts):
    """Node indices (P, 8) and trilinear weights (P, 8) of points ``pts``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    nx, ny = x.size, y.size
    i, tx = locate_numpy(x, pts[:, 0])
    j, ty = locate_numpy(y, pts[:, 1])
    k, tz = locate_numpy(z, pts[:, 2])
    idx = np.empty((pts.shape[0], 8), dtype=np.int64)
    w = np.empty((pts.shape[0], 8))
    c = 0
    for dk, wz in ((0, 1.0 - tz), (1, tz)):
        for dj, wy in ((0, 1.0 - ty), (1, ty)):
            for di, wx in ((0, 1.0 - tx), (1, tx)):
                idx[:, c] = (i + di) + nx * ((j + dj) + ny * (k + dk))
                w[:, c] = wx * wy * wz
                c += 1
    return idx, w


if HAVE_NUMBA:

    @njit(cache=True)
    def _locate1(axis, p):
        n = axis.size
        lo, hi = 0, n - 1
        # binary search for the last point <= p
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if axis[mid] <= p:
                lo = mid
            else:
                hi = mid
        i = lo
        i = min(i, n - 2)
        t = (p - axis[i]) / (axis[i + 1] - axis[i])
        if abs(t) < _SNAP:
            t = 0.0
        elif abs(t - 1.0) < _SNAP:
            t = 1.0
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        return i, t

    @njit(cache=True)
    def _trilinear_weights_nb(x, y, z, pts):
        npts = pts.shape[0]
        nx, ny = x.size, y.size
        idx = np.empty((npts, 8), dtype=np.int64)
        w = np.empty((npts, 8))
        for q in range(npts):
            i, tx = _locate1(x, pts[q, 0])
            j, ty = _locate1(y, pts[q, 1])
            k, tz = _locate1(z, pts[q, 2])
            c = 0
            for dk in range(2):
                wz = tz if dk else 1.0 - tz
                for dj in range(2):
                    wy = ty if dj else 1.0 - ty
                    for di in range(2):
                        wx = tx if di else 1.0 - tx
                        idx[q, c] = (i + di) + nx * ((j + dj) + ny * (k + dk))
                        w[q, c] = wx * wy * wz
                        c += 1
        return idx, w

    def trilinear_weights(x, y, z, pts):
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(pts, dtype=float)))
        return _trilinear_weights_nb(np.ascontiguousarray(x, dtype=float),
                                     np.ascontiguousarray(y, dtype=float),
                                     np.ascontiguousarray(z, dtype=float), pts)

else:
    trilinear_weights = trilinear_weights_numpy


BACKEND = "numba" if HAVE_NUMBA else "numpy"
