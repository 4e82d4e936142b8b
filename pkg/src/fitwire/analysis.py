"""Discrete norms, error measures, closed-form reference solutions and
convergence-order fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mesh import RectilinearGrid, dual_measures


class AnalysisError(ValueError):
    pass


# ---- norms -------------------------------------------------------------------

def norm_1d_l2(u_bar, dual_len) -> float:
    u = np.asarray(u_bar, dtype=float)
    return float(np.sqrt(np.sum(np.asarray(dual_len) * u * u)))


def norm_1d_h1semi(u_bar, Ps, elem_len) -> float:
    d = Ps @ np.asarray(u_bar, dtype=float)
    return float(np.sqrt(np.sum(d * d / np.asarray(elem_len))))


def norm_3d_l2(u, weights, mask=None) -> float:
    u = np.asarray(u, dtype=float)
    w = np.asarray(weights, dtype=float)
    if mask is not None:
        u, w = u[mask], w[mask]
    return float(np.sqrt(np.sum(w * u * u)))


def omega_dual_volume(grid: RectilinearGrid, lo, hi) -> np.ndarray:
    """Dual volumes clipped to the box ``[lo, hi]`` (zero outside).

    The box faces should be grid planes; then each node's share is the
    product of its clipped half-interval sums.
    """
    ws = []
    for d, a in enumerate(grid.axes):
        h = np.diff(a)
        inside = ((a[:-1] >= lo[d] - grid.snap_tol) & (a[1:] <= hi[d] + grid.snap_tol))
        hh = np.where(inside, 0.5 * h, 0.0)
        w = np.zeros(a.size)
        w[:-1] += hh
        w[1:] += hh
        ws.append(w)
    wx, wy, wz = ws
    return (wz[:, None, None] * wy[None, :, None] * wx[None, None, :]).ravel()


@dataclass
class NormWeights:
    """Diagonal weights of the discrete norms."""

    D_Vtilde: np.ndarray
    D_S_bar: np.ndarray | None = None
    D_Stilde_bar: np.ndarray | None = None

    @classmethod
    def build(cls, grid, omega=None, wire1d=None):
        if omega is None:
            V = dual_measures(grid).dual_volume
        else:
            V = omega_dual_volume(grid, *omega)
        if wire1d is None:
            return cls(V)
        return cls(V, wire1d.element_arclen, wire1d.dual_len)


# ---- error measures ---------------------------------------------------------------

def _ratio(num, den):
    if not den > 0:
        raise AnalysisError("reference norm is zero; relative error undefined")
    return float(num / den)


def error_eps(u_h, u_exact, kind: str, weights: NormWeights, Ps=None) -> float:
    """Relative error against exact samples on the same grid.

    ``kind`` is ``"L2_1D"``, ``"H1_1D"`` or ``"L2_3D"``.
    """
    e = np.asarray(u_h, float) - np.asarray(u_exact, float)
    if kind == "L2_1D":
        return _ratio(norm_1d_l2(e, weights.D_Stilde_bar),
                      norm_1d_l2(u_exact, weights.D_Stilde_bar))
    if kind == "H1_1D":
        return _ratio(norm_1d_h1semi(e, Ps, weights.D_S_bar),
                      norm_1d_h1semi(u_exact, Ps, weights.D_S_bar))
    if kind == "L2_3D":
        return _ratio(norm_3d_l2(e, weights.D_Vtilde), norm_3d_l2(u_exact, weights.D_Vtilde))
    raise AnalysisError(f"unknown error kind {kind!r}")


def error_delta(u_h, exact_norm: float, kind: str, weights: NormWeights, Ps=None) -> float:
    """Relative difference between the discrete norm and a continuous norm."""
    if kind == "L2_1D":
        n = norm_1d_l2(u_h, weights.D_Stilde_bar)
    elif kind == "H1_1D":
        n = norm_1d_h1semi(u_h, Ps, weights.D_S_bar)
    elif kind == "L2_3D":
        n = norm_3d_l2(u_h, weights.D_Vtilde)
    else:
        raise AnalysisError(f"unknown error kind {kind!r}")
    return _ratio(abs(n - exact_norm), exact_norm)


def error_Delta(u_h, u_ref, kind: str, weights: NormWeights, Ps=None) -> float:
    """Like :func:`error_delta` with the discrete norm of a reference field
    (already transferred to the coarse grid) in place of the exact norm."""
    if kind == "L2_1D":
        ref = norm_1d_l2(u_ref, weights.D_Stilde_bar)
    elif kind == "H1_1D":
        ref = norm_1d_h1semi(u_ref, Ps, weights.D_S_bar)
    elif kind == "L2_3D":
        ref = norm_3d_l2(u_ref, weights.D_Vtilde)
    else:
        raise AnalysisError(f"unknown error kind {kind!r}")
    return error_delta(u_h, ref, kind, weights, Ps)


def interpolate_nodal(grid: RectilinearGrid, u, points) -> np.ndarray:
    """Trilinear interpolation of a nodal field at arbitrary points."""
    idx, w = _kernels.trilinear_weights(*grid.axes, np.atleast_2d(points))
    return np.sum(np.asarray(u)[idx] * w, axis=1)


def transfer_to_grid(fine: RectilinearGrid, u_fine, coarse: RectilinearGrid) -> np.ndarray:
    return interpolate_nodal(fine, u_fine, coarse.node_coords)


def interpolate_1d(s_fine, u_fine, s_coarse) -> np.ndarray:
    return np.interp(s_coarse, s_fine, u_fine)


# ---- closed forms ---------------------------------------------------------------

def analytic_log2d(r, I0_prime: float, sigma: float, r0: float):
    """Line-source potential ``-(I'/(2 pi sigma)) log(r/r0)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise AnalysisError("the line-source potential is singular at r = 0")
    return -I0_prime / (2 * np.pi * sigma) * np.log(r / r0)


def analytic_rint(sigma: float, r_bar: float, r0: float) -> float:
    """Resistance per unit length ``log(r0/r_bar)/(2 pi sigma)``."""
    return float(np.log(r0 / r_bar) / (2 * np.pi * sigma))


def analytic_straightwire(r, z, I0_prime, sigma, r0, r_bar, d):
    """3D potential and 1D potential of the straight wire with ``I'(z) = I0' z / d``."""
    z = np.asarray(z, dtype=float)
    Iz = I0_prime * z / d
    phi = Iz * analytic_log2d(r, 1.0, sigma, r0)
    phibar = -Iz / (2 * np.pi * sigma) * np.log(r_bar / r0)
    return phi, phibar


# ---- convergence orders ----------------------------------------------------------

@dataclass
class ConvergenceRecord:
    measure: str
    h: list = field(default_factory=list)
    err: list = field(default_factory=list)

    def add(self, h, err):
        self.h.append(float(h))
        self.err.append(float(err))

    @property
    def order(self) -> float:
        return fit_order(self.h, self.err)[0]


def fit_order(h, err):
    """Least-squares slope of ``log err`` over ``log h`` and pairwise orders."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(err, dtype=float)
    if h.size != e.size or h.size < 3:
        raise AnalysisError("need at least three matching (h, err) pairs")
    if np.any(h <= 0) or np.any(e <= 0):
        raise AnalysisError("step sizes and errors must be positive")
    lh, le = np.log(h), np.log(e)
    slope = float(np.polyfit(lh, le, 1)[0])
    local = np.diff(le) / np.diff(lh)
    return slope, local
