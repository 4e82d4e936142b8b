"""Wire curves, their 1D grids and the 3D <-> 1D coupling operators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from . import _kernels
from .mesh import RectilinearGrid


class CouplingError(ValueError):
    """Invalid wire geometry or coupling parameters."""


class OutOfDomainError(CouplingError):
    """A sampling point lies outside the grid's bounding box."""


@dataclass(frozen=True)
class WireCurve:
    """Parametrized wire path ``x(s)``, ``s in [0, 1]``.

    A quadratic Bezier curve is described by its end points and the middle
    control point; :meth:`bezier` builds it from a bending height instead.
    """

    kind: str
    x0: np.ndarray
    x1: np.ndarray
    control: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=float))
        if self.kind not in ("segment", "quadratic_bezier"):
            raise CouplingError(f"unknown curve kind {self.kind!r}")
        if self.kind == "quadratic_bezier":
            if self.control is None:
                raise CouplingError("a Bezier curve needs a control point")
            object.__setattr__(self, "control", np.asarray(self.control, dtype=float))
        if np.allclose(self.x0, self.x1) and self.kind == "segment":
            raise CouplingError("degenerate segment")

    @classmethod
    def segment(cls, x0, x1):
        return cls("segment", x0, x1)

    @classmethod
    def bezier(cls, x0, x1, height, up=(0.0, 1.0, 0.0)):
        """Bezier arc from ``x0`` to ``x1`` bulging by ``height`` along ``up``.

        The control point sits at ``(x0 + x1)/2 + 2*height*up`` so that the
        midpoint of the curve is displaced by exactly ``height``.
        """
        x0, x1 = np.asarray(x0, float), np.asarray(x1, float)
        up = np.asarray(up, float)
        up = up / np.linalg.norm(up)
        return cls("quadratic_bezier", x0, x1, 0.5 * (x0 + x1) + 2.0 * height * up)

    def point(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        if self.kind == "segment":
            return self.x0 * (1 - s) + self.x1 * s
        return (self.x0 * (1 - s) ** 2 + 2 * self.control * s * (1 - s)
                + self.x1 * s ** 2)

    def deriv(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        if self.kind == "segment":
            return np.broadcast_to(self.x1 - self.x0, s.shape[:-1] + (3,)).copy()
        return 2 * (1 - s) * (self.control - self.x0) + 2 * s * (self.x1 - self.control)

    def deriv2(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "segment":
            return np.zeros(s.shape + (3,))
        v = 2 * (self.x0 - 2 * self.control + self.x1)
        return np.broadcast_to(v, s.shape + (3,)).copy()

    def speed(self, s):
        return np.linalg.norm(self.deriv(s), axis=-1)

    def length(self) -> float:
        return float(arc_lengths(self, np.array([0.0, 1.0]))[0])


def arc_lengths(curve: WireCurve, s_nodes) -> np.ndarray:
    """Arc length of every element ``[s_j, s_{j+1}]``."""
    s = np.asarray(s_nodes, dtype=float)
    if curve.kind == "segment":
        return np.diff(s) * np.linalg.norm(curve.x1 - curve.x0)
    out = np.empty(s.size - 1)
    for j in range(s.size - 1):
        out[j] = quad(lambda t: float(curve.speed(t)), s[j], s[j + 1],
                      epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return out


@dataclass(frozen=True)
class Wire1DGrid:
    """Equidistant partition in ``s`` with primal and dual lengths."""

    s_nodes: np.ndarray
    element_arclen: np.ndarray
    dual_len: np.ndarray

    @property
    def n1d(self) -> int:
        return self.s_nodes.size

    @property
    def h_bar(self) -> float:
        """Step size in the parameter ``s``."""
        return float(np.max(np.diff(self.s_nodes)))


def dual_lengths(element_len) -> np.ndarray:
    e = np.asarray(element_len, dtype=float)
    d = np.zeros(e.size + 1)
    d[:-1] += 0.5 * e
    d[1:] += 0.5 * e
    return d


def make_wire_grid(curve: WireCurve, n1d: int) -> Wire1DGrid:
    if n1d < 2:
        raise CouplingError("a wire needs at least two 1D nodes")
    s = np.linspace(0.0, 1.0, n1d)
    el = arc_lengths(curve, s)
    return Wire1DGrid(s, el, dual_lengths(el))


def build_Ps(n1d: int) -> sp.csr_matrix:
    """Bidiagonal 1D difference operator ((n1d-1) x n1d)."""
    if n1d < 2:
        raise CouplingError("n1d must be at least 2")
    m = n1d - 1
    return sp.diags([-np.ones(m), np.ones(m)], [0, 1], shape=(m, n1d), format="csr")


def _check_inside(grid: RectilinearGrid, pts: np.ndarray):
    tol = grid.snap_tol
    bad = np.any((pts < grid.lower - tol) | (pts > grid.upper + tol), axis=1)
    if np.any(bad):
        raise OutOfDomainError(
            f"{int(bad.sum())} sampling point(s) outside the grid box, "
            f"first: {pts[np.argmax(bad)].tolist()}")


def trilinear_matrix(grid: RectilinearGrid, pts, weights_per_point=None) -> sp.csr_matrix:
    """Sparse matrix whose row ``q`` holds the trilinear weights of ``pts[q]``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    _check_inside(grid, pts)
    idx, w = _kernels.trilinear_weights(*grid.axes, pts)
    if weights_per_point is not None:
        w = w * np.asarray(weights_per_point)[:, None]
    rows = np.repeat(np.arange(pts.shape[0]), 8)
    keep = w.ravel() != 0.0
    m = sp.csr_matrix((w.ravel()[keep], (rows[keep], idx.ravel()[keep])),
                      shape=(pts.shape[0], grid.n_nodes))
    m.sum_duplicates()
    return m


def trilinear_row(grid: RectilinearGrid, p) -> sp.csr_matrix:
    """Trilinear (Whitney) interpolation weights of one point, 1 x N_N."""
    return trilinear_matrix(grid, np.asarray(p, dtype=float).reshape(1, 3))


def build_RN(grid: RectilinearGrid, curve: WireCurve, s_nodes) -> sp.csr_matrix:
    return trilinear_matrix(grid, curve.point(np.asarray(s_nodes, dtype=float)))


def rm_frame(curve: WireCurve, s_nodes):
    """Rotation-minimizing frames ``(t, n1, n2)`` by double reflection.

    The initial normal is the coordinate axis least aligned with the start
    tangent, projected onto the normal plane; ``n2 = t x n1``.
    """
    s = np.asarray(s_nodes, dtype=float)
    x = curve.point(s)
    d = curve.deriv(s)
    t = d / np.linalg.norm(d, axis=1)[:, None]
    e = np.eye(3)[np.argmin(np.abs(t[0]))]
    r = e - np.dot(e, t[0]) * t[0]
    r /= np.linalg.norm(r)
    n1 = np.empty_like(t)
    n1[0] = r
    for j in range(s.size - 1):
        v1 = x[j + 1] - x[j]
        c1 = v1 @ v1
        if c1 == 0.0:
            n1[j + 1] = n1[j]
            continue
        rl = n1[j] - (2.0 / c1) * (v1 @ n1[j]) * v1
        tl = t[j] - (2.0 / c1) * (v1 @ t[j]) * v1
        v2 = t[j + 1] - tl
        c2 = v2 @ v2
        rn = rl if c2 == 0.0 else rl - (2.0 / c2) * (v2 @ rl) * v2
        # remove round-off drift
        rn = rn - (rn @ t[j + 1]) * t[j + 1]
        n1[j + 1] = rn / np.linalg.norm(rn)
    n2 = np.cross(t, n1)
    return t, n1, n2


def coupling_gamma(r_cpl: float, r_bar: float, r0: float) -> float:
    if r_bar <= 0:
        raise CouplingError("wire radius must be positive")
    if r0 <= r_bar:
        raise CouplingError("reference radius r0 must exceed the wire radius")
    if r_cpl < 0:
        raise CouplingError("coupling radius must be nonnegative")
    if r_cpl >= r0:
        raise CouplingError(f"coupling radius {r_cpl} must be below r0={r0}")
    if r_cpl == 0.0:
        return 1.0
    return float(np.log(r_bar / r0) / np.log(r_cpl / r0))


def build_Pi(grid: RectilinearGrid, curve: WireCurve, s_nodes, r_cpl: float,
             r_bar: float, r_0: float, n_theta: int = 8):
    """Circle-averaging operator scaled by gamma; returns ``(Pi, gamma)``."""
    gamma = coupling_gamma(r_cpl, r_bar, r_0)
    s = np.asarray(s_nodes, dtype=float)
    if r_cpl == 0.0:
        return build_RN(grid, curve, s), gamma
    if n_theta < 1:
        raise CouplingError("n_theta must be positive")
    _, n1, n2 = rm_frame(curve, s)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    c, sn = np.cos(th), np.sin(th)
    ctr = curve.point(s)
    pts = (ctr[:, None, :] + r_cpl * (c[None, :, None] * n1[:, None, :]
                                      + sn[None, :, None] * n2[:, None, :]))
    W = trilinear_matrix(grid, pts.reshape(-1, 3))
    n = s.size
    avg = sp.csr_matrix((np.full(n * n_theta, gamma / n_theta),
                         (np.repeat(np.arange(n), n_theta), np.arange(n * n_theta))),
                        shape=(n, n * n_theta))
    return (avg @ W).tocsr(), gamma


def frenet_curvature_max(curve: WireCurve, n_samples: int = 20001) -> float:
    s = np.linspace(0.0, 1.0, n_samples)
    d1, d2 = curve.deriv(s), curve.deriv2(s)
    num = np.linalg.norm(np.cross(d1, d2), axis=1)
    return float(np.max(num / np.linalg.norm(d1, axis=1) ** 3))


@dataclass(frozen=True)
class CouplingSet:
    """Coupling operators of one wire."""

    curve: WireCurve
    wire1d: Wire1DGrid
    Ps: sp.csr_matrix
    RN: sp.csr_matrix
    X: sp.csr_matrix
    X_avg: sp.csr_matrix
    Pi: sp.csr_matrix
    gamma: float
    r_cpl: float
    meta: dict = field(default_factory=dict)

    @property
    def n1d(self) -> int:
        return self.wire1d.n1d

    def X_abs_half(self) -> sp.csr_matrix:
        """Alternative loss spreading ``|X|/2`` (kept for comparison)."""
        return (0.5 * abs(self.X)).tocsr()


def build_coupling(grid: RectilinearGrid, curve: WireCurve, n1d: int,
                   r_cpl: float, r_bar: float, r_0: float,
                   n_theta: int = 8) -> CouplingSet:
    w1 = make_wire_grid(curve, n1d)
    Ps = build_Ps(n1d)
    RN = build_RN(grid, curve, w1.s_nodes)
    X = (Ps @ RN).tocsr()
    X.eliminate_zeros()
    X_avg = (0.5 * (RN[:-1] + RN[1:])).tocsr()
    Pi, gamma = build_Pi(grid, curve, w1.s_nodes, r_cpl, r_bar, r_0, n_theta)
    return CouplingSet(curve, w1, Ps, RN, X, X_avg, Pi, gamma, float(r_cpl),
                       {"r_bar": r_bar, "r_0": r_0, "n_theta": n_theta})
