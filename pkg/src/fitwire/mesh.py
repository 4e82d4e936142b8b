"""Tensor-product rectilinear grids, graded axes, the incidence operator G
and the measures of the staggered dual grid.

Ordering conventions (used everywhere in the package):

* node ``(i, j, k)`` has index ``i + nx * (j + ny * k)`` (x fastest),
* edges are numbered direction by direction: all x-edges, then all y-edges,
  then all z-edges, each block again lexicographic with x fastest,
* cells ``(i, j, k)`` use ``i + (nx-1) * (j + (ny-1) * k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

SNAP_RTOL = 1e-12


class GridError(ValueError):
    """Raised for invalid axes, gradings or refinement requests."""


def check_axis(coords) -> np.ndarray:
    """Return ``coords`` as a read-only float array after validating it."""
    a = np.array(coords, dtype=float).ravel()
    if a.size < 2:
        raise GridError("an axis needs at least two points")
    if not np.all(np.isfinite(a)):
        raise GridError("axis coordinates must be finite")
    if np.any(np.diff(a) <= 0.0):
        raise GridError("axis coordinates must be strictly increasing")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Axis1D:
    """Ordered 1D point set along one coordinate direction."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", check_axis(self.coords))

    def __len__(self):
        return self.coords.size

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.coords)

    @property
    def length(self) -> float:
        return float(self.coords[-1] - self.coords[0])


def merge_points(coords, points, tol: float | None = None) -> np.ndarray:
    """Insert ``points`` into a sorted axis, dropping near-duplicates.

    Points closer than ``tol`` to an existing coordinate (or to each other)
    are merged into the first one seen; existing coordinates always win.
    The default tolerance is ``SNAP_RTOL`` times the axis extent.
    """
    base = np.asarray(coords, dtype=float).ravel()
    pts = np.asarray(points, dtype=float).ravel()
    allpts = np.concatenate([base, pts])
    if tol is None:
        tol = SNAP_RTOL * max(float(np.ptp(allpts)), 1e-300)
    # existing points first so that a stable sort keeps them on ties
    keep_first = np.concatenate([np.zeros(base.size), np.ones(pts.size)])
    order = np.lexsort((keep_first, allpts))
    srt = allpts[order]
    out = [srt[0]]
    for v in srt[1:]:
        if v - out[-1] > tol:
            out.append(v)
    return check_axis(out)


class RectilinearGrid:
    """Primal tensor-product grid built from three axes.

    Instances are treated as immutable; derived arrays are computed lazily
    and cached.
    """

    def __init__(self, x, y, z):
        self.axes = tuple(check_axis(a) for a in (x, y, z))
        self.shape = tuple(a.size for a in self.axes)  # (nx, ny, nz)

    # ---- sizes ------------------------------------------------------------
    @property
    def nx(self):
        return self.shape[0]

    @property
    def ny(self):
        return self.shape[1]

    @property
    def nz(self):
        return self.shape[2]

    @property
    def n_nodes(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    @property
    def edge_counts(self) -> tuple[int, int, int]:
        nx, ny, nz = self.shape
        return ((nx - 1) * ny * nz, nx * (ny - 1) * nz, nx * ny * (nz - 1))

    @property
    def n_edges(self) -> int:
        return sum(self.edge_counts)

    @property
    def n_facets(self) -> int:
        nx, ny, nz = self.shape
        return (nx * (ny - 1) * (nz - 1) + (nx - 1) * ny * (nz - 1)
                + (nx - 1) * (ny - 1) * nz)

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.shape
        return (nx - 1) * (ny - 1) * (nz - 1)

    @property
    def cell_shape(self) -> tuple[int, int, int]:
        return tuple(n - 1 for n in self.shape)

    # ---- geometry ---------------------------------------------------------
    @property
    def spacings(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.diff(a) for a in self.axes)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a[0] for a in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([a[-1] for a in self.axes])

    @property
    def extent(self) -> float:
        """Largest side length of the bounding box."""
        return float(np.max(self.upper - self.lower))

    @property
    def snap_tol(self) -> float:
        return SNAP_RTOL * self.extent

    def node_index(self, i, j, k):
        nx, ny, _ = self.shape
        return np.asarray(i) + nx * (np.asarray(j) + ny * np.asarray(k))

    def node_ijk(self, idx):
        nx, ny, _ = self.shape
        idx = np.asarray(idx)
        return idx % nx, (idx // nx) % ny, idx // (nx * ny)

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(N_N, 3) array of node positions."""
        x, y, z = self.axes
        Z, Y, X = np.meshgrid(z, y, x, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        pts.setflags(write=False)
        return pts

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Primal edge lengths |L_l| in edge order."""
        hx, hy, hz = self.spacings
        nx, ny, nz = self.shape
        lx = np.broadcast_to(hx[None, None, :], (nz, ny, nx - 1)).ravel()
        ly = np.broadcast_to(hy[None, :, None], (nz, ny - 1, nx)).ravel()
        lz = np.broadcast_to(hz[:, None, None], (nz - 1, ny, nx)).ravel()
        out = np.concatenate([lx, ly, lz])
        out.setflags(write=False)
        return out

    def edge_direction_slices(self) -> tuple[slice, slice, slice]:
        cx, cy, cz = self.edge_counts
        return slice(0, cx), slice(cx, cx + cy), slice(cx + cy, cx + cy + cz)

    def mean_edge_length(self, directions=(0, 1, 2)) -> float:
        """Arithmetic mean over all primal edges of the given directions."""
        sl = self.edge_direction_slices()
        lens = np.concatenate([self.edge_lengths[sl[d]] for d in directions])
        return float(lens.mean())

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        nx, ny, nz = self.shape
        m = np.zeros((nz, ny, nx), dtype=bool)
        m[0], m[-1] = True, True
        m[:, 0], m[:, -1] = True, True
        m[:, :, 0], m[:, :, -1] = True, True
        m = m.ravel()
        m.setflags(write=False)
        return m

    def box_node_mask(self, lo, hi, tol=None) -> np.ndarray:
        """Nodes inside the closed box ``[lo, hi]``."""
        tol = self.snap_tol if tol is None else tol
        p = self.node_coords
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        return np.all((p >= lo - tol) & (p <= hi + tol), axis=1)

    def box_cell_mask(self, lo, hi, tol=None) -> np.ndarray:
        """Cells whose centre lies inside the box ``[lo, hi]``."""
        tol = self.snap_tol if tol is None else tol
        c = [0.5 * (a[1:] + a[:-1]) for a in self.axes]
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        inside = [(c[d] >= lo[d] - tol) & (c[d] <= hi[d] + tol) for d in range(3)]
        return (inside[2][:, None, None] & inside[1][None, :, None]
                & inside[0][None, None, :]).ravel()

    def cell_nodes(self, cells) -> np.ndarray:
        """(n, 8) node indices of the given cells."""
        nx, ny, _ = self.shape
        cx, cy, _ = self.cell_shape
        cells = np.asarray(cells)
        i, j, k = cells % cx, (cells // cx) % cy, cells // (cx * cy)
        out = []
        for dk in (0, 1):
            for dj in (0, 1):
                for di in (0, 1):
                    out.append(self.node_index(i + di, j + dj, k + dk))
        return np.stack(out, axis=1)

    def dump(self) -> str:
        """Plain-text description: one line of coordinates per axis."""
        lines = []
        for name, a in zip("xyz", self.axes):
            lines.append(name + " " + " ".join(repr(float(v)) for v in a))
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"RectilinearGrid(shape={self.shape})"


def build_gradient(grid: RectilinearGrid) -> sp.csr_matrix:
    """Primal node-to-edge incidence matrix G (N_E x N_N)."""
    nx, ny, nz = grid.shape
    idx = np.arange(grid.n_nodes).reshape(nz, ny, nx)
    starts = [idx[:, :, :-1], idx[:, :-1, :], idx[:-1, :, :]]
    ends = [idx[:, :, 1:], idx[:, 1:, :], idx[1:, :, :]]
    s = np.concatenate([a.ravel() for a in starts])
    e = np.concatenate([a.ravel() for a in ends])
    ne = s.size
    rows = np.repeat(np.arange(ne), 2)
    cols = np.column_stack([s, e]).ravel()
    vals = np.tile([-1.0, 1.0], ne)
    return sp.csr_matrix((vals, (rows, cols)), shape=(ne, grid.n_nodes))


def grade_layers(b: float, N: int, mu: float) -> np.ndarray:
    """Layer radii ``r_i = b (i/N)^(1/mu)`` for ``i = 0..N``."""
    if not (0.0 < mu <= 1.0):
        raise GridError(f"invalid grading mu={mu}, expected 0 < mu <= 1")
    if N < 1:
        raise GridError("at least one refinement layer is required")
    if b <= 0:
        raise GridError("refinement radius must be positive")
    r = b * (np.arange(N + 1) / N) ** (1.0 / mu)
    r[-1] = b
    return r


def refine_axis_local(axis, x0: float, b: float, N: int, mu: float,
                      tol: float | None = None) -> np.ndarray:
    """Insert the mirrored layers ``x0 +- r_i`` (i = 1..N) into an axis.

    ``x0`` must already be an axis point and no other point may lie in the
    open interval ``(x0 - b, x0 + b)``.
    """
    a = check_axis(axis.coords if isinstance(axis, Axis1D) else axis)
    tol = SNAP_RTOL * np.ptp(a) if tol is None else tol
    if np.min(np.abs(a - x0)) > tol:
        raise GridError(f"refinement centre {x0} is not an axis point")
    if x0 - b < a[0] - tol or x0 + b > a[-1] + tol:
        raise GridError("refinement region leaves the axis range")
    inside = (a > x0 - b + tol) & (a < x0 + b - tol) & (np.abs(a - x0) > tol)
    if np.any(inside):
        raise GridError(
            f"refinement region ({x0 - b}, {x0 + b}) already contains axis "
            f"points {a[inside].tolist()}")
    r = grade_layers(b, N, mu)[1:]
    new = np.concatenate([x0 - r, x0 + r])
    # endpoints at x0 +- b may coincide with existing points; merge those
    out = np.union1d(a, new)
    keep = np.concatenate([[True], np.diff(out) > tol])
    return check_axis(out[keep])


def graded_axis(lo: float, hi: float, x0: float, N: int, mu: float) -> np.ndarray:
    """Global grading of ``[lo, hi]`` towards ``x0``.

    Each side of ``x0`` gets ``N`` layers reaching the respective boundary,
    which reduces to the radius ``b = d/2`` when ``x0`` is the midpoint.
    """
    if not (lo < x0 < hi):
        raise GridError("grading centre must lie strictly inside the axis")
    left = x0 - grade_layers(x0 - lo, N, mu)[::-1]
    right = x0 + grade_layers(hi - x0, N, mu)[1:]
    left[0], right[-1] = lo, hi
    return check_axis(np.concatenate([left, right]))


def build_global_graded(lo, hi, x0, mu: float, N: int,
                        graded_axes=(0, 1, 2)) -> RectilinearGrid:
    """Grid whose listed axes are globally graded towards ``x0``.

    Axes not listed in ``graded_axes`` are uniform with ``2N`` intervals.
    """
    lo, hi, x0 = (np.asarray(v, dtype=float) for v in (lo, hi, x0))
    axes = []
    for d in range(3):
        if d in graded_axes:
            axes.append(graded_axis(lo[d], hi[d], x0[d], N, mu))
        else:
            axes.append(np.linspace(lo[d], hi[d], 2 * N + 1))
    return RectilinearGrid(*axes)


def _half_sums(h: np.ndarray) -> np.ndarray:
    w = np.zeros(h.size + 1)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


@dataclass(frozen=True)
class DualMeasures:
    """Dual-grid measures attached to primal edges and nodes."""

    dual_facet_area: np.ndarray
    dual_volume: np.ndarray
    primal_edge_len: np.ndarray
    boundary_dual_area: np.ndarray  # zero on interior nodes
    half_widths: tuple  # per-axis half-interval sums


def dual_measures(grid: RectilinearGrid) -> DualMeasures:
    """Dual facet areas, clipped dual volumes and boundary dual areas."""
    nx, ny, nz = grid.shape
    wx, wy, wz = (_half_sums(h) for h in grid.spacings)
    ax = np.broadcast_to((wz[:, None] * wy[None, :])[:, :, None], (nz, ny, nx - 1))
    ay = np.broadcast_to((wz[:, None] * wx[None, :])[:, None, :], (nz, ny - 1, nx))
    az = np.broadcast_to((wy[:, None] * wx[None, :])[None, :, :], (nz - 1, ny, nx))
    area = np.concatenate([ax.ravel(), ay.ravel(), az.ravel()])
    vol = (wz[:, None, None] * wy[None, :, None] * wx[None, None, :]).ravel()

    bnd = np.zeros((nz, ny, nx))
    fx = wz[:, None] * wy[None, :]
    fy = wz[:, None] * wx[None, :]
    fz = wy[:, None] * wx[None, :]
    bnd[:, :, 0] += fx
    bnd[:, :, -1] += fx
    bnd[:, 0, :] += fy
    bnd[:, -1, :] += fy
    bnd[0, :, :] += fz
    bnd[-1, :, :] += fz
    return DualMeasures(area, vol, grid.edge_lengths.copy(), bnd.ravel(),
                        (wx, wy, wz))
