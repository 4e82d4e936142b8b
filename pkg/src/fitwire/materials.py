"""Material data and the diagonal FIT material matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import DualMeasures, RectilinearGrid
from .wire_coupling import Wire1DGrid

COPPER = {"sigma": 5.96e7, "lambda": 401.0, "rho": 8930.0, "c": 390.0}


class MaterialError(ValueError):
    pass


@dataclass
class WireMaterial:
    """Per-element sigma_bar, lambda_bar and per-node beta_bar of one wire."""

    sigma_bar: np.ndarray
    lambda_bar: np.ndarray
    beta_bar: np.ndarray | None = None

    @classmethod
    def uniform(cls, n1d: int, sigma_bar: float, lambda_bar: float = 1.0,
                beta_bar: float = 0.0):
        m = n1d - 1
        return cls(np.full(m, float(sigma_bar)), np.full(m, float(lambda_bar)),
                   np.full(n1d, float(beta_bar)))


@dataclass
class MaterialField:
    """Piecewise-constant cell data plus per-wire data.

    ``sigma_of_T`` / ``lambda_of_T`` are optional callbacks
    ``f(cell_values, cell_temperature) -> new values`` for temperature
    dependent conductivities.  None of the shipped presets uses them.
    """

    cell_sigma: np.ndarray
    cell_lambda: np.ndarray
    cell_rho_c: np.ndarray
    pec_cells: np.ndarray
    wires: list = field(default_factory=list)
    sigma_of_T: object = None
    lambda_of_T: object = None

    def __post_init__(self):
        for name in ("cell_sigma", "cell_lambda", "cell_rho_c"):
            a = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, a)
        self.pec_cells = np.asarray(self.pec_cells, dtype=bool)
        ok = ~self.pec_cells
        if np.any(self.cell_sigma[ok] <= 0) or np.any(self.cell_lambda[ok] <= 0):
            raise MaterialError("conductivities must be positive outside PEC cells")
        if np.any(self.cell_rho_c <= 0):
            raise MaterialError("rho*c must be positive")

    @classmethod
    def homogeneous(cls, grid: RectilinearGrid, sigma=1.0, lam=1.0, rho_c=1.0):
        n = grid.n_cells
        return cls(np.full(n, float(sigma)), np.full(n, float(lam)),
                   np.full(n, float(rho_c)), np.zeros(n, dtype=bool))

    def assign_box(self, grid, lo, hi, sigma=None, lam=None, rho_c=None, pec=None):
        """Overwrite the properties of all cells centred in ``[lo, hi]``."""
        m = grid.box_cell_mask(lo, hi)
        if sigma is not None:
            self.cell_sigma[m] = sigma
        if lam is not None:
            self.cell_lambda[m] = lam
        if rho_c is not None:
            self.cell_rho_c[m] = rho_c
        if pec is not None:
            self.pec_cells[m] = pec
        return m


def _cell_array(grid, values):
    v = np.asarray(values, dtype=float)
    if v.size != grid.n_cells:
        raise MaterialError(f"expected {grid.n_cells} cell values, got {v.size}")
    return v.reshape(grid.cell_shape[::-1])  # (cz, cy, cx)


def edge_conductance(grid: RectilinearGrid, dual: DualMeasures, cellvals) -> np.ndarray:
    """Per-edge ``alpha_avg * |A~_l| / |L_l|`` with area-weighted averaging.

    Each cell touching edge ``l`` contributes its value times the quarter of
    its cross-section that belongs to the dual facet of ``l``.
    """
    a = _cell_array(grid, cellvals)
    hx, hy, hz = grid.spacings
    qx, qy, qz = 0.5 * hx, 0.5 * hy, 0.5 * hz
    out = []
    # x-edges: transverse directions y (axis 1) and z (axis 0)
    p = np.pad(a * qz[:, None, None] * qy[None, :, None], ((1, 1), (1, 1), (0, 0)))
    out.append((p[:-1, :-1] + p[1:, :-1] + p[:-1, 1:] + p[1:, 1:]) / hx[None, None, :])
    p = np.pad(a * qz[:, None, None] * qx[None, None, :], ((1, 1), (0, 0), (1, 1)))
    out.append((p[:-1, :, :-1] + p[1:, :, :-1] + p[:-1, :, 1:] + p[1:, :, 1:])
               / hy[None, :, None])
    p = np.pad(a * qy[None, :, None] * qx[None, None, :], ((0, 0), (1, 1), (1, 1)))
    out.append((p[:, :-1, :-1] + p[:, 1:, :-1] + p[:, :-1, 1:] + p[:, 1:, 1:])
               / hz[:, None, None])
    return np.concatenate([o.ravel() for o in out])


def edge_conductance_matrix(grid, dual, cellvals) -> sp.dia_matrix:
    return sp.diags(edge_conductance(grid, dual, cellvals))


def node_capacitance(grid: RectilinearGrid, dual: DualMeasures, cell_rho_c) -> np.ndarray:
    """Per-node ``sum_c rho_c * |octant of c in V~_k|``."""
    a = _cell_array(grid, cell_rho_c)
    hx, hy, hz = grid.spacings
    v = a * (0.5 * hz)[:, None, None] * (0.5 * hy)[None, :, None] * (0.5 * hx)[None, None, :]
    p = np.pad(v, 1)
    s = 0.0
    for dk in (0, 1):
        for dj in (0, 1):
            for di in (0, 1):
                s = s + p[dk:dk + grid.nz, dj:dj + grid.ny, di:di + grid.nx]
    return s.ravel()


def node_capacitance_matrix(grid, dual, cell_rho_c) -> sp.dia_matrix:
    return sp.diags(node_capacitance(grid, dual, cell_rho_c))


def wire_mass_matrix(wire1d: Wire1DGrid, alpha_bar) -> sp.dia_matrix:
    """``diag(alpha_bar_j / |Lambda_j|)`` over the wire elements."""
    ab = np.broadcast_to(np.asarray(alpha_bar, dtype=float), wire1d.element_arclen.shape)
    if np.any(wire1d.element_arclen <= 0):
        raise MaterialError("wire element lengths must be positive")
    return sp.diags(ab / wire1d.element_arclen)


def wire_beta_matrix(wire1d: Wire1DGrid, beta_bar) -> sp.dia_matrix:
    """``diag(beta_bar_j * |Lambda~_j|)`` over the wire nodes."""
    bb = np.broadcast_to(np.asarray(beta_bar, dtype=float), wire1d.dual_len.shape)
    if np.any(bb < 0):
        raise MaterialError("beta_bar must be nonnegative")
    return sp.diags(bb * wire1d.dual_len)
