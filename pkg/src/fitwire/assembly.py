"""Global operators: stiffness matrices, Joule losses, boundary conditions,
node merging for PEC regions and the penalty block system."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .mesh import DualMeasures, RectilinearGrid


class AssemblyError(ValueError):
    pass


class ConstraintConflict(AssemblyError):
    """A merged node group carries two different prescribed values."""


class FullyConstrained(AssemblyError):
    """Every unknown is prescribed; nothing is left to solve for."""


def bulk_stiffness(G: sp.spmatrix, M_alpha) -> sp.csr_matrix:
    """``K = G^T M G``."""
    M = M_alpha if sp.issparse(M_alpha) else sp.diags(np.asarray(M_alpha, dtype=float))
    return (G.T @ M @ G).tocsr()


def wire_stiffness(couplings, M_bar, n_nodes: int) -> sp.csr_matrix:
    """``sum_i X_i^T Mbar_i Ps_i Pi_i`` (generally nonsymmetric)."""
    K = sp.csr_matrix((n_nodes, n_nodes))
    for c, M in zip(couplings, M_bar):
        K = K + c.X.T @ M @ c.Ps @ c.Pi
    return K.tocsr()


def element_losses(coupling, M_sigma, phi_bar) -> np.ndarray:
    """Power per wire element ``(M_sigma)_jj * ((Ps phi_bar)_j)^2``."""
    d = coupling.Ps @ np.asarray(phi_bar, dtype=float)
    return M_sigma.diagonal() * d * d


def joule_losses(couplings, M_sigma, phi_bar, n_nodes: int, spreading: str = "avg"):
    """Nodal Joule-loss vector and the per-wire element losses.

    ``spreading="avg"`` distributes each element's power with the averaged
    interpolation rows (row sums one, power conserving); ``"abs"`` uses
    ``|X|/2`` instead.
    """
    Q = np.zeros(n_nodes)
    per_wire = []
    for c, M, pb in zip(couplings, M_sigma, phi_bar):
        q = element_losses(c, M, pb)
        S = c.X_avg if spreading == "avg" else c.X_abs_half()
        Q += S.T @ q
        per_wire.append(q)
    return Q, per_wire


@dataclass(frozen=True)
class DirichletSet:
    """Prescribed nodal values (one value per node)."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=np.int64).ravel()
        v = np.broadcast_to(np.asarray(self.values, dtype=float), n.shape).copy()
        order = np.argsort(n, kind="stable")
        n, v = n[order], v[order]
        dup = np.flatnonzero(np.diff(n) == 0)
        if dup.size and np.any(v[dup] != v[dup + 1]):
            raise ConstraintConflict("a Dirichlet node carries two different values")
        keep = np.concatenate([[True], np.diff(n) != 0]) if n.size else np.zeros(0, bool)
        object.__setattr__(self, "nodes", n[keep])
        object.__setattr__(self, "values", v[keep])

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def union(cls, *sets):
        return cls(np.concatenate([s.nodes for s in sets]),
                   np.concatenate([s.values for s in sets]))


@dataclass
class Reduction:
    """Affine map ``x_full = P x_free + fixed`` from free unknowns to nodes."""

    P: sp.csr_matrix
    fixed: np.ndarray
    group: np.ndarray  # group label per node
    node_free: np.ndarray  # free unknown per node, -1 if prescribed
    rep_nodes: np.ndarray  # one member node per free unknown

    @property
    def n_full(self) -> int:
        return self.P.shape[0]

    @property
    def n_free(self) -> int:
        return self.P.shape[1]

    def reduce(self, K, rhs):
        PT = self.P.T.tocsr()
        Kr = (PT @ K @ self.P).tocsr()
        rr = PT @ (np.asarray(rhs, dtype=float) - K @ self.fixed)
        return Kr, rr

    def reduce_matrix(self, K):
        return (self.P.T @ K @ self.P).tocsr()

    def expand(self, x_free) -> np.ndarray:
        return self.P @ np.asarray(x_free) + self.fixed

    def restrict(self, x_full) -> np.ndarray:
        """One representative value per free unknown (inverse of expand)."""
        return np.asarray(x_full, dtype=float)[self.rep_nodes]


def build_reduction(n: int, dirichlet: DirichletSet | None = None,
                    labels: np.ndarray | None = None, tol: float = 0.0) -> Reduction:
    """Combine node merging (``labels``) with prescribed values.

    Nodes sharing a label become one unknown. A group containing prescribed
    nodes is fixed as a whole; differing prescribed values inside one group
    raise :class:`ConstraintConflict`.
    """
    lab = np.arange(n) if labels is None else np.asarray(labels, dtype=np.int64)
    _, lab = np.unique(lab, return_inverse=True)
    ng = int(lab.max()) + 1 if n else 0
    gval = np.full(ng, np.nan)
    if dirichlet is not None and dirichlet.nodes.size:
        g = lab[dirichlet.nodes]
        order = np.argsort(g, kind="stable")
        gs, vs = g[order], dirichlet.values[order]
        lo = np.minimum.reduceat(vs, np.flatnonzero(np.r_[True, np.diff(gs) != 0]))
        hi = np.maximum.reduceat(vs, np.flatnonzero(np.r_[True, np.diff(gs) != 0]))
        ug = gs[np.r_[True, np.diff(gs) != 0]]
        bad = hi - lo > tol
        if np.any(bad):
            raise ConstraintConflict(
                f"{int(bad.sum())} merged group(s) touch conflicting prescribed values, "
                f"e.g. {lo[bad][0]} and {hi[bad][0]}")
        gval[ug] = lo
    free_groups = np.flatnonzero(np.isnan(gval))
    if free_groups.size == 0:
        raise FullyConstrained("all unknowns are prescribed; nothing to solve")
    gfree = np.full(ng, -1, dtype=np.int64)
    gfree[free_groups] = np.arange(free_groups.size)
    node_free = gfree[lab]
    fixed = np.where(node_free < 0, gval[lab], 0.0)
    rows = np.flatnonzero(node_free >= 0)
    P = sp.csr_matrix((np.ones(rows.size), (rows, node_free[rows])),
                      shape=(n, free_groups.size))
    rep = np.zeros(free_groups.size, dtype=np.int64)
    rep[node_free[rows[::-1]]] = rows[::-1]  # smallest member wins
    return Reduction(P, fixed, lab, node_free, rep)


@dataclass
class AssembledSystem:
    """Reduced linear system plus the data needed to expand its solution."""

    K: sp.csr_matrix
    rhs: np.ndarray
    reduction: Reduction
    precond: sp.csr_matrix | None = None  # SPD part used for preconditioning
    info: dict = field(default_factory=dict)

    def expand(self, x):
        return self.reduction.expand(x)


def dirichlet_reduce(K, rhs, dset: DirichletSet, precond=None) -> AssembledSystem:
    red = build_reduction(K.shape[0], dset)
    Kr, rr = red.reduce(K, rhs)
    pre = None if precond is None else red.reduce_matrix(precond)
    return AssembledSystem(Kr, rr, red, pre)


def pec_groups(grid: RectilinearGrid, pec_cells) -> np.ndarray:
    """Node labels; nodes of face/edge/corner-connected PEC cells share one."""
    pec = np.flatnonzero(np.asarray(pec_cells, dtype=bool))
    n = grid.n_nodes
    if pec.size == 0:
        return np.arange(n)
    cn = grid.cell_nodes(pec)
    rows = np.repeat(cn[:, 0], 7)
    cols = cn[:, 1:].ravel()
    A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    _, labels = connected_components(A, directed=False)
    return labels


def combine_labels(*labelings) -> np.ndarray:
    """Finest common coarsening of several node labelings."""
    n = len(labelings[0])
    rows, cols = [], []
    for lab in labelings:
        lab = np.asarray(lab, dtype=np.int64)
        _, inv = np.unique(lab, return_inverse=True)
        first = np.full(inv.max() + 1, -1, dtype=np.int64)
        first[inv[::-1]] = np.arange(n)[::-1]
        rows.append(np.arange(n))
        cols.append(first[inv])
    r, c = np.concatenate(rows), np.concatenate(cols)
    A = sp.csr_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    return connected_components(A, directed=False)[1]


def pec_reduce(K, rhs, grid: RectilinearGrid, pec_cells,
               dset: DirichletSet | None = None, precond=None) -> AssembledSystem:
    red = build_reduction(K.shape[0], dset, pec_groups(grid, pec_cells))
    Kr, rr = red.reduce(K, rhs)
    pre = None if precond is None else red.reduce_matrix(precond)
    return AssembledSystem(Kr, rr, red, pre)


def robin_matrix(dual: DualMeasures, h, T_inf: float):
    """Diagonal ``h_k |dV~_k cap dD|`` and its load ``M T_inf``."""
    hk = np.broadcast_to(np.asarray(h, dtype=float), dual.boundary_dual_area.shape)
    if np.any(hk < 0):
        raise AssemblyError("heat transfer coefficients must be nonnegative")
    d = hk * dual.boundary_dual_area
    return sp.diags(d).tocsr(), d * float(T_inf)


def penalty_blocks(K_bulk, couplings, M_alpha, M_beta, exchange: str = "leak") -> sp.csr_matrix:
    """Block matrix of the penalty formulation for ``(u, ubar_1, ...)``.

    With ``exchange="leak"`` the wire gains the current ``Mb (Pi u - ubar)``
    and the bulk loses it::

        K u + sum_i RN_i^T Mb_i (Pi_i u - ubar_i) = f
        Ps_i^T Ma_i Ps_i ubar_i - Mb_i (Pi_i u - ubar_i) = 0

    ``exchange="printed"`` flips the sign of the exchange term.  That variant
    is indefinite once ``beta_bar`` reaches the wire stiffness spectrum; both
    share the limit ``Pi u = ubar`` for large ``beta_bar``.
    """
    if exchange not in ("leak", "printed"):
        raise AssemblyError(f"unknown exchange sign {exchange!r}")
    sgn = 1.0 if exchange == "leak" else -1.0
    top_left = K_bulk.tocsr()
    top = []
    for c, Ma, Mb in zip(couplings, M_alpha, M_beta):
        top_left = top_left + sgn * (c.RN.T @ Mb @ c.Pi)
        top.append(-sgn * (c.RN.T @ Mb))
    nw = len(couplings)
    blocks = [[top_left] + top]
    for i, (c, Ma, Mb) in enumerate(zip(couplings, M_alpha, M_beta)):
        row = [-sgn * (Mb @ c.Pi)] + [None] * nw
        row[1 + i] = c.Ps.T @ Ma @ c.Ps + sgn * Mb
        blocks.append(row)
    return sp.bmat(blocks, format="csr")
