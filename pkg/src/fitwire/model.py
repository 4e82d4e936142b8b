"""Container tying grid, materials, wires and boundary data together."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import assembly as asm
from .materials import (
    MaterialField,
    edge_conductance,
    node_capacitance,
    wire_mass_matrix,
)
from .mesh import RectilinearGrid, build_gradient, dual_measures


@dataclass
class RobinData:
    """Convective boundary: coefficient per node (or scalar) and ambient."""

    h: object
    T_inf: float


@dataclass
class ElectrothermalModel:
    """All data of one discretized electrothermal problem.

    ``labels`` optionally merges nodes in both subproblems (used to collapse
    a one-cell-thick grid into a planar problem).  ``electric_extra`` is an
    optional ``(matrix, rhs)`` pair added to the electric system before the
    reduction, e.g. an external lumped circuit.
    """

    grid: RectilinearGrid
    materials: MaterialField
    couplings: list
    electric_dirichlet: asm.DirichletSet
    thermal_dirichlet: asm.DirichletSet | None = None
    robin: RobinData | None = None
    labels: np.ndarray | None = None
    electric_extra: tuple | None = None
    T_init: float | np.ndarray = 300.0
    spreading: str = "avg"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.couplings) != len(self.materials.wires):
            raise ValueError("one WireMaterial per coupling is required")

    # ---- cached geometry ---------------------------------------------------
    @cached_property
    def G(self) -> sp.csr_matrix:
        return build_gradient(self.grid)

    @cached_property
    def dual(self):
        return dual_measures(self.grid)

    @property
    def n_nodes(self) -> int:
        return self.grid.n_nodes

    @cached_property
    def electric_labels(self) -> np.ndarray:
        pec = asm.pec_groups(self.grid, self.materials.pec_cells)
        if self.labels is None:
            return pec
        return asm.combine_labels(pec, self.labels)

    @cached_property
    def thermal_labels(self) -> np.ndarray:
        return np.arange(self.n_nodes) if self.labels is None else np.asarray(self.labels)

    @cached_property
    def electric_reduction(self) -> asm.Reduction:
        return asm.build_reduction(self.n_nodes, self.electric_dirichlet,
                                   self.electric_labels)

    @cached_property
    def thermal_reduction(self) -> asm.Reduction:
        return asm.build_reduction(self.n_nodes, self.thermal_dirichlet,
                                   self.thermal_labels)

    # ---- material evaluation --------------------------------------------
    def _cell_temperature(self, T):
        cn = self.grid.cell_nodes(np.arange(self.grid.n_cells))
        return np.asarray(T)[cn].mean(axis=1)

    def cell_sigma(self, T=None):
        m = self.materials
        if m.sigma_of_T is None or T is None:
            return m.cell_sigma
        return m.sigma_of_T(m.cell_sigma, self._cell_temperature(T))

    def cell_lambda(self, T=None):
        m = self.materials
        if m.lambda_of_T is None or T is None:
            return m.cell_lambda
        return m.lambda_of_T(m.cell_lambda, self._cell_temperature(T))

    @property
    def temperature_dependent(self) -> bool:
        return self.materials.sigma_of_T is not None or self.materials.lambda_of_T is not None

    def wire_mass(self, kind: str):
        attr = "sigma_bar" if kind == "sigma" else "lambda_bar"
        return [wire_mass_matrix(c.wire1d, getattr(w, attr))
                for c, w in zip(self.couplings, self.materials.wires)]

    # ---- operators ---------------------------------------------------------
    def bulk(self, kind: str, T=None) -> sp.csr_matrix:
        cells = self.cell_sigma(T) if kind == "sigma" else self.cell_lambda(T)
        return asm.bulk_stiffness(self.G, edge_conductance(self.grid, self.dual, cells))

    def wire(self, kind: str) -> sp.csr_matrix:
        return asm.wire_stiffness(self.couplings, self.wire_mass(kind), self.n_nodes)

    @cached_property
    def capacitance(self) -> np.ndarray:
        return node_capacitance(self.grid, self.dual, self.materials.cell_rho_c)

    def robin_terms(self):
        if self.robin is None:
            n = self.n_nodes
            return sp.csr_matrix((n, n)), np.zeros(n)
        return asm.robin_matrix(self.dual, self.robin.h, self.robin.T_inf)

    def electric_system(self, T=None) -> asm.AssembledSystem:
        Kb = self.bulk("sigma", T)
        K = Kb + self.wire("sigma")
        rhs = np.zeros(self.n_nodes)
        if self.electric_extra is not None:
            Ke, re = self.electric_extra
            K = K + Ke
            rhs = rhs + re
        red = self.electric_reduction
        Kr, rr = red.reduce(K, rhs)
        return asm.AssembledSystem(Kr, rr, red, red.reduce_matrix(Kb))

    def thermal_matrix(self, dt: float, T=None):
        """Reduced ``M/dt + K + K_w + M_robin`` and its SPD part."""
        Kb = self.bulk("lambda", T)
        Mr, _ = self.robin_terms()
        spd = Kb + Mr + sp.diags(self.capacitance / dt)
        A = spd + self.wire("lambda")
        red = self.thermal_reduction
        return red.reduce_matrix(A), red.reduce_matrix(spd), A

    def wire_joule_mass(self):
        return self.wire_mass("sigma")
