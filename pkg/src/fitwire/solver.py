"""Stationary electric solve, implicit Euler thermal steps with the
fractional-step coupling, and the penalty formulation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import assembly as asm
from .linsolve import LinearSolver, SolverError, solve_linear  # noqa: F401
from .materials import wire_beta_matrix
from .model import ElectrothermalModel

log = logging.getLogger(__name__)


@dataclass
class ElectrothermalState:
    phi: np.ndarray
    T: np.ndarray
    phi_bar: list
    T_bar: list
    time: float = 0.0
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransientConfig:
    N_t: int
    t_0: float

    def __post_init__(self):
        if int(self.N_t) < 1:
            raise ValueError("N_t must be at least 1")
        if not self.t_0 > 0:
            raise ValueError("t_0 must be positive")

    @property
    def dt(self) -> float:
        return self.t_0 / self.N_t


def wire_traces(model: ElectrothermalModel, u) -> list:
    """``Pi u`` for every wire."""
    return [c.Pi @ u for c in model.couplings]


class ElectricSolver:
    """Electric subproblem with a reusable prepared linear solver."""

    def __init__(self, model: ElectrothermalModel, method: str = "auto", T=None):
        self.model = model
        self.method = method
        self.system = model.electric_system(T)
        self.solver = LinearSolver(self.system.K, method=method, precond=self.system.precond)

    def solve(self):
        x = self.solver.solve(self.system.rhs)
        phi = self.system.expand(x)
        return phi, wire_traces(self.model, phi)


def solve_electric(model: ElectrothermalModel, T=None, method: str = "auto"):
    """Return ``(phi, phi_bar)``; ``phi_bar[i] = Pi_i phi``."""
    return ElectricSolver(model, method, T).solve()


class ThermalStepper:
    """Backward Euler for ``M dT/dt + (K + K_w + M_R) T = Q + M_R T_inf``."""

    def __init__(self, model: ElectrothermalModel, dt: float, method: str = "auto", T=None):
        if dt <= 0:
            raise ValueError("time step must be positive")
        self.model, self.dt = model, dt
        self.Kr, pre, self.A = model.thermal_matrix(dt, T)
        self.red = model.thermal_reduction
        self.solver = LinearSolver(self.Kr, method=method, precond=pre)
        _, self.robin_rhs = model.robin_terms()

    def step(self, T_n, Q):
        m = self.model
        rhs = m.capacitance / self.dt * np.asarray(T_n) + Q + self.robin_rhs
        rr = self.red.P.T @ (rhs - self.A @ self.red.fixed)
        T = self.red.expand(self.solver.solve(rr))
        return T, wire_traces(m, T)


def step_thermal(model, T_n, dt: float, Q, method: str = "auto"):
    return ThermalStepper(model, dt, method).step(T_n, Q)


def joule_vector(model: ElectrothermalModel, phi_bar):
    return asm.joule_losses(model.couplings, model.wire_joule_mass(), phi_bar,
                            model.n_nodes, model.spreading)


def run_transient(model: ElectrothermalModel, cfg: TransientConfig,
                  method: str = "auto", callback=None) -> list:
    """Fractional-step implicit Euler; returns the states at all time levels.

    Each step solves the electric problem with materials at ``T^n`` and
    then the thermal problem with the Joule losses of the new potential.
    With temperature independent materials both prepared solvers are
    reused for all steps.
    """
    n = model.n_nodes
    T = np.broadcast_to(np.asarray(model.T_init, dtype=float), (n,)).copy()
    states = [ElectrothermalState(np.zeros(n), T.copy(), [np.zeros(c.n1d) for c in model.couplings],
                                  wire_traces(model, T), 0.0)]
    dt = cfg.dt
    electric = ElectricSolver(model, method, T)
    thermal = ThermalStepper(model, dt, method, T)
    for k in range(1, cfg.N_t + 1):
        if model.temperature_dependent and k > 1:
            electric = ElectricSolver(model, method, T)
            thermal = ThermalStepper(model, dt, method, T)
        phi, phi_bar = electric.solve()
        Q, q_el = joule_vector(model, phi_bar)
        T, T_bar = thermal.step(T, Q)
        if not (np.all(np.isfinite(T)) and np.all(np.isfinite(phi))):
            raise SolverError(f"non-finite values at step {k}")
        st = ElectrothermalState(phi, T, phi_bar, T_bar, k * dt,
                                 {"joule_total": float(Q.sum()),
                                  "element_losses": q_el})
        states.append(st)
        log.info("step %d/%d t=%.4g max T=%.6g", k, cfg.N_t, st.time, T.max())
        if callback is not None:
            callback(k, st)
    return states


@dataclass
class PenaltyResult:
    u: np.ndarray
    u_bar: list
    residual: float  # max_i ||Pi_i u - u_bar_i||_inf


def solve_penalty(model: ElectrothermalModel, beta_bar: float, method: str = "direct",
                  kind: str = "sigma", exchange: str = "leak") -> PenaltyResult:
    """Solve the penalty system for ``(u, ubar)`` with transfer ``beta_bar``.

    ``exchange`` selects the sign of the transfer term, see
    :func:`fitwire.assembly.penalty_blocks`.
    """
    if beta_bar < 0:
        raise ValueError("beta_bar must be nonnegative")
    Kb = model.bulk(kind)
    Ma = model.wire_mass(kind)
    Mb = [wire_beta_matrix(c.wire1d, beta_bar) for c in model.couplings]
    B = asm.penalty_blocks(Kb, model.couplings, Ma, Mb, exchange)
    n = model.n_nodes
    nbar = sum(c.n1d for c in model.couplings)
    rhs = np.zeros(n + nbar)
    if model.electric_extra is not None:
        Ke, re = model.electric_extra
        B = B + sp.block_diag([Ke, sp.csr_matrix((nbar, nbar))])
        rhs[:n] += re
    red = model.electric_reduction
    P = sp.block_diag([red.P, sp.identity(nbar)], format="csr")
    fixed = np.concatenate([red.fixed, np.zeros(nbar)])
    PT = P.T.tocsr()
    x = LinearSolver(PT @ B @ P, method=method).solve(PT @ (rhs - B @ fixed))
    full = P @ x + fixed
    u = full[:n]
    ub, off = [], n
    for c in model.couplings:
        ub.append(full[off:off + c.n1d])
        off += c.n1d
    res = max((float(np.max(np.abs(c.Pi @ u - b))) for c, b in zip(model.couplings, ub)),
              default=0.0)
    return PenaltyResult(u, ub, res)
