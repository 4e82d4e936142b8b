"""Sparse linear solvers with residual verification.

Three backends are available:

``direct``  SuperLU factorization (reused for repeated right-hand sides),
``amg``     GMRES preconditioned by smoothed-aggregation AMG built on the
            symmetric positive definite bulk operator,
``krylov``  BiCGSTAB with Jacobi preconditioning.

``auto`` picks ``direct`` for small systems and ``amg`` otherwise.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
AUTO_DIRECT_MAX = 15_000
METHODS = ("auto", "direct", "amg", "krylov")


class SolverError(RuntimeError):
    """Factorization or solve failed, or the residual check did not pass."""


@dataclass
class SolveReport:
    method: str
    residual: float
    iterations: int
    seconds: float


def _rel_residual(K, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(K @ x - b)
    return float(r / nb) if nb > 0 else float(r)


class LinearSolver:
    """Prepared solver for ``K x = b`` with a fixed matrix ``K``.

    ``precond`` is an optional SPD matrix close to ``K`` (the bulk part
    without wire terms) used to build the AMG hierarchy.
    """

    def __init__(self, K, method: str = "auto", precond=None, tol: float = 1e-13,
                 check: float = RESIDUAL_TOL, maxiter: int = 2000):
        if method not in METHODS:
            raise SolverError(f"unknown solver method {method!r}")
        self.K = sp.csr_matrix(K)
        if self.K.shape[0] != self.K.shape[1]:
            raise SolverError("system matrix must be square")
        n = self.K.shape[0]
        if method == "auto":
            method = "direct" if n <= AUTO_DIRECT_MAX else "amg"
        self.method = method
        self.tol, self.check, self.maxiter = tol, check, maxiter
        self.reports: list[SolveReport] = []
        t0 = time.perf_counter()
        if method == "direct":
            self._setup_direct()
        elif method == "amg":
            self._setup_amg(precond)
        else:
            d = self.K.diagonal()
            if np.any(d == 0):
                raise SolverError("zero diagonal entry; Jacobi preconditioning impossible")
            self._M = sp.diags(1.0 / d)
        self.setup_seconds = time.perf_counter() - t0

    def _setup_direct(self):
        try:
            self._lu = spla.splu(self.K.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SolverError(
                f"sparse factorization failed ({exc}); the operator is singular, "
                "most likely because no Dirichlet, Robin or PEC anchoring fixes "
                "the constant mode") from exc

    def _setup_amg(self, precond):
        import pyamg

        A = self.K if precond is None else sp.csr_matrix(precond)
        sym = "hermitian" if precond is not None else "nonsymmetric"
        self._ml = pyamg.smoothed_aggregation_solver(A, symmetry=sym, max_coarse=500)
        self._M = self._ml.aspreconditioner(cycle="V")

    def _iterate(self, b, x0=None):
        it = [0]

        def cb(_):
            it[0] += 1

        if self.method == "amg":
            x, info = spla.gmres(self.K, b, x0=x0, rtol=self.tol, atol=0.0,
                                 restart=300, maxiter=self.maxiter, M=self._M,
                                 callback=cb, callback_type="pr_norm")
        else:
            x, info = spla.bicgstab(self.K, b, x0=x0, rtol=self.tol, atol=0.0,
                                    maxiter=self.maxiter * 10, M=self._M, callback=cb)
        return x, it[0], info

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        t0 = time.perf_counter()
        iters = 0
        if not np.any(b):
            x = np.zeros_like(b)
        elif self.method == "direct":
            x = self._lu.solve(b)
            # one step of iterative refinement when the check is not met
            if _rel_residual(self.K, x, b) > self.check:
                x = x + self._lu.solve(b - self.K @ x)
        else:
            x, iters, _ = self._iterate(b)
            for _ in range(3):
                if _rel_residual(self.K, x, b) <= self.check:
                    break
                dx, k, _ = self._iterate(b - self.K @ x)
                x, iters = x + dx, iters + k
        if not np.all(np.isfinite(x)):
            raise SolverError("solution contains non-finite values")
        res = _rel_residual(self.K, x, b)
        rep = SolveReport(self.method, res, iters, time.perf_counter() - t0)
        self.reports.append(rep)
        log.debug("linear solve %s: n=%d residual=%.2e iterations=%d (%.2fs)",
                  self.method, b.size, res, iters, rep.seconds)
        if res > self.check:
            raise SolverError(
                f"relative residual {res:.3e} exceeds {self.check:.1e} "
                f"(method {self.method})")
        return x

    @property
    def last_report(self) -> SolveReport | None:
        return self.reports[-1] if self.reports else None


def solve_linear(system, method: str = "auto") -> np.ndarray:
    """Solve an :class:`~fitwire.assembly.AssembledSystem` (reduced unknowns)."""
    solver = LinearSolver(system.K, method=method, precond=system.precond)
    x = solver.solve(system.rhs)
    system.info["solve"] = solver.last_report
    return x
