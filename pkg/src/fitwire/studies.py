"""Single runs and convergence studies for the presets, with file output."""

from __future__ import annotations

import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import presets as P
from .analysis import AnalysisError, fit_order
from .config import ConfigError, ExperimentConfig
from .linsolve import SolverError
from .solver import TransientConfig, run_transient
from .writers import write_csv, write_fields

log = logging.getLogger(__name__)

MEASURES = {
    "resistor_0d2d": ["eps_L2_1D", "eps_L2_3D"],
    "straight_wire": ["eps_L2_3D", "eps_L2_1D", "eps_H1_1D", "delta_L2_1D", "delta_H1_1D"],
    "bent_wire": ["Delta_L2_1D", "Delta_H1_1D", "Delta_L2_3D"],
    "chip_package": ["T_hot", "T_hot_diff"],
}


def _require_preset(cfg: ExperimentConfig):
    if cfg.preset == "custom":
        raise ConfigError("preset 'custom' has no driver; build the model through the API")


def _out(out) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def run_chip(cfg: ExperimentConfig, N_t=None, t_0=None, out=None):
    params = cfg.model_params()
    model = P.chip_model(params, int(cfg.wire["n1d"]))
    tc = TransientConfig(int(N_t or cfg.transient["N_t"]), float(t_0 or cfg.transient["t_0"]))
    out = _out(out)

    def cb(k, st):
        if out is not None and cfg.output.get("fields", True):
            write_fields(out / f"step_{k:04d}", model.grid, model.couplings,
                         st.phi, st.phi_bar, st.T, st.T_bar)

    states = run_transient(model, tc, cfg.solver["method"], cb)
    return model, states


def run_preset(cfg: ExperimentConfig, out=None) -> dict:
    """Run one configuration; writes fields and a summary table to ``out``."""
    _require_preset(cfg)
    out = _out(out)
    params, method = cfg.model_params(), cfg.solver["method"]
    write = out is not None and cfg.output.get("fields", True)
    if cfg.preset == "chip_package":
        model, states = run_chip(cfg, out=out)
        last = states[-1]
        summary = {"h": model.grid.mean_edge_length(), "n_nodes": model.n_nodes,
                   "T_max": float(last.T.max()),
                   "T_bar_min": float(min(t.min() for t in last.T_bar)),
                   "T_bar_max": float(max(t.max() for t in last.T_bar))}
    else:
        if cfg.preset == "resistor_0d2d":
            res = P.resistor_0d2d(cfg.grid, params, method)
        elif cfg.preset == "straight_wire":
            res = P.straight_wire(cfg.grid, params, int(cfg.wire["n1d"]),
                                  cfg.wire.get("nz"), method=method)
        else:
            res = P.bent_wire(int(cfg.wire["n1d"]), params, method)
        if write:
            write_fields(out / "solution", res.grid, res.model.couplings,
                         res.phi, res.phi_bar)
        summary = {"h": res.h, "n_nodes": res.grid.n_nodes, **res.errors,
                   **{k: v for k, v in res.extra.items() if np.isscalar(v)}}
    if out is not None:
        keys = sorted(summary)
        write_csv(out / "summary.csv", ["quantity", "value"],
                  [[k, float(summary[k])] for k in keys])
    return summary


@dataclass
class StudyResult:
    preset: str
    measures: list
    rows: list = field(default_factory=list)  # dicts with level, h, measures, status
    orders: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return all(r["status"] == "ok" for r in self.rows)

    def column(self, name):
        return [r[name] for r in self.rows if r["status"] == "ok"]

    def table(self):
        header = ["level", "h", "h_bar"] + self.measures + ["status"]
        rows = [[r["level"], r.get("h", float("nan")), r.get("h_bar", float("nan"))]
                + [r.get(m, float("nan")) for m in self.measures] + [r["status"]]
                for r in self.rows]
        return header, rows


def resolve_levels(cfg: ExperimentConfig, n_levels=None) -> list:
    """Configured levels; ``n_levels`` keeps the first ones or extends the list
    by doubling the last level."""
    lv = list(cfg.study["levels"])
    if n_levels is None:
        return lv
    n = int(n_levels)
    if n < 3:
        raise ConfigError("a convergence study needs at least three levels")
    while len(lv) < n:
        last = lv[-1]
        lv.append(2 * last - 1 if cfg.preset == "bent_wire" else 2 * last)
    return lv[:n]


def _level_static(cfg, level, ref=None):
    params, method = cfg.model_params(), cfg.solver["method"]
    if cfg.preset == "resistor_0d2d":
        r = P.resistor_0d2d({**cfg.grid, "N": level}, params, method)
        return r, {"h": r.h, "h_bar": float("nan"), **r.errors}
    if cfg.preset == "straight_wire":
        r = P.straight_wire({**cfg.grid, "N": level}, params, int(cfg.wire["n1d"]),
                            cfg.wire.get("nz"), method=method)
        return r, {"h": r.h, "h_bar": r.h_bar, **r.errors}
    r = P.bent_wire(int(level), params, method)
    return r, {"h": r.h, "h_bar": r.h_bar, **P.bent_wire_delta(r, ref)}


def _fit_all(res: StudyResult, measures, xname="h"):
    ok = [r for r in res.rows if r["status"] == "ok"]
    for m in measures:
        try:
            res.orders[m] = fit_order([r[xname] for r in ok], [r[m] for r in ok])[0]
        except AnalysisError:
            res.orders[m] = float("nan")


def chip_richardson(cfg: ExperimentConfig, levels) -> StudyResult:
    """Temperature at the hottest node at ``t_0`` for successively halved steps."""
    res = StudyResult("chip_package", MEASURES["chip_package"])
    T_prev, node = None, None
    for n in levels:
        try:
            _, states = run_chip(cfg, N_t=n)
        except SolverError as exc:
            log.error("level %s failed: %s", n, exc)
            res.rows.append({"level": n, "status": f"failed: {exc}"})
            continue
        T = states[-1].T
        if node is None:
            node = int(np.argmax(T))
        row = {"level": n, "h": cfg.transient["t_0"] / n, "h_bar": float("nan"),
               "T_hot": float(T[node]), "status": "ok",
               "T_hot_diff": float("nan") if T_prev is None else abs(float(T[node]) - T_prev)}
        T_prev = float(T[node])
        res.rows.append(row)
    d = [r["T_hot_diff"] for r in res.rows if r["status"] == "ok"][1:]
    res.orders["richardson_ratios"] = [d[i] / d[i + 1] for i in range(len(d) - 1)]
    if len(d) >= 2:
        res.orders["T_hot_diff"] = float(np.log2(d[0] / d[1]))
    return res


def run_convergence_study(cfg: ExperimentConfig, levels=None, out=None,
                          threads: int = 1) -> StudyResult:
    """Solve every level, evaluate the preset's measures and fit orders.

    A level whose solve fails is recorded as failed and skipped; the orders
    are fitted to the remaining levels.
    """
    _require_preset(cfg)
    levels = list(cfg.study["levels"]) if levels is None else list(levels)
    if len(levels) < 3:
        raise ConfigError("a convergence study needs at least three levels")
    if cfg.preset == "chip_package":
        res = chip_richardson(cfg, levels)
    else:
        res = StudyResult(cfg.preset, MEASURES[cfg.preset])
        ref = None
        if cfg.preset == "bent_wire":
            ref = P.bent_wire(int(cfg.study["reference"]), cfg.model_params(),
                              cfg.solver["method"])

        def one(level):
            try:
                _, row = _level_static(cfg, level, ref)
                return {"level": level, **row, "status": "ok"}
            except SolverError as exc:
                log.error("level %s failed: %s", level, exc)
                return {"level": level, "status": f"failed: {exc}"}

        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                res.rows = list(ex.map(one, levels))
        else:
            res.rows = [one(lv) for lv in levels]
        _fit_all(res, res.measures)
    out = _out(out)
    if out is not None:
        write_csv(out / "convergence.csv", *res.table())
        write_csv(out / "orders.csv", ["measure", "order"],
                  [[m, float(v)] for m, v in sorted(res.orders.items()) if np.isscalar(v)])
    return res


def with_overrides(cfg: ExperimentConfig, **sections) -> ExperimentConfig:
    """Copy of ``cfg`` with section entries replaced (no re-validation)."""
    new = copy.deepcopy(cfg)
    for sec, upd in sections.items():
        getattr(new, sec).update(upd)
    return new
