"""Experiment configuration: YAML loading, per-preset defaults and validation."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

PRESETS = ("resistor_0d2d", "straight_wire", "bent_wire", "chip_package", "custom")
SECTIONS = ("params", "grid", "wire", "coupling", "transient", "solver", "study", "output")


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every violation found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


_TABLE1 = {"d": 1.0, "sigma": 1.0, "r_bar": 1.0e-6, "sigma_bar_factor": 1.0e15, "r0": None}

_COMMON = {
    "solver": {"method": "auto"},
    "output": {"dir": "out", "fields": True},
}

DEFAULTS = {
    "resistor_0d2d": {
        "params": {**_TABLE1, "V0": 1.0, "R0_prime": 1.0, "n_theta": 8},
        "grid": {"kind": "global_graded", "N": 32, "mu": 0.5, "b": None, "layers": 10},
        "coupling": {"rule": "max_edge", "factor": 1.0},
        "study": {"levels": [8, 16, 32, 64, 128]},
    },
    "straight_wire": {
        "params": {**_TABLE1, "I0_prime": 1.0, "n_theta": 8},
        "grid": {"kind": "global_graded", "N": 42, "mu": 0.5, "b": None, "layers": 10},
        "wire": {"n1d": 33, "nz": 33},
        "coupling": {"rule": "max_edge", "factor": 1.0},
        "study": {"levels": [12, 20, 30, 42]},
    },
    "bent_wire": {
        "params": {**_TABLE1, "x0": [0.5, 0.02, 0.02], "x1": [0.5, 0.02, 0.98],
                   "H": 0.7, "d_pec": 0.04, "V_start": 0.0, "V_end": 1.0, "n_theta": 8,
                   "x_line_div": 3},
        "wire": {"n1d": 33},
        "coupling": {"rule": "curvature", "factor": 1.0e-2},
        "study": {"levels": [9, 17, 33], "reference": 65},
    },
    "chip_package": {
        "params": {
            "r_bar": 1.0e-6, "H": 1.0e-4, "V_wire": 0.1, "h_conv": 25.0, "T_inf": 300.0,
            "T_init": 300.0, "r0": None, "n_theta": 8,
            "domain_half": 1.0e-3, "domain_height": 4.0e-4, "chip_half": 4.0e-4,
            "pad_z": [1.5e-4, 2.5e-4], "pad_inner": 7.0e-4, "pad_width": 1.5e-4,
            "pad_offsets": [-2.5e-4, 0.0, 2.5e-4], "wire_inset": 5.0e-5,
            "wire_landing": 8.0e-4, "max_step": 1.5e-4, "max_step_z": 1.0e-4,
            "insulator": {"sigma": 1.0e-4, "lambda": 0.87, "rho": 1500.0, "c": 882.0},
        },
        "wire": {"n1d": 4},
        "coupling": {"rule": "bending", "factor": 1.0e-4, "min_r_bar": True},
        "transient": {"N_t": 10, "t_0": 1.0},
        "study": {"levels": [10, 20, 40]},
    },
    "custom": {"params": {}},
}

_KIND = {"uniform", "global_graded", "local_graded"}
_RULES = {"absolute", "max_edge", "curvature", "bending", "zero"}
_METHODS = {"auto", "direct", "amg", "krylov"}


@dataclass
class ExperimentConfig:
    preset: str
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    wire: dict = field(default_factory=dict)
    coupling: dict = field(default_factory=dict)
    transient: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    study: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"preset": self.preset}
        for s in SECTIONS:
            v = getattr(self, s)
            if v:
                d[s] = copy.deepcopy(v)
        return d

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)

    def model_params(self) -> dict:
        """Physical parameters with the coupling rule folded in."""
        p = copy.deepcopy(self.params)
        p["r_cpl"] = copy.deepcopy(self.coupling)
        return p


def _merge(defaults: dict, given: dict, path: str, problems: list) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            problems.append(f"unknown key '{path}{k}'")
        elif isinstance(defaults[k], dict) and defaults[k]:
            if not isinstance(v, dict):
                problems.append(f"'{path}{k}' must be a mapping")
            else:
                out[k] = _merge(defaults[k], v, f"{path}{k}.", problems)
        else:
            out[k] = v
    return out


def _num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check(cfg: ExperimentConfig) -> list:
    probs = []

    def positive(sec, key, allow_none=False, integer=False, minimum=None):
        v = getattr(cfg, sec).get(key)
        if v is None:
            if not allow_none:
                probs.append(f"'{sec}.{key}' is required")
            return
        if not _num(v) or (integer and int(v) != v):
            probs.append(f"'{sec}.{key}' must be a {'integer' if integer else 'number'}")
        elif minimum is not None and v < minimum:
            probs.append(f"'{sec}.{key}' must be >= {minimum}")
        elif minimum is None and v <= 0:
            probs.append(f"'{sec}.{key}' must be positive")

    p = cfg.params
    for key in ("d", "sigma", "r_bar", "sigma_bar_factor", "H", "V0", "R0_prime",
                "domain_half", "domain_height", "chip_half", "h_conv", "max_step",
                "max_step_z"):
        if key in p:
            positive("params", key)
    if "r0" in p:
        positive("params", "r0", allow_none=True)
    if "n_theta" in p:
        positive("params", "n_theta", integer=True, minimum=3)
    if cfg.grid:
        if cfg.grid.get("kind") not in _KIND:
            probs.append(f"'grid.kind' must be one of {sorted(_KIND)}")
        positive("grid", "N", integer=True, minimum=1)
        mu = cfg.grid.get("mu")
        if not (_num(mu) and 0 < mu <= 1):
            probs.append("'grid.mu' must lie in (0, 1]")
        positive("grid", "b", allow_none=True)
        positive("grid", "layers", integer=True, minimum=1)
    if cfg.wire:
        positive("wire", "n1d", integer=True, minimum=2)
        if "nz" in cfg.wire:
            positive("wire", "nz", integer=True, minimum=2)
            n1, nz = cfg.wire.get("n1d"), cfg.wire.get("nz")
            if _num(n1) and _num(nz) and n1 >= 2 and (nz - 1) % (n1 - 1):
                probs.append("'wire.nz - 1' must be a multiple of 'wire.n1d - 1'")
    if cfg.coupling:
        rule = cfg.coupling.get("rule")
        if rule not in _RULES:
            probs.append(f"'coupling.rule' must be one of {sorted(_RULES)}")
        f = cfg.coupling.get("factor")
        if not _num(f) or f < 0:
            probs.append("'coupling.factor' must be a nonnegative number (r_cpl >= 0)")
    if cfg.transient:
        positive("transient", "N_t", integer=True, minimum=1)
        positive("transient", "t_0")
    if cfg.solver.get("method") not in _METHODS:
        probs.append(f"'solver.method' must be one of {sorted(_METHODS)}")
    lv = cfg.study.get("levels")
    if lv is not None:
        if not isinstance(lv, list) or not all(_num(x) and int(x) == x and x > 0 for x in lv):
            probs.append("'study.levels' must be a list of positive integers")
        elif len(lv) < 3:
            probs.append("'study.levels' needs at least three levels")
    return probs


def from_dict(data: dict | None, preset: str | None = None) -> ExperimentConfig:
    """Apply defaults of the chosen preset and validate."""
    data = {} if data is None else dict(data)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    name = data.pop("preset", None) or preset or "straight_wire"
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {list(PRESETS)}")
    defaults = {**copy.deepcopy(_COMMON), **copy.deepcopy(DEFAULTS[name])}
    problems = []
    sections = {}
    for k in data:
        if k not in SECTIONS:
            problems.append(f"unknown key '{k}'")
    for s in SECTIONS:
        given = data.get(s) or {}
        if not isinstance(given, dict):
            problems.append(f"'{s}' must be a mapping")
            given = {}
        base = defaults.get(s, {})
        if name == "custom":
            sections[s] = {**base, **given}
        elif not base and given:
            problems.append(f"section '{s}' is not used by preset {name!r}")
            sections[s] = {}
        else:
            sections[s] = _merge(base, given, f"{s}.", problems)
    cfg = ExperimentConfig(name, **sections)
    problems += _check(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def loads(text: str, preset: str | None = None) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"parse error{where}: {getattr(exc, 'problem', exc)}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    return from_dict(data, preset)


def load_config(path, preset: str | None = None) -> ExperimentConfig:
    """Read and validate a YAML config; ``preset`` applies if the file names none."""
    return loads(Path(path).read_text(encoding="utf-8"), preset)
