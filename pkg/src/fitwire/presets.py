"""Model problems: planar resistor with a lumped circuit, straight wire,
bent wire between PEC cubes, and the bond-wire chip package."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from .assembly import DirichletSet
from .materials import COPPER, MaterialField, WireMaterial
from .mesh import RectilinearGrid, graded_axis, merge_points, refine_axis_local
from .model import ElectrothermalModel, RobinData
from .solver import ElectricSolver
from .wire_coupling import (
    WireCurve,
    build_coupling,
    build_Pi,
    build_RN,
    frenet_curvature_max,
)

log = logging.getLogger(__name__)

OMEGA_X = 0.45  # evaluation box [0, 0.45 d] x [0, d] x [0, d]


def default_r0(d: float) -> float:
    """Radius of the disc with the cross-section area of the cube face."""
    return float(np.sqrt(d * d / np.pi))


@dataclass
class CaseResult:
    name: str
    grid: RectilinearGrid
    model: ElectrothermalModel
    phi: np.ndarray
    phi_bar: list
    h: float
    h_bar: float | None
    errors: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def max_transverse_edge(grid: RectilinearGrid, axes=(0, 1)) -> float:
    return float(max(np.max(grid.spacings[a]) for a in axes))


def resolve_r_cpl(rule, grid=None, curve=None, H=None, r_bar=None, axes=(0, 1)) -> float:
    """Evaluate a coupling-radius rule.

    ``rule`` is a number or a mapping with ``rule`` in
    ``absolute | max_edge | curvature | bending | zero`` and a ``factor``:

    * ``max_edge``:  factor * longest edge perpendicular to the wire,
    * ``curvature``: factor / (maximum curvature),
    * ``bending``:   factor * H^2 * (maximum curvature),

    ``min_r_bar: true`` additionally clamps the result from below by the wire
    radius.
    """
    if isinstance(rule, (int, float)):
        return float(rule)
    kind = rule.get("rule", "absolute")
    f = float(rule.get("factor", 1.0))
    if kind == "absolute":
        r = f * float(rule.get("value", 0.0)) if "value" in rule else f
    elif kind == "zero":
        r = 0.0
    elif kind == "max_edge":
        r = f * max_transverse_edge(grid, axes)
    elif kind == "curvature":
        r = f / frenet_curvature_max(curve)
    elif kind == "bending":
        r = f * H * H * frenet_curvature_max(curve)
    else:
        raise ValueError(f"unknown r_cpl rule {kind!r}")
    if rule.get("min_r_bar", False) and r_bar is not None:
        r = max(r, r_bar)
    return float(r)


def _axis_with_omega(N, mu, d, centre):
    return merge_points(graded_axis(0.0, d, centre, N, mu), [OMEGA_X * d])


def transverse_axis(grid_spec: dict, d: float, centre: float) -> np.ndarray:
    """Axis of a cross-section grid per the grid spec (graded or uniform)."""
    kind = grid_spec.get("kind", "global_graded")
    N = int(grid_spec["N"])
    if kind == "uniform":
        return _axis_with_omega(N, 1.0, d, centre)
    if kind == "global_graded":
        return _axis_with_omega(N, float(grid_spec.get("mu", 0.5)), d, centre)
    if kind == "local_graded":
        base = np.linspace(0.0, d, 2 * N + 1)
        b = grid_spec.get("b")
        if b is None:
            b = min(np.diff(base)) / 3.0
        ax = merge_points(base, [centre])
        ax = refine_axis_local(ax, centre, float(b), int(grid_spec.get("layers", 10)),
                               float(grid_spec.get("mu", 1.0)))
        return merge_points(ax, [OMEGA_X * d])
    raise ValueError(f"unknown grid kind {kind!r}")


# ---- planar resistor with an external lumped circuit ------------------------------

def resistor_0d2d(grid_spec: dict, params: dict, method="auto") -> CaseResult:
    """Planar resistor whose inner point electrode is driven through R0'."""
    d, sigma, r_bar = params["d"], params["sigma"], params["r_bar"]
    r0 = params.get("r0") or default_r0(d)
    V0, R0 = params["V0"], params["R0_prime"]
    c = 0.5 * d
    ax = transverse_axis(grid_spec, d, c)
    grid = RectilinearGrid(ax, ax, [0.0, 1.0])  # unit thickness slab
    # the two z-layers are merged into a single planar unknown per (x, y)
    nx, ny = grid.nx, grid.ny
    labels = np.tile(np.arange(nx * ny), 2)
    axis = WireCurve.segment([c, c, 0.0], [c, c, 1.0])
    r_cpl = resolve_r_cpl(params.get("r_cpl", {"rule": "max_edge"}), grid, r_bar=r_bar)
    s_mid = np.array([0.5])
    RN = build_RN(grid, axis, s_mid)
    Pi, gamma = build_Pi(grid, axis, s_mid, r_cpl, r_bar, r0, params.get("n_theta", 8))
    G0 = 1.0 / R0
    K_ext = (RN.T @ (G0 * Pi)).tocsr()
    rhs_ext = np.asarray(RN.T @ np.array([G0 * V0])).ravel()

    Rint = an.analytic_rint(sigma, r_bar, r0)
    I0 = V0 / (R0 + Rint)
    p = grid.node_coords
    r = np.hypot(p[:, 0] - c, p[:, 1] - c)
    side = (np.isclose(p[:, 0], 0) | np.isclose(p[:, 0], d)
             | np.isclose(p[:, 1], 0) | np.isclose(p[:, 1], d))
    bn = np.flatnonzero(side)
    dset = DirichletSet(bn, an.analytic_log2d(r[bn], I0, sigma, r0))
    mat = MaterialField.homogeneous(grid, sigma=sigma)
    model = ElectrothermalModel(grid, mat, [], dset, labels=labels,
                                electric_extra=(K_ext, rhs_ext))
    phi, _ = ElectricSolver(model, method).solve()
    phibar_h = float((Pi @ phi)[0])
    phibar_ex = I0 * Rint
    mask = r > 0
    phi_ex = np.zeros_like(phi)
    phi_ex[mask] = an.analytic_log2d(r[mask], I0, sigma, r0)
    w = an.NormWeights.build(grid, omega=([0, 0, 0], [OMEGA_X * d, d, 1.0]))
    errors = {"eps_L2_1D": abs(phibar_h - phibar_ex) / abs(phibar_ex),
              "eps_L2_3D": an.error_eps(phi, phi_ex, "L2_3D", w)}
    h = grid.mean_edge_length((0, 1))
    return CaseResult("resistor_0d2d", grid, model, phi, [np.array([phibar_h])], h, None,
                      errors, {"gamma": gamma, "r_cpl": r_cpl, "phibar_exact": phibar_ex,
                               "I0_prime": I0})


# ---- straight wire ------------------------------------------------------------------

def straight_wire_model(grid_spec: dict, params: dict, n1d: int = 33,
                        nz: int | None = None, r_cpl_rule=None):
    """Model of the straight wire along z with the manufactured line-source
    potential prescribed on the whole boundary."""
    d, sigma, r_bar = params["d"], params["sigma"], params["r_bar"]
    r0 = params.get("r0") or default_r0(d)
    I0 = params.get("I0_prime", 1.0)
    c = 0.5 * d
    ax = transverse_axis(grid_spec, d, c)
    nz = n1d if nz is None else nz
    if (nz - 1) % (n1d - 1):
        raise ValueError("the z grid must contain every 1D node")
    grid = RectilinearGrid(ax, ax, np.linspace(0.0, d, nz))
    curve = WireCurve.segment([c, c, 0.0], [c, c, d])
    rule = params.get("r_cpl", {"rule": "max_edge"}) if r_cpl_rule is None else r_cpl_rule
    r_cpl = resolve_r_cpl(rule, grid, curve, r_bar=r_bar)
    cs = build_coupling(grid, curve, n1d, r_cpl, r_bar, r0, params.get("n_theta", 8))
    sigma_bar = params["sigma_bar_factor"] * np.pi * r_bar ** 2 * sigma
    mat = MaterialField.homogeneous(grid, sigma=sigma)
    mat.wires = [WireMaterial.uniform(n1d, sigma_bar)]
    p = grid.node_coords
    r = np.maximum(np.hypot(p[:, 0] - c, p[:, 1] - c), r_bar)
    phi_ex, _ = an.analytic_straightwire(r, p[:, 2], I0, sigma, r0, r_bar, d)
    bn = np.flatnonzero(grid.boundary_mask)
    model = ElectrothermalModel(grid, mat, [cs], DirichletSet(bn, phi_ex[bn]))
    model.meta.update(phi_exact=phi_ex, r0=r0, I0=I0, r_cpl=r_cpl)
    return model


def straight_wire_errors(model, phi, phi_bar) -> dict:
    g = model.grid
    d = float(g.upper[2] - g.lower[2])
    cs = model.couplings[0]
    sigma = float(model.materials.cell_sigma[0])
    r_bar, r0, I0 = cs.meta["r_bar"], model.meta["r0"], model.meta["I0"]
    _, pb_ex = an.analytic_straightwire(1.0, cs.wire1d.s_nodes * d, I0, sigma, r0, r_bar, d)
    w3 = an.NormWeights.build(g, omega=([0, 0, 0], [OMEGA_X * d, d, d]))
    w1 = an.NormWeights.build(g, wire1d=cs.wire1d)
    phi_ex = model.meta["phi_exact"]
    # closed-form continuous norms of the linear 1D potential a*z on [0, d]
    a = -I0 / d / (2 * np.pi * sigma) * np.log(r_bar / r0)
    n_l2 = abs(a) * np.sqrt(d ** 3 / 3.0)
    n_h1 = abs(a) * np.sqrt(d)
    return {
        "eps_L2_3D": an.error_eps(phi, phi_ex, "L2_3D", w3),
        "eps_L2_1D": an.error_eps(phi_bar[0], pb_ex, "L2_1D", w1),
        "eps_H1_1D": an.error_eps(phi_bar[0], pb_ex, "H1_1D", w1, cs.Ps),
        "delta_L2_1D": an.error_delta(phi_bar[0], n_l2, "L2_1D", w1),
        "delta_H1_1D": an.error_delta(phi_bar[0], n_h1, "H1_1D", w1, cs.Ps),
    }


def straight_wire(grid_spec: dict, params: dict, n1d: int = 33, nz=None,
                  r_cpl_rule=None, method="auto") -> CaseResult:
    model = straight_wire_model(grid_spec, params, n1d, nz, r_cpl_rule)
    phi, pb = ElectricSolver(model, method).solve()
    cs = model.couplings[0]
    return CaseResult("straight_wire", model.grid, model, phi, pb,
                      model.grid.mean_edge_length(), 1.0 / (n1d - 1),
                      straight_wire_errors(model, phi, pb),
                      {"r_cpl": cs.r_cpl, "gamma": cs.gamma})


# ---- bent wire --------------------------------------------------------------------

def bent_wire_curve(params) -> WireCurve:
    d = params["d"]
    return WireCurve.bezier(np.array(params["x0"]) * d, np.array(params["x1"]) * d,
                            params["H"] * d, up=(0.0, 1.0, 0.0))


def bent_wire_grid(n1d: int, params) -> RectilinearGrid:
    """Wire nodes, boundaries, PEC cube faces and the evaluation plane, plus
    ``floor(n1d/4)`` lines between the wire top and ``y = d`` and as many
    lines in each x-gap beside the wire plane."""
    d = params["d"]
    curve = bent_wire_curve(params)
    s = np.linspace(0, 1, n1d)
    pts = curve.point(s)
    a = 0.5 * params["d_pec"]
    cubes = [curve.x0, curve.x1]
    n_extra = n1d // 4
    n_x = n1d // int(params.get("x_line_div", 4))
    xs = [0.0, d, OMEGA_X * d] + [c[0] + sgn * a for c in cubes for sgn in (-1, 1)]
    xs += list(pts[:, 0])
    gaps = sorted(set(np.round(xs, 12)))
    extra_x = []
    for lo, hi in zip(gaps[:-1], gaps[1:]):
        if hi - lo > 4 * a:
            extra_x += list(np.linspace(lo, hi, n_x + 2)[1:-1])
    ys = [0.0, d] + list(pts[:, 1]) + [c[1] + sgn * a for c in cubes for sgn in (-1, 1)]
    ytop = float(pts[:, 1].max())
    ys += list(np.linspace(ytop, d, n_extra + 2)[1:-1])
    zs = [0.0, d] + list(pts[:, 2]) + [c[2] + sgn * a for c in cubes for sgn in (-1, 1)]
    clip = lambda v: [x for x in v if -1e-12 <= x <= d + 1e-12]
    return RectilinearGrid(merge_points([0.0, d], clip(xs + extra_x)),
                           merge_points([0.0, d], clip(ys)),
                           merge_points([0.0, d], clip(zs)))


def bent_wire_model(n1d: int, params) -> ElectrothermalModel:
    d, sigma, r_bar = params["d"], params["sigma"], params["r_bar"]
    r0 = params.get("r0") or default_r0(d)
    curve = bent_wire_curve(params)
    grid = bent_wire_grid(n1d, params)
    r_cpl = resolve_r_cpl(params.get("r_cpl", {"rule": "curvature", "factor": 1e-2}),
                          grid, curve, r_bar=r_bar)
    cs = build_coupling(grid, curve, n1d, r_cpl, r_bar, r0, params.get("n_theta", 8))
    mat = MaterialField.homogeneous(grid, sigma=sigma)
    mat.wires = [WireMaterial.uniform(n1d, params["sigma_bar_factor"] * np.pi * r_bar ** 2 * sigma)]
    a = 0.5 * params["d_pec"]
    nodes, vals = [], []
    for c, v in ((curve.x0, params["V_start"]), (curve.x1, params["V_end"])):
        mat.assign_box(grid, c - a, c + a, pec=True)
        n = np.flatnonzero(grid.box_node_mask(c - a, c + a))
        nodes.append(n)
        vals.append(np.full(n.size, float(v)))
    dset = DirichletSet(np.concatenate(nodes), np.concatenate(vals))
    model = ElectrothermalModel(grid, mat, [cs], dset)
    model.meta.update(r_cpl=r_cpl, kappa=frenet_curvature_max(curve))
    return model


def bent_wire(n1d: int, params, method="auto") -> CaseResult:
    model = bent_wire_model(n1d, params)
    phi, pb = ElectricSolver(model, method).solve()
    cs = model.couplings[0]
    return CaseResult("bent_wire", model.grid, model, phi, pb, model.grid.mean_edge_length(),
                      1.0 / (n1d - 1), {}, {"r_cpl": cs.r_cpl, "gamma": cs.gamma,
                                            "kappa": model.meta["kappa"]})


def bent_wire_delta(coarse: CaseResult, ref: CaseResult) -> dict:
    """Self-convergence measures of a coarse solution against a fine one."""
    d = float(coarse.grid.upper[0])
    cc, cf = coarse.model.couplings[0], ref.model.couplings[0]
    ub_ref = an.interpolate_1d(cf.wire1d.s_nodes, ref.phi_bar[0], cc.wire1d.s_nodes)
    u_ref = an.transfer_to_grid(ref.grid, ref.phi, coarse.grid)
    w1 = an.NormWeights.build(coarse.grid, wire1d=cc.wire1d)
    w3 = an.NormWeights.build(coarse.grid, omega=([0, 0, 0], [OMEGA_X * d, d, d]))
    return {"Delta_L2_1D": an.error_Delta(coarse.phi_bar[0], ub_ref, "L2_1D", w1),
            "Delta_H1_1D": an.error_Delta(coarse.phi_bar[0], ub_ref, "H1_1D", w1, cc.Ps),
            "Delta_L2_3D": an.error_Delta(coarse.phi, u_ref, "L2_3D", w3)}


# ---- chip package -------------------------------------------------------------------

def chip_layout(params) -> dict:
    """Pad, chip and wire geometry (coordinates centred in x and y)."""
    L = params["domain_half"]
    chip = params["chip_half"]
    z_lo, z_hi = params["pad_z"]
    pad_in = params["pad_inner"]
    pw = 0.5 * params["pad_width"]
    offs = params["pad_offsets"]
    inset = params["wire_inset"]
    land = params["wire_landing"]
    pads, wires = [], []
    for axis in (0, 1):
        for sgn in (-1.0, 1.0):
            for o in offs:
                lo, hi = np.zeros(3), np.zeros(3)
                lo[axis], hi[axis] = (pad_in, L) if sgn > 0 else (-L, -pad_in)
                lo[1 - axis], hi[1 - axis] = o - pw, o + pw
                lo[2], hi[2] = z_lo, z_hi
                pads.append((lo, hi))
                x0, x1 = np.zeros(3), np.zeros(3)
                x0[axis], x1[axis] = sgn * (chip - inset), sgn * land
                x0[1 - axis] = x1[1 - axis] = o
                x0[2] = x1[2] = z_hi
                wires.append(WireCurve.bezier(x0, x1, params["H"], up=(0, 0, 1)))
    chip_box = (np.array([-chip, -chip, z_lo]), np.array([chip, chip, z_hi]))
    return {"pads": pads, "wires": wires, "chip": chip_box}


def fill_gaps(points, max_step: float) -> np.ndarray:
    """Sorted unique feature points with every gap split into equal parts no
    longer than ``max_step``."""
    pts = np.unique(np.round(np.asarray(points, dtype=float), 12))
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil((b - a) / max_step - 1e-9)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


def chip_grid(params, layout=None, n1d: int = 4) -> RectilinearGrid:
    """Feature lines of chip, pads and wire nodes, gaps filled up to
    ``max_step``; the transverse axes are exactly mirror symmetric."""
    layout = chip_layout(params) if layout is None else layout
    L, Hz = params["domain_half"], params["domain_height"]
    step = float(params["max_step"])
    s = np.linspace(0, 1, n1d)
    xs, zs = [-L, L], [0.0, Hz]
    for lo, hi in layout["pads"] + [layout["chip"]]:
        xs += [lo[0], hi[0], lo[1], hi[1]]
        zs += [lo[2], hi[2]]
    for w in layout["wires"]:
        p = w.point(s)
        xs += list(p[:, 0]) + list(p[:, 1])
        zs += list(p[:, 2])
    # the layout is symmetric under x <-> y, so one mirrored axis serves both
    xs = np.asarray(xs)
    half = fill_gaps(np.abs(xs), step)
    ax = np.concatenate([-half[::-1], half[1:]] if half[0] == 0 else [-half[::-1], half])
    return RectilinearGrid(ax, ax, fill_gaps(zs, float(params.get("max_step_z", step))))


def chip_model(params, n1d: int = 4) -> ElectrothermalModel:
    """Chip with 12 bond wires: chip at 0 V, pads driven from their outer face."""
    layout = chip_layout(params)
    grid = chip_grid(params, layout, n1d)
    ins, cu = params["insulator"], COPPER
    r_bar = params["r_bar"]
    mat = MaterialField.homogeneous(grid, sigma=ins["sigma"], lam=ins["lambda"],
                                    rho_c=ins["rho"] * ins["c"])
    pad_nodes = []
    for lo, hi in layout["pads"] + [layout["chip"]]:
        mat.assign_box(grid, lo, hi, lam=cu["lambda"], rho_c=cu["rho"] * cu["c"], pec=True)
    for lo, hi in layout["pads"]:
        # Dirichlet on the pad face lying in the outer boundary
        m = grid.box_node_mask(lo, hi) & grid.boundary_mask
        pad_nodes.append(np.flatnonzero(m))
    chip_nodes = np.flatnonzero(grid.box_node_mask(*layout["chip"]))
    V = params["V_wire"]
    dset = DirichletSet(np.concatenate(pad_nodes + [chip_nodes]),
                        np.concatenate([np.full(n.size, V) for n in pad_nodes]
                                       + [np.zeros(chip_nodes.size)]))
    A = np.pi * r_bar ** 2
    couplings, wm = [], []
    r0 = params.get("r0") or params["domain_half"]
    for w in layout["wires"]:
        r_cpl = resolve_r_cpl(params["r_cpl"], grid, w, H=params["H"], r_bar=r_bar)
        cs = build_coupling(grid, w, n1d, r_cpl, r_bar, r0,
                            params.get("n_theta", 8))
        couplings.append(cs)
        wm.append(WireMaterial.uniform(cs.n1d, A * cu["sigma"], A * cu["lambda"]))
    mat.wires = wm
    model = ElectrothermalModel(grid, mat, couplings, dset,
                                robin=RobinData(params["h_conv"], params["T_inf"]),
                                T_init=params["T_init"])
    model.meta["layout"] = layout
    return model


def mirror_pairs(layout) -> list:
    """Index pairs of wires mapped onto each other by a coordinate mirror."""
    ws = layout["wires"]
    pairs = []
    for i, a in enumerate(ws):
        for j, b in enumerate(ws):
            if j <= i:
                continue
            for flip in (np.array([-1, 1, 1]), np.array([1, -1, 1])):
                if (np.allclose(a.x0 * flip, b.x0) and np.allclose(a.x1 * flip, b.x1)):
                    pairs.append((i, j))
                    break
    return pairs
