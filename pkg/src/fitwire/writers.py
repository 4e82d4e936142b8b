"""Deterministic output: legacy VTK rectilinear grids and CSV tables."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .mesh import RectilinearGrid


def _fmt(v) -> str:
    # repr gives the shortest string that parses back to the same double
    return repr(float(v))


def write_vtk(path, grid: RectilinearGrid, point_data: dict, title: str = "fitwire field"):
    """Write nodal scalars on a rectilinear grid in the legacy ASCII format."""
    path = Path(path)
    n = grid.n_nodes
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " "), "ASCII",
             "DATASET RECTILINEAR_GRID", "DIMENSIONS {} {} {}".format(*grid.shape)]
    for name, a in zip("XYZ", grid.axes):
        lines.append(f"{name}_COORDINATES {a.size} double")
        lines.append(" ".join(_fmt(v) for v in a))
    lines.append(f"POINT_DATA {n}")
    for name in sorted(point_data):
        v = np.asarray(point_data[name], dtype=float).ravel()
        if v.size != n:
            raise ValueError(f"field {name!r} has {v.size} values for {n} nodes")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [" ".join(_fmt(x) for x in v[i:i + 8]) for i in range(0, n, 8)]
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    return path


def read_vtk(path):
    """Read a file written by :func:`write_vtk`; returns ``(axes, fields)``."""
    tok = Path(path).read_text(encoding="ascii").split("\n")
    it = iter(tok[4:])
    dims = [int(x) for x in next(it).split()[1:]]
    axes = []
    for k in range(3):
        hdr = next(it).split()
        axes.append(np.array([float(x) for x in next(it).split()]))
        if int(hdr[1]) != dims[k]:
            raise ValueError("inconsistent coordinate header")
    n = int(next(it).split()[1])
    fields = {}
    for line in it:
        if not line.startswith("SCALARS"):
            continue
        name = line.split()[1]
        next(it)
        vals = []
        while len(vals) < n:
            vals += [float(x) for x in next(it).split()]
        fields[name] = np.array(vals)
    return axes, fields


def write_csv(path, header, rows):
    """RFC-4180 style CSV with LF line endings and round-trip float text."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return Path(path)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def wire_rows(couplings, phi_bar, T_bar=None):
    rows = []
    for i, c in enumerate(couplings):
        arc = np.concatenate([[0.0], np.cumsum(c.wire1d.element_arclen)])
        tb = T_bar[i] if T_bar is not None else np.full(c.n1d, np.nan)
        for k in range(c.n1d):
            rows.append([i, float(c.wire1d.s_nodes[k]), float(arc[k]),
                         float(phi_bar[i][k]), float(tb[k])])
    return rows


def write_wire_csv(path, couplings, phi_bar, T_bar=None):
    """One row per 1D node of every wire."""
    return write_csv(path, ["wire", "s", "arc_length", "phi_bar", "T_bar"],
                     wire_rows(couplings, phi_bar, T_bar))


def write_fields(path_stem, grid, couplings, phi, phi_bar, T=None, T_bar=None):
    """Write ``<stem>.vtk`` and ``<stem>_wires.csv``; returns both paths."""
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data = {"phi": phi} if T is None else {"phi": phi, "T": T}
    v = write_vtk(stem.with_suffix(".vtk"), grid, data)
    c = write_wire_csv(stem.parent / (stem.name + "_wires.csv"), couplings, phi_bar, T_bar)
    return v, c
