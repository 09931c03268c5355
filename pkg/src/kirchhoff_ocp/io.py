"""Field and table output: legacy ASCII VTK and CSV."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .mesh import Mesh

VTK_TRIANGLE = 5


def format_value(v) -> str:
    """Integers verbatim, floats in scientific notation with 17 digits
    (enough to round-trip every double)."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError("row length does not match header")
            w.writerow([format_value(v) for v in row])


def read_csv(path):
    """Header and rows with every entry parsed as float."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(v) for v in row] for row in r]


def write_field_csv(path, mesh: Mesh, values) -> None:
    x, y = mesh.vertices.T
    write_csv(path, ["x", "y", "value"], zip(x, y, np.asarray(values, dtype=float)))


def write_vtk(path, mesh: Mesh, fields: dict, title="kirchhoff_ocp field") -> None:
    """Legacy ASCII unstructured grid with one scalar per named point field."""
    nv, nt = mesh.n_vertices, mesh.n_triangles
    out = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    out += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist()]
    out.append(f"CELLS {nt} {4 * nt}")
    out += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    out.append(f"CELL_TYPES {nt}")
    out += [str(VTK_TRIANGLE)] * nt
    out.append(f"POINT_DATA {nv}")
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        if values.shape != (nv,):
            raise ValueError(f"field {name!r} has shape {values.shape}, expected ({nv},)")
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out += [repr(v) for v in values.tolist()]
    Path(path).write_text("\n".join(out) + "\n")


def read_vtk_point_data(path):
    """Minimal reader for files written by :func:`write_vtk`."""
    lines = Path(path).read_text().splitlines()
    i = 0
    points = cells = None
    fields = {}
    while i < len(lines):
        tok = lines[i].split()
        if tok and tok[0] == "POINTS":
            n = int(tok[1])
            points = np.array([[float(a) for a in ln.split()] for ln in lines[i + 1 : i + 1 + n]])
            i += n
        elif tok and tok[0] == "CELLS":
            n = int(tok[1])
            cells = np.array([[int(a) for a in ln.split()[1:]] for ln in lines[i + 1 : i + 1 + n]])
            i += n
        elif tok and tok[0] == "SCALARS":
            n = len(points)
            fields[tok[1]] = np.array([float(v) for v in lines[i + 2 : i + 2 + n]])
            i += n + 1
        i += 1
    return points, cells, fields
