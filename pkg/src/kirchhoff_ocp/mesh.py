"""Two-dimensional conforming triangulations.

Meshes are stored as plain index arrays.  The boundary is detected from edge
multiplicities, so imported unstructured meshes work the same way as the
structured grids produced by :func:`generate_rect`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Raised for malformed or non-conforming triangulations."""


class MeshWarning(UserWarning):
    """Emitted for suspicious but usable triangulations."""


def _edge_table(triangles):
    """Unique sorted edges and how many triangles share each one."""
    e = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    edges, counts = np.unique(e, axis=0, return_counts=True)
    return edges, counts


def signed_areas(vertices, triangles):
    p0, p1, p2 = (vertices[triangles[:, k]] for k in range(3))
    d1 = p1 - p0
    d2 = p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation with counter-clockwise triangles.

    Attributes
    ----------
    vertices : (N_V, 2) float array
    triangles : (N_T, 3) int array of 0-based vertex indices
    boundary_vertex : (N_V,) bool array
    edges : (N_E, 2) int array of unique edges, each sorted
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, vertices, triangles, *, reorient=False) -> "Mesh":
        """Validate raw arrays and build a mesh.

        With ``reorient=True`` clockwise triangles are flipped instead of
        rejected.  Zero-area triangles are always an error.
        """
        vertices = np.array(vertices, dtype=float, copy=True)
        triangles = np.array(triangles, dtype=np.int64, copy=True)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError(f"vertices must have shape (N, 2), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError(f"triangles must have shape (N, 3), got {triangles.shape}")
        if len(triangles) == 0:
            raise MeshError("mesh has no triangles")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinate")
        nv = len(vertices)
        if triangles.min() < 0 or triangles.max() >= nv:
            raise MeshError(f"triangle index out of range [0, {nv})")

        area = signed_areas(vertices, triangles)
        scale = np.ptp(vertices, axis=0).prod() or 1.0
        if np.any(np.abs(area) <= 1e-14 * scale):
            raise MeshError("degenerate (zero-area) triangle")
        if np.any(area < 0):
            if not reorient:
                raise MeshError("clockwise triangle found")
            flip = area < 0
            triangles[flip] = triangles[flip][:, [0, 2, 1]]

        edges, counts = _edge_table(triangles)
        if np.any(counts > 2):
            warnings.warn(
                f"{int(np.sum(counts > 2))} edges are shared by more than two "
                "triangles (duplicated or overlapping triangles?)",
                MeshWarning,
                stacklevel=2,
            )
        boundary = np.zeros(nv, dtype=bool)
        boundary[edges[counts == 1].ravel()] = True
        _check_hanging_nodes(vertices, edges[counts == 1], boundary)

        for a in (vertices, triangles, boundary, edges):
            a.setflags(write=False)
        return cls(vertices, triangles, boundary, edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    def euler_characteristic(self) -> int:
        """N_V - N_E + N_T, equal to 1 for a simply connected domain."""
        return self.n_vertices - self.n_edges + self.n_triangles

    def boundary_edges(self) -> np.ndarray:
        edges, counts = _edge_table(self.triangles)
        return edges[counts == 1]


def _check_hanging_nodes(vertices, bedges, on_boundary):
    """Reject vertices lying strictly inside a single-sided edge.

    Such a vertex is the signature of a non-conforming (hanging node)
    triangulation.  Only vertices already flagged as boundary are candidates.
    """
    cand = np.flatnonzero(on_boundary)
    if len(bedges) == 0 or len(cand) == 0:
        return
    q = vertices[cand]
    for chunk in np.array_split(np.arange(len(bedges)), max(1, len(bedges) // 256)):
        a = vertices[bedges[chunk, 0]][:, None, :]
        b = vertices[bedges[chunk, 1]][:, None, :]
        d = b - a
        L2 = np.sum(d * d, axis=-1)
        t = np.sum((q[None] - a) * d, axis=-1) / L2
        cross = d[..., 0] * (q[None, :, 1] - a[..., 1]) - d[..., 1] * (q[None, :, 0] - a[..., 0])
        on_seg = (np.abs(cross) <= 1e-12 * L2) & (t > 1e-12) & (t < 1 - 1e-12)
        if np.any(on_seg):
            raise MeshError("non-conforming triangulation: hanging node on an edge")


def generate_rect(xmin, xmax, ymin, ymax, n) -> Mesh:
    """Structured n-by-n grid of a rectangle, every cell split along the
    lower-left to upper-right diagonal.  (n+1)**2 vertices, 2 n**2 triangles.
    """
    if int(n) != n or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    if not (xmin < xmax and ymin < ymax):
        raise MeshError("degenerate rectangle")
    n = int(n)
    xs = np.linspace(xmin, xmax, n + 1)
    ys = np.linspace(ymin, ymax, n + 1)
    X, Y = np.meshgrid(xs, ys)  # row index is y
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ll = (j * (n + 1) + i).ravel()
    lr = ll + 1
    ul = ll + n + 1
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return Mesh.from_arrays(vertices, triangles)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: split every triangle into four via edge midpoints.

    New vertices are appended after the parent vertices in the order of
    ``mesh.edges``, so parent vertex indices are preserved.
    """
    nv = mesh.n_vertices
    edges = mesh.edges
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mid])

    # edge id lookup through a sorted key
    key = edges[:, 0] * nv + edges[:, 1]
    order = np.argsort(key)

    def edge_id(a, b):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        pos = np.searchsorted(key, lo * nv + hi, sorter=order)
        return nv + order[pos]

    t = mesh.triangles
    v0, v1, v2 = t[:, 0], t[:, 1], t[:, 2]
    m01, m12, m20 = edge_id(v0, v1), edge_id(v1, v2), edge_id(v2, v0)
    children = np.stack(
        [
            np.column_stack([v0, m01, m20]),
            np.column_stack([m01, v1, m12]),
            np.column_stack([m20, m12, v2]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh.from_arrays(vertices, children)


def refine(mesh: Mesh, times: int) -> Mesh:
    for _ in range(times):
        mesh = refine_uniform(mesh)
    return mesh


def save_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text format: header ``N_V N_T``, then vertex lines
    ``x y`` and triangle lines ``i j k``."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def load_mesh(path, *, reorient=True) -> Mesh:
    text = Path(path).read_text().split("\n")
    rows = [ln.split() for ln in text if ln.strip()]
    try:
        nv, nt = (int(v) for v in rows[0])
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: bad header line") from exc
    if len(rows) != 1 + nv + nt:
        raise MeshError(f"{path}: expected {1 + nv + nt} non-empty lines, found {len(rows)}")
    try:
        vertices = np.array([[float(a) for a in r] for r in rows[1 : 1 + nv]])
        triangles = np.array([[int(a) for a in r] for r in rows[1 + nv :]], dtype=np.int64)
    except ValueError as exc:
        raise MeshError(f"{path}: malformed entry") from exc
    if vertices.shape != (nv, 2) or triangles.shape != (nt, 3):
        raise MeshError(f"{path}: wrong number of columns")
    return Mesh.from_arrays(vertices, triangles, reorient=reorient)
