"""P1 finite element operators on a triangle mesh."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, signed_areas

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True)
class FemOperators:
    """Assembled P1 matrices.

    ``M_lumped`` holds the diagonal of the lumped mass matrix and
    ``boundary`` the diagonal of the boundary projector; the interior
    projector is its complement.
    """

    M: sp.csr_matrix
    K: sp.csr_matrix
    M_lumped: np.ndarray
    boundary: np.ndarray

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary

    @property
    def P_gamma(self) -> sp.dia_matrix:
        return sp.diags(self.boundary.astype(float))

    @property
    def P_omega(self) -> sp.dia_matrix:
        return sp.diags(self.interior.astype(float))

    @property
    def KM(self) -> sp.csc_matrix:
        """K + M, the Gram matrix of the discrete H1 inner product."""
        return (self.K + self.M).tocsc()


def element_matrices(p):
    """Stiffness and mass matrices of one affine triangle with corners ``p``
    (shape (3, 2), counter-clockwise)."""
    p = np.asarray(p, dtype=float)
    area = signed_areas(p, np.array([[0, 1, 2]]))[0]
    if area <= 0:
        raise ValueError("degenerate or clockwise triangle")
    # gradient of barycentric coordinate i is the rotated opposite edge / (2A)
    e = np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)  # edge opposite vertex i
    grads = np.column_stack([e[:, 1], -e[:, 0]]) / (2 * area)
    return area * grads @ grads.T, area * _MASS_REF


def assemble(mesh: Mesh) -> FemOperators:
    t = mesh.triangles
    p = mesh.vertices[t]  # (N_T, 3, 2)
    area = signed_areas(mesh.vertices, t)
    if np.any(area <= 0):
        raise ValueError("degenerate (zero-area) triangle in mesh")
    e = np.roll(p, -1, axis=1) - np.roll(p, 1, axis=1)
    grads = np.stack([e[..., 1], -e[..., 0]], axis=-1) / (2 * area)[:, None, None]
    Ke = area[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)
    Me = area[:, None, None] * _MASS_REF[None]

    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    # exact symmetry, independent of summation order
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    lumped = np.asarray(M.sum(axis=1)).ravel()
    boundary = np.array(mesh.boundary_vertex, dtype=bool)
    for a in (lumped, boundary):
        a.setflags(write=False)
    return FemOperators(M=M, K=K, M_lumped=lumped, boundary=boundary)


def interpolate_nodal(mesh: Mesh, g) -> np.ndarray:
    """Nodal interpolant of ``g(x, y)``; ``g`` may also be a constant.

    ``+inf`` values are allowed (used for absent upper bounds), NaN and
    ``-inf`` are not.
    """
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    if callable(g):
        vals = np.broadcast_to(np.asarray(g(x, y), dtype=float), x.shape).copy()
    else:
        vals = np.full(x.shape, float(g))
    if np.any(np.isnan(vals)) or np.any(vals == -np.inf):
        raise ValueError("coefficient function is not finite at some vertex")
    return vals
