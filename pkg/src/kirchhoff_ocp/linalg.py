"""Sparse direct solves and sparse-plus-low-rank operators.

The nonlocal coupling makes several Newton blocks dense, but each one is a
sparse matrix plus a handful of rank-one terms.  :class:`CompositeOperator`
keeps that structure, and :func:`solve_block_system` solves a block system
of such operators exactly by bordering: every rank-one term ``l r^T`` gets
an auxiliary unknown ``t = r^T x`` so the enlarged matrix stays sparse.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_RTOL = 1e-10


class SolveError(RuntimeError):
    """A direct solve failed or did not reach the residual tolerance."""


@dataclass
class CompositeOperator:
    """``base + sum(c * S) + sum(left @ right.T)`` without densifying."""

    base: sp.spmatrix
    scalar_terms: list = field(default_factory=list)
    lowrank_terms: list = field(default_factory=list)

    def __post_init__(self):
        self.base = sp.csr_matrix(self.base)
        shape = self.base.shape
        for c, S in self.scalar_terms:
            if S.shape != shape:
                raise ValueError("scalar term shape mismatch")
        for left, right in self.lowrank_terms:
            if left.shape != (shape[0],) or right.shape != (shape[1],):
                raise ValueError("low-rank term shape mismatch")

    @property
    def shape(self):
        return self.base.shape

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        out = self.base @ v
        for c, S in self.scalar_terms:
            out = out + c * (S @ v)
        for left, right in self.lowrank_terms:
            out = out + left * (right @ v)
        return out

    __matmul__ = apply

    @property
    def T(self) -> "CompositeOperator":
        return CompositeOperator(
            self.base.T,
            [(c, S.T) for c, S in self.scalar_terms],
            [(r, l) for l, r in self.lowrank_terms],
        )

    def sparse_part(self) -> sp.csr_matrix:
        A = self.base.copy()
        for c, S in self.scalar_terms:
            A = A + c * S
        return sp.csr_matrix(A)

    def to_dense(self) -> np.ndarray:
        A = self.sparse_part().toarray()
        for left, right in self.lowrank_terms:
            A += np.outer(left, right)
        return A

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.apply, rmatvec=self.T.apply, dtype=float)


def as_composite(A) -> CompositeOperator:
    if isinstance(A, CompositeOperator):
        return A
    return CompositeOperator(sp.csr_matrix(A))


class Factorization:
    """Reusable LU factorization of a sparse or dense square matrix."""

    def __init__(self, A, *, symmetric=False):
        if A.shape[0] != A.shape[1]:
            raise SolveError(f"matrix is not square: {A.shape}")
        self.shape = A.shape
        if sp.issparse(A):
            A = sp.csc_matrix(A, dtype=float)
            self._A = A
            opts = {}
            if symmetric:
                opts = dict(permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                            options=dict(SymmetricMode=True))
            try:
                self._lu = spla.splu(A, **opts)
            except RuntimeError as exc:
                raise SolveError(f"sparse factorization failed: {exc}") from exc
            self._dense = False
            u = self._lu.U.diagonal()
        else:
            A = np.asarray(A, dtype=float)
            self._A = A
            with warnings.catch_warnings():
                # singularity is reported below as SolveError
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self._lu = sla.lu_factor(A, check_finite=True)
            self._dense = True
            u = np.diag(self._lu[0])
        if not np.all(np.isfinite(u)) or np.any(u == 0):
            raise SolveError("matrix is singular to working precision")
        self.pivots = u

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self._dense:
            return sla.lu_solve(self._lu, b)
        return self._lu.solve(b)

    def is_positive_definite(self) -> bool:
        """Pivot signs; only meaningful for a symmetric factorization
        without row pivoting (``symmetric=True``)."""
        if self._dense:
            return False
        same = np.array_equal(self._lu.perm_r, self._lu.perm_c)
        return bool(same and np.all(self.pivots > 0))


def _check_residual(apply, x, rhs, rtol=RESIDUAL_RTOL):
    r = apply(x) - rhs
    res = np.linalg.norm(r)
    if not np.isfinite(res) or res > rtol * (1.0 + np.linalg.norm(rhs)):
        raise SolveError(f"direct solve residual {res:.3e} exceeds tolerance")
    return r


def solve_direct(A, rhs, *, refine_steps=2):
    """Solve ``A x = rhs`` and verify ``|A x - rhs| <= 1e-10 (1 + |rhs|)``.

    ``A`` may be a sparse matrix, a dense array or a
    :class:`CompositeOperator` (densified).  Up to ``refine_steps`` rounds of
    iterative refinement are spent before giving up.
    """
    if isinstance(A, CompositeOperator):
        A = A.to_dense()
    rhs = np.asarray(rhs, dtype=float)
    fac = Factorization(A)
    x = fac.solve(rhs)
    return _refine(lambda v: A @ v, fac.solve, x, rhs, refine_steps)


def _refine(apply, solve, x, rhs, steps):
    for k in range(steps + 1):
        try:
            _check_residual(apply, x, rhs)
            return x
        except SolveError:
            if k == steps:
                raise
        x = x - solve(apply(x) - rhs)
    return x


class InvNorm:
    """``v -> sqrt(v^T A^{-1} v)`` for a fixed symmetric positive definite A."""

    def __init__(self, A):
        self.A = sp.csc_matrix(A)
        self._fac = Factorization(self.A, symmetric=True)
        if not self._fac.is_positive_definite():
            raise SolveError("matrix is not positive definite")

    def solve(self, v):
        return self._fac.solve(v)

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        q = float(v @ self._fac.solve(v))
        if q < 0:
            if q < -1e-13 * (v @ v):
                raise SolveError("negative quadratic form; matrix is indefinite")
            q = 0.0
        return float(np.sqrt(q))


def inv_norm(A, v) -> float:
    return InvNorm(A)(v)


def block_apply(blocks, x, sizes):
    """Apply a block matrix of operators (``None`` = zero block)."""
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    parts = [x[offsets[j] : offsets[j + 1]] for j in range(len(sizes))]
    out = []
    for i, row in enumerate(blocks):
        acc = np.zeros(sizes[i])
        for j, B in enumerate(row):
            if B is not None:
                acc += B @ parts[j]
        out.append(acc)
    return np.concatenate(out)


def block_to_dense(blocks, sizes):
    rows = []
    for i, row in enumerate(blocks):
        rows.append(np.hstack([
            np.zeros((sizes[i], sizes[j])) if B is None else as_composite(B).to_dense()
            for j, B in enumerate(row)
        ]))
    return np.vstack(rows)


def bordered_matrix(blocks, sizes):
    """Sparse bordered form of a block system of composite operators.

    Returns ``(A, n)``: the first ``n`` unknowns of ``A`` are the original
    ones, the trailing ones are the auxiliary scalars ``t_k = r_k^T x_j``.
    """
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    n = int(offsets[-1])
    sparse_rows = []
    extra_cols, extra_rows = [], []
    for i, row in enumerate(blocks):
        srow = []
        for j, B in enumerate(row):
            if B is None:
                srow.append(None)
                continue
            C = as_composite(B)
            srow.append(C.sparse_part())
            for left, right in C.lowrank_terms:
                col = np.zeros(n)
                col[offsets[i] : offsets[i + 1]] = left
                r = np.zeros(n)
                r[offsets[j] : offsets[j + 1]] = right
                extra_cols.append(col)
                extra_rows.append(r)
        sparse_rows.append(srow)
    core = sp.bmat(sparse_rows, format="csr")
    m = len(extra_cols)
    if m == 0:
        return core.tocsc(), n
    U = sp.csr_matrix(np.column_stack(extra_cols))
    V = sp.csr_matrix(np.vstack(extra_rows))
    A = sp.bmat([[core, U], [V, -sp.identity(m)]], format="csc")
    return A, n


def solve_block_system(blocks, rhs, sizes, *, refine_steps=2):
    """Direct solve of a block system whose blocks are sparse-plus-low-rank.

    The residual is checked against the unbordered operator.
    """
    A, n = bordered_matrix(blocks, sizes)
    fac = Factorization(A)
    m = A.shape[0] - n

    def solve(r):
        return fac.solve(np.concatenate([r, np.zeros(m)]))[:n]

    rhs = np.asarray(rhs, dtype=float)
    x = solve(rhs)
    return _refine(lambda v: block_apply(blocks, v, sizes), solve, x, rhs, refine_steps)
