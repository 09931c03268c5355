"""Discrete optimality system of the penalized control problem.

Objective, Lagrangian, first derivatives, Newton blocks and active sets for

    min  1/2 |y - y_d|_M^2 + l1/2 u^T K u + l2/2 u^T M u
         + 1/(2 eps) |(u_a - u)_+|_Ml^2 + 1/(2 eps) |(u - u_b)_+|_Ml^2
    s.t. e(y, u) = 0,

where ``Ml`` is the lumped mass matrix and ``e`` the discrete state
equation from :mod:`kirchhoff_ocp.forward`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import BPoly

from .fem import FemOperators
from .forward import inv_coeff, nonlocal_coeff, residual_state
from .linalg import CompositeOperator


@dataclass(frozen=True)
class ProblemData:
    """Nodal problem data.  ``u_b`` entries may be ``inf`` (no upper bound)."""

    f: np.ndarray
    b: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray
    y_d: np.ndarray
    lambda1: float = 0.0
    lambda2: float = 4e-5
    epsilon: float = 1e-2

    def __post_init__(self):
        n = len(self.f)
        for name in ("f", "b", "u_a", "u_b", "y_d"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (n,):
                raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
            object.__setattr__(self, name, v)
        if not np.all(np.isfinite(self.f)) or not np.all(np.isfinite(self.y_d)):
            raise ValueError("f and y_d must be finite")
        if not np.all(np.isfinite(self.u_a)) or np.any(self.u_a <= 0):
            raise ValueError("u_a must be finite and positive")
        if np.any(np.isnan(self.u_b)) or np.any(self.u_b < self.u_a):
            raise ValueError("u_b must satisfy u_b >= u_a")
        if np.any(self.b < 0) or not np.all(np.isfinite(self.b)):
            raise ValueError("b must be finite and nonnegative")
        if self.lambda1 < 0 or self.lambda2 <= 0:
            raise ValueError("need lambda1 >= 0 and lambda2 > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def with_epsilon(self, epsilon) -> "ProblemData":
        return replace(self, epsilon=float(epsilon))


@dataclass(frozen=True)
class Iterate:
    y: np.ndarray
    u: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ("y", "u", "p"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"iterate component {name} is not finite")
            object.__setattr__(self, name, v)

    def stacked(self):
        return np.concatenate([self.y, self.u, self.p])

    @classmethod
    def unstack(cls, x):
        y, u, p = np.split(np.asarray(x), 3)
        return cls(y, u, p)


@dataclass(frozen=True)
class ActiveSets:
    lower: np.ndarray
    upper: np.ndarray

    @property
    def combined(self):
        """Diagonal of ``D_A``; 2 where both bounds coincide and are active."""
        return self.lower.astype(float) + self.upper.astype(float)


def active_sets(u, data: ProblemData) -> ActiveSets:
    # ties count as active; u - inf = -inf is never active
    return ActiveSets(lower=(data.u_a - u) >= 0, upper=(u - data.u_b) >= 0)


def positive_part(v):
    return np.maximum(v, 0.0)


def bound_violation(u, data: ProblemData):
    """Maximal positive nodal values of ``u_a - u`` and ``u - u_b``."""
    return float(positive_part(data.u_a - u).max()), float(positive_part(u - data.u_b).max())


def penalty(u, data: ProblemData, ops: FemOperators) -> float:
    lo = positive_part(data.u_a - u)
    up = positive_part(u - data.u_b)
    return float(lo @ (ops.M_lumped * lo) + up @ (ops.M_lumped * up)) / (2 * data.epsilon)


def objective(y, u, data: ProblemData, ops: FemOperators) -> float:
    r = y - data.y_d
    return (
        0.5 * float(r @ (ops.M @ r))
        + 0.5 * data.lambda1 * float(u @ (ops.K @ u))
        + 0.5 * data.lambda2 * float(u @ (ops.M @ u))
        + penalty(u, data, ops)
    )


def lagrangian(it: Iterate, data: ProblemData, ops: FemOperators) -> float:
    return objective(it.y, it.u, data, ops) + float(it.p @ residual_state(it.y, it.u, ops, data.f, data.b))


def _nonlocal_terms(it: Iterate, data: ProblemData, ops: FemOperators):
    """Shared pieces: ``K y``, weighted adjoint ``w = Ml F P_O p`` and the
    interior inverse powers of D."""
    D = nonlocal_coeff(it.y, it.u, data.b, ops.K)
    inv1 = inv_coeff(D, ops.interior)
    Ky = ops.K @ it.y
    w = ops.M_lumped * data.f * np.where(ops.interior, it.p, 0.0)
    return Ky, w, inv1 ** 2, inv1 ** 3


def grad_y(it: Iterate, data: ProblemData, ops: FemOperators):
    Ky, w, inv2, _ = _nonlocal_terms(it, data, ops)
    pint = np.where(ops.interior, it.p, 0.0)
    c = float(np.sum(inv2 * data.b * w))
    g = ops.M @ (it.y - data.y_d) + ops.K @ pint + 2.0 * c * Ky
    g[ops.boundary] += it.p[ops.boundary]
    return g


def grad_u(it: Iterate, data: ProblemData, ops: FemOperators):
    _, w, inv2, _ = _nonlocal_terms(it, data, ops)
    u = it.u
    g = data.lambda1 * (ops.K @ u) + data.lambda2 * (ops.M @ u)
    g -= ops.M_lumped * positive_part(data.u_a - u) / data.epsilon
    g += ops.M_lumped * positive_part(u - data.u_b) / data.epsilon
    return g + inv2 * w


@dataclass
class NewtonBlocks:
    e_y: CompositeOperator
    e_u: CompositeOperator
    L_yy: CompositeOperator
    L_yu: CompositeOperator
    L_uu: CompositeOperator
    active: ActiveSets

    def system(self):
        """Block layout of the symmetric Newton matrix for ``(dy, du, dp)``."""
        return [
            [self.L_yy, self.L_yu, self.e_y.T],
            [self.L_yu.T, self.L_uu, self.e_u.T],
            [self.e_y, self.e_u, None],
        ]


def newton_blocks(it: Iterate, data: ProblemData, ops: FemOperators) -> NewtonBlocks:
    Ky, w, inv2, inv3 = _nonlocal_terms(it, data, ops)
    b, n = data.b, ops.n
    c2 = float(np.sum(inv2 * b * w))
    c3 = float(np.sum(inv3 * b * b * w))
    interior = ops.interior.astype(float)
    act = active_sets(it.u, data)

    e_y = CompositeOperator(
        sp.diags(interior) @ ops.K + sp.diags(ops.boundary.astype(float)),
        lowrank_terms=[(2.0 * ops.M_lumped * data.f * b * inv2, Ky)],
    )
    e_u = CompositeOperator(sp.diags(ops.M_lumped * data.f * inv2))
    L_yy = CompositeOperator(ops.M, scalar_terms=[(2.0 * c2, ops.K)],
                             lowrank_terms=[(-8.0 * c3 * Ky, Ky)])
    L_yu = CompositeOperator(sp.csr_matrix((n, n)), lowrank_terms=[(-4.0 * Ky, w * b * inv3)])
    L_uu = CompositeOperator(
        data.lambda2 * ops.M + sp.diags(act.combined * ops.M_lumped / data.epsilon - 2.0 * w * inv3),
        scalar_terms=[(data.lambda1, ops.K)] if data.lambda1 else [],
    )
    return NewtonBlocks(e_y, e_u, L_yy, L_yu, L_uu, act)


def max_newton_derivative(u, du):
    """Newton derivative of ``max(0, .)`` at ``u`` applied to ``du``."""
    return np.where(np.asarray(u) > 0, du, 0.0)


class CutoffFamily:
    """Smooth monotone replacement of the positive part.

    Identity above ``eps``, zero below ``-eps`` and the degree-7 Hermite
    interpolant matching value and three derivatives at ``+-eps`` in between.
    That interpolant turns out to be the antiderivative of the quintic
    smoothstep (its degree-7 coefficient vanishes), hence convex.
    """

    def __init__(self, epsilon):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = float(epsilon)
        e = self.epsilon
        self._poly = BPoly.from_derivatives([-e, e], [[0.0, 0.0, 0.0, 0.0], [e, 1.0, 0.0, 0.0]])
        self._check()

    def _check(self):
        t = np.linspace(-self.epsilon, self.epsilon, 2001)
        d1 = self._poly(t, 1)
        tol = 1e-12
        if d1.min() < -tol or d1.max() > 1 + tol:
            raise ValueError("cutoff derivative leaves [0, 1]")

    def __call__(self, t, nu=0):
        """Value (``nu=0``) or derivative of order ``nu`` at ``t``."""
        t = np.asarray(t, dtype=float)
        e = self.epsilon
        if nu == 0:
            outside = np.where(t > e, t, 0.0)
        elif nu == 1:
            outside = np.where(t > e, 1.0, 0.0)
        else:
            outside = np.zeros_like(t)
        inside = (t >= -e) & (t <= e)
        return np.where(inside, self._poly(np.clip(t, -e, e), nu), outside)


def cutoff_eval(chi: CutoffFamily, t):
    return chi(t), chi(t, 1), chi(t, 2)
