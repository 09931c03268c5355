"""Discrete nonlocal Kirchhoff state equation.

For a fixed energy ``s`` the equation is a linear Poisson problem.  The
state is recovered from the root of the scalar function
``g(s) = s - y(s)^T K y(s)``, which is increasing for ``f, b >= 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .fem import FemOperators
from .linalg import Factorization, InvNorm

log = logging.getLogger(__name__)


class ForwardError(RuntimeError):
    """The state equation could not be solved."""


class CoefficientError(ForwardError):
    """``u_i + b_i s`` is not positive at some interior node."""


@dataclass(frozen=True)
class ForwardConfig:
    tol: float = 1e-10
    max_iter: int = 200
    bracket_growth: float = 2.0
    u_floor: float = 1e-12

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.bracket_growth > 1:
            raise ValueError("bracket_growth must exceed 1")


def nonlocal_coeff(y, u, b, K):
    """Diagonal of ``D(y, u) = diag(u) + (y^T K y) diag(b)``."""
    s = float(y @ (K @ y))
    return u + s * b


def inv_coeff(D, interior, power=1, floor=0.0):
    """Interior entries of ``D**-power``, zero on the boundary.

    Boundary entries of ``D`` are always multiplied by the interior
    projector, so they never need to be positive.
    """
    Di = D[interior]
    if np.any(~(Di > floor)):
        bad = int(np.sum(~(Di > floor)))
        raise CoefficientError(f"nonpositive coefficient u + b s at {bad} interior nodes")
    out = np.zeros_like(D)
    out[interior] = Di ** (-power)
    return out


def residual_state(y, u, ops: FemOperators, f, b):
    """``e(y, u) = P_O K y - P_O Ml F D^-1 1 + P_G y``."""
    D = nonlocal_coeff(y, u, b, ops.K)
    Dinv = inv_coeff(D, ops.interior)
    e = ops.K @ y - ops.M_lumped * f * Dinv
    e[ops.boundary] = y[ops.boundary]
    return e


class StateSolver:
    """Solves the state equation for many controls on one set of operators.

    The interior stiffness block and the ``K + M`` Gram matrix are factored
    once.
    """

    def __init__(self, ops: FemOperators, f, b, cfg: ForwardConfig | None = None, hnorm=None):
        self.ops = ops
        self.f = np.asarray(f, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.cfg = cfg or ForwardConfig()
        self._idx = np.flatnonzero(ops.interior)
        Kii = ops.K[self._idx][:, self._idx]
        self._kfac = Factorization(Kii.tocsc())
        self.hnorm = hnorm or InvNorm(ops.KM)
        self._load = ops.M_lumped * self.f

    def poisson(self, rhs):
        """``y`` with ``y = 0`` on the boundary and ``K y = rhs`` inside."""
        y = np.zeros(self.ops.n)
        y[self._idx] = self._kfac.solve(rhs[self._idx])
        return y

    def state_at(self, s, u):
        """Solution of the linearised problem with the energy frozen at ``s``."""
        D = u + s * self.b
        return self.poisson(self._load * inv_coeff(D, self.ops.interior, floor=self.cfg.u_floor))

    def g(self, s, u):
        y = self.state_at(s, u)
        return s - float(y @ (self.ops.K @ y))

    def residual(self, y, u):
        return residual_state(y, u, self.ops, self.f, self.b)

    def residual_norm(self, y, u):
        return self.hnorm(self.residual(y, u))

    def solve(self, u, y_init=None):
        u = np.asarray(u, dtype=float)
        cfg = self.cfg
        # the coefficient is affine in s, so checking both ends covers the range
        inv_coeff(u, self.ops.interior, floor=cfg.u_floor)

        lo, hi = 0.0, None
        g_lo = self.g(0.0, u)
        if g_lo == 0.0:
            return self._finish(0.0, u)
        if y_init is not None:
            hint = float(y_init @ (self.ops.K @ y_init))
            if hint > 0:
                try:
                    gh = self.g(hint, u)
                except CoefficientError:
                    gh = None
                if gh is not None:
                    if gh <= 0:
                        lo = hint
                    else:
                        hi = hint
        if hi is None:
            hi = max(1.0, 2 * lo)
            for _ in range(cfg.max_iter):
                if self.g(hi, u) > 0:
                    break
                lo, hi = hi, hi * cfg.bracket_growth
            else:
                raise ForwardError("could not bracket the energy root")
        try:
            s, info = brentq(self.g, lo, hi, args=(u,), xtol=1e-300, rtol=4 * np.finfo(float).eps,
                             maxiter=cfg.max_iter, full_output=True, disp=False)
        except ValueError as exc:
            raise ForwardError(str(exc)) from exc
        if not info.converged:
            raise ForwardError(f"scalar root search did not converge in {cfg.max_iter} iterations")
        return self._finish(s, u)

    def _finish(self, s, u):
        y = self.state_at(s, u)
        res = self.residual_norm(y, u)
        log.debug("forward solve: s=%.16e residual=%.3e", s, res)
        if not res <= self.cfg.tol:
            raise ForwardError(f"state residual {res:.3e} above tolerance {self.cfg.tol:.1e}")
        return y


def solve_state(u, ops, f, b, cfg: ForwardConfig | None = None, y_init=None):
    return StateSolver(ops, f, b, cfg).solve(u, y_init)
