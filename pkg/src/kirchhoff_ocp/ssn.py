"""Damped semismooth Newton method with a nonlinear state update."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fem import FemOperators
from .forward import ForwardConfig, ForwardError, StateSolver
from .linalg import InvNorm, solve_block_system
from .optsys import (
    Iterate,
    ProblemData,
    active_sets,
    grad_u,
    grad_y,
    newton_blocks,
)

log = logging.getLogger(__name__)


class SsnError(RuntimeError):
    pass


@dataclass(frozen=True)
class SsnConfig:
    tol: float = 1e-6
    state_tol: float = 1e-10
    max_iter: int = 50
    damping_threshold: float = 0.1
    damping_value: float = 0.5
    max_halvings: int = 5

    def __post_init__(self):
        if not 0 < self.damping_value <= 1:
            raise ValueError("damping_value must lie in (0, 1]")
        if not (self.tol > 0 and self.state_tol > 0):
            raise ValueError("tolerances must be positive")

    def damping(self, norm_Lu) -> float:
        return self.damping_value if norm_Lu > self.damping_threshold else 1.0


@dataclass(frozen=True)
class Residual:
    R: float
    norm_Ly: float
    norm_Lu: float
    norm_e: float


@dataclass
class IterationRecord:
    """Residuals at iterate ``k`` and the damping of the step leaving it
    (``nan`` for the last record)."""

    iteration: int
    R: float
    norm_Ly: float
    norm_Lu: float
    norm_e: float
    damping: float
    n_lower: int
    n_upper: int


@dataclass
class NewtonReport:
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        """Completed Newton steps."""
        return max(len(self.records) - 1, 0)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.R for r in self.records])

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


class SsnSolver:
    """Algorithm driver bound to one problem instance."""

    def __init__(self, data: ProblemData, ops: FemOperators, cfg: SsnConfig | None = None):
        self.data = data
        self.ops = ops
        self.cfg = cfg or SsnConfig()
        self.hnorm = InvNorm(ops.KM)
        self.state = StateSolver(ops, data.f, data.b, ForwardConfig(tol=self.cfg.state_tol),
                                 hnorm=self.hnorm)

    def initial_iterate(self) -> Iterate:
        """``u_0 = u_a``, ``y_0`` the forward solution, ``p_0 = 0``."""
        u0 = self.data.u_a.copy()
        return Iterate(self.state.solve(u0), u0, np.zeros(self.ops.n))

    def residual(self, it: Iterate) -> Residual:
        ly = self.hnorm(grad_y(it, self.data, self.ops))
        lu = self.hnorm(grad_u(it, self.data, self.ops))
        e = self.hnorm(self.state.residual(it.y, it.u))
        return Residual(float(np.sqrt(ly ** 2 + lu ** 2 + e ** 2)), ly, lu, e)

    def newton_direction(self, it: Iterate):
        blocks = newton_blocks(it, self.data, self.ops)
        n = self.ops.n
        rhs = -np.concatenate([
            grad_y(it, self.data, self.ops),
            grad_u(it, self.data, self.ops),
            self.state.residual(it.y, it.u),
        ])
        return Iterate.unstack(solve_block_system(blocks.system(), rhs, (n, n, n)))

    def step(self, it: Iterate, res: Residual | None = None):
        """One damped Newton step followed by the exact state update.

        Returns the new iterate and the damping factor used.  The damping is
        halved whenever the new control makes the state equation unsolvable.
        """
        res = res or self.residual(it)
        d = self.newton_direction(it)
        gamma = self.cfg.damping(res.norm_Lu)
        for _ in range(self.cfg.max_halvings + 1):
            u = it.u + gamma * d.u
            y_lin = it.y + gamma * d.y
            try:
                y = self.state.solve(u, y_init=y_lin)
            except ForwardError as exc:
                log.info("state update failed (%s); halving damping %.3g", exc, gamma)
                gamma *= 0.5
                continue
            return Iterate(y, u, it.p + gamma * d.p), gamma
        raise SsnError("state update failed after repeated step halving")

    def solve(self, initial: Iterate | None = None):
        it = initial if initial is not None else self.initial_iterate()
        if initial is not None:
            # keep the state exactly consistent with the control
            it = Iterate(self.state.solve(it.u, y_init=it.y), it.u, it.p)
        report = NewtonReport()
        for k in range(self.cfg.max_iter + 1):
            res = self.residual(it)
            act = active_sets(it.u, self.data)
            rec = IterationRecord(k, res.R, res.norm_Ly, res.norm_Lu, res.norm_e, float("nan"),
                                  int(act.lower.sum()), int(act.upper.sum()))
            report.records.append(rec)
            log.info("it %2d  R=%.3e  Ly=%.3e  Lu=%.3e  e=%.3e  lower=%d upper=%d",
                     k, res.R, res.norm_Ly, res.norm_Lu, res.norm_e, rec.n_lower, rec.n_upper)
            if res.R <= self.cfg.tol:
                report.converged = True
                break
            if k == self.cfg.max_iter:
                break
            it, rec.damping = self.step(it, res)
        return it, report


def solve(data: ProblemData, ops: FemOperators, cfg: SsnConfig | None = None, initial: Iterate | None = None):
    return SsnSolver(data, ops, cfg).solve(initial)


def residual_R(it: Iterate, data: ProblemData, ops: FemOperators) -> tuple[float, Residual]:
    """``R`` and its three parts for a single iterate."""
    res = SsnSolver(data, ops).residual(it)
    return res.R, res


def ssn_step(it: Iterate, data: ProblemData, ops: FemOperators, cfg: SsnConfig | None = None):
    """One damped Newton step with exact state update; returns ``(iterate, gamma)``."""
    return SsnSolver(data, ops, cfg).step(it)
