"""Experiment drivers: forward solve, single optimization, and the three
parameter studies (non-locality, mesh levels, penalty parameter)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig
from .fem import FemOperators, assemble, interpolate_nodal
from .forward import ForwardConfig, StateSolver
from .mesh import Mesh, generate_rect, load_mesh, refine
from .optsys import Iterate, ProblemData, bound_violation
from .ssn import NewtonReport, SsnConfig, SsnSolver

log = logging.getLogger(__name__)

HISTORY_HEADER = ["iteration", "norm_Ly", "norm_Lu", "norm_e", "R", "damping", "n_lower", "n_upper"]
ALPHA_HEADER = ["alpha", "iterations", "converged", "R_final", "last_ratio"]
MESH_HEADER = ["level", "n_vertices", "n_triangles", "iterations", "converged", "R_final", "last_ratio"]
EPS_HEADER = ["epsilon", "iterations", "converged", "R_final", "lower_violation", "upper_violation"]


def build_mesh(cfg: ExperimentConfig, level=None) -> Mesh:
    level = cfg.mesh_level if level is None else level
    if cfg.mesh is not None:
        base = load_mesh(cfg.mesh)
    else:
        base = generate_rect(*cfg.domain, cfg.n)
    return refine(base, level - 1)


def build_data(cfg: ExperimentConfig, mesh: Mesh, alpha=None, epsilon=None) -> ProblemData:
    alpha = cfg.alpha[0] if alpha is None else alpha

    def nodal(expr):
        return interpolate_nodal(mesh, lambda x, y: expr(x, y, alpha))

    return ProblemData(
        f=nodal(cfg.f),
        b=nodal(cfg.b),
        u_a=nodal(cfg.u_a),
        u_b=nodal(cfg.u_b),
        y_d=nodal(cfg.y_d),
        lambda1=cfg.lambda1,
        lambda2=cfg.lambda2,
        epsilon=cfg.epsilon[0] if epsilon is None else epsilon,
    )


def ssn_config(cfg: ExperimentConfig) -> SsnConfig:
    return SsnConfig(tol=cfg.tol, state_tol=cfg.state_tol, max_iter=cfg.max_iter)


def last_ratio(report: NewtonReport) -> float:
    R = report.residuals
    return float(R[-1] / R[-2]) if len(R) >= 2 and R[-2] > 0 else float("nan")


@dataclass
class ForwardResult:
    mesh: Mesh
    y: np.ndarray
    energy: float
    residual: float


@dataclass
class SolveResult:
    mesh: Mesh
    ops: FemOperators
    data: ProblemData
    iterate: Iterate
    report: NewtonReport

    @property
    def converged(self):
        return self.report.converged


@dataclass
class SweepResult:
    header: list
    rows: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    @property
    def converged(self):
        return all(r.converged for r in self.runs)


def _prepare(out):
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_history(path, report: NewtonReport):
    io.write_csv(path, HISTORY_HEADER, [
        [r.iteration, r.norm_Ly, r.norm_Lu, r.norm_e, r.R, r.damping, r.n_lower, r.n_upper]
        for r in report.records
    ])


def write_solution(out: Path, stem: str, res: SolveResult):
    it = res.iterate
    io.write_vtk(out / f"{stem}.vtk", res.mesh, {"y": it.y, "u": it.u, "p": it.p,
                                                 "u_a": res.data.u_a, "u_b": res.data.u_b})
    for name in ("y", "u", "p"):
        io.write_field_csv(out / f"{stem}_{name}.csv", res.mesh, getattr(it, name))
    write_history(out / f"{stem}_history.csv", res.report)


def run_forward(cfg: ExperimentConfig, out=None) -> ForwardResult:
    """Solve the state equation for ``u = u_a``."""
    mesh = build_mesh(cfg)
    ops = assemble(mesh)
    data = build_data(cfg, mesh)
    solver = StateSolver(ops, data.f, data.b, ForwardConfig(tol=cfg.state_tol))
    y = solver.solve(data.u_a)
    res = ForwardResult(mesh, y, float(y @ (ops.K @ y)), solver.residual_norm(y, data.u_a))
    out = _prepare(out)
    if out is not None:
        io.write_vtk(out / "state.vtk", mesh, {"y": y})
        io.write_field_csv(out / "state.csv", mesh, y)
    return res


def run_solve(cfg: ExperimentConfig, out=None, *, alpha=None, epsilon=None, level=None,
              initial: Iterate | None = None, mesh=None, ops=None) -> SolveResult:
    mesh = mesh if mesh is not None else build_mesh(cfg, level)
    ops = ops if ops is not None else assemble(mesh)
    data = build_data(cfg, mesh, alpha, epsilon)
    it, report = SsnSolver(data, ops, ssn_config(cfg)).solve(initial)
    res = SolveResult(mesh, ops, data, it, report)
    out = _prepare(out)
    if out is not None:
        write_solution(out, "solution", res)
    return res


def run_alpha_sweep(cfg: ExperimentConfig, out=None) -> SweepResult:
    mesh = build_mesh(cfg)
    ops = assemble(mesh)
    sweep = SweepResult(ALPHA_HEADER)
    out = _prepare(out)
    for alpha in cfg.alpha:
        res = run_solve(cfg, alpha=alpha, mesh=mesh, ops=ops)
        log.info("alpha=%g: %d iterations", alpha, res.report.iterations)
        sweep.runs.append(res)
        sweep.rows.append([alpha, res.report.iterations, res.converged, res.report.final.R,
                           last_ratio(res.report)])
        if out is not None:
            write_solution(out, f"alpha_{alpha:g}", res)
    if out is not None:
        io.write_csv(out / "sweep_alpha.csv", sweep.header, sweep.rows)
    return sweep


def run_mesh_sweep(cfg: ExperimentConfig, out=None) -> SweepResult:
    sweep = SweepResult(MESH_HEADER)
    out = _prepare(out)
    for level in cfg.levels:
        res = run_solve(cfg, level=level)
        log.info("level %d (%d vertices): %d iterations", level, res.mesh.n_vertices,
                 res.report.iterations)
        sweep.runs.append(res)
        sweep.rows.append([level, res.mesh.n_vertices, res.mesh.n_triangles, res.report.iterations,
                           res.converged, res.report.final.R, last_ratio(res.report)])
        if out is not None:
            write_solution(out, f"level_{level}", res)
    if out is not None:
        io.write_csv(out / "sweep_mesh.csv", sweep.header, sweep.rows)
    return sweep


def run_penalty_sweep(cfg: ExperimentConfig, out=None, warmstart=None) -> SweepResult:
    """Solve for every penalty parameter in turn.

    With warmstarts each solve after the first starts from the previous
    converged iterate.
    """
    warmstart = cfg.warmstart if warmstart is None else warmstart
    mesh = build_mesh(cfg)
    ops = assemble(mesh)
    sweep = SweepResult(EPS_HEADER)
    out = _prepare(out)
    previous = None
    for eps in cfg.epsilon:
        res = run_solve(cfg, epsilon=eps, mesh=mesh, ops=ops,
                        initial=previous if warmstart else None)
        previous = res.iterate if res.converged else None
        lo, up = bound_violation(res.iterate.u, res.data)
        log.info("eps=%g: %d iterations, violations %.3e %.3e", eps, res.report.iterations, lo, up)
        sweep.runs.append(res)
        sweep.rows.append([eps, res.report.iterations, res.converged, res.report.final.R, lo, up])
        if out is not None:
            write_solution(out, f"eps_{eps:g}", res)
    if out is not None:
        name = "sweep_eps_warm.csv" if warmstart else "sweep_eps.csv"
        io.write_csv(out / name, sweep.header, sweep.rows)
    return sweep
