"""Optimal control of the stationary nonlocal Kirchhoff equation.

P1 finite elements, a Moreau-Yosida penalty for the control bounds and a
damped semismooth Newton method with a nonlinear state update.
"""
from .fem import FemOperators, assemble, interpolate_nodal
from .forward import ForwardConfig, StateSolver, residual_state, solve_state
from .mesh import Mesh, generate_rect, load_mesh, refine, refine_uniform, save_mesh
from .optsys import CutoffFamily, Iterate, ProblemData, active_sets, grad_u, grad_y, newton_blocks, objective
from .ssn import NewtonReport, SsnConfig, SsnSolver, residual_R, solve, ssn_step

__all__ = [
    "FemOperators", "assemble", "interpolate_nodal",
    "ForwardConfig", "StateSolver", "residual_state", "solve_state",
    "Mesh", "generate_rect", "load_mesh", "refine", "refine_uniform", "save_mesh",
    "CutoffFamily", "Iterate", "ProblemData", "active_sets", "grad_u", "grad_y", "newton_blocks",
    "objective",
    "NewtonReport", "SsnConfig", "SsnSolver", "residual_R", "solve", "ssn_step",
]

__version__ = "0.1.0"
