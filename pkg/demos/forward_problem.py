"""
The nonlocal state equation
===========================

For a fixed control u the state solves a Poisson-type problem whose
coefficient u + b |grad y|^2 depends on the Dirichlet energy of y itself.
The solver reduces this to a scalar equation in s = y^T K y.
"""

import numpy as np

from kirchhoff_ocp import StateSolver, assemble, generate_rect, interpolate_nodal

# a 25 x 25 grid on the centered unit square: 676 vertices
mesh = generate_rect(-0.5, 0.5, -0.5, 0.5, 25)
ops = assemble(mesh)
print(f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles")

f = interpolate_nodal(mesh, 100.0)
u = interpolate_nodal(mesh, lambda x, y: -3 * x - 3 * y + 10)

# the energy of the state drops as the nonlocal term gets stronger
for alpha in (0.0, 1.0, 10.0, 100.0):
    b = interpolate_nodal(mesh, lambda x, y: alpha * (x ** 2 + y ** 2))
    solver = StateSolver(ops, f, b)
    y = solver.solve(u)
    s = y @ (ops.K @ y)
    print(f"alpha={alpha:6g}  s*={s:.6e}  max y={y.max():.4e}  "
          f"residual={solver.residual_norm(y, u):.1e}")

# g(s) = s - y(s)^T K y(s) is increasing, so the root is unique
b = interpolate_nodal(mesh, lambda x, y: x ** 2 + y ** 2)
solver = StateSolver(ops, f, b)
for s in np.geomspace(1e-2, 1e2, 5):
    print(f"g({s:8.3g}) = {solver.g(s, u):+.4e}")
