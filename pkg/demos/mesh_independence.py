"""
Mesh independence
=================

Refine the grid twice and solve the same problem each time.  The number of
Newton steps should stay essentially constant.
"""

from kirchhoff_ocp import experiments
from kirchhoff_ocp.config import load_preset

cfg = load_preset("mesh")
sweep = experiments.run_mesh_sweep(cfg)

for run in sweep.runs:
    rep = run.report
    print(f"{run.mesh.n_vertices:5d} vertices: {rep.iterations:2d} steps, "
          f"R={rep.final.R:.2e}, last ratio {experiments.last_ratio(rep):.1e}")

# both bounds become active somewhere
final = sweep.runs[-1].report.final
print(f"active at the finest level: {final.n_lower} lower, {final.n_upper} upper")
