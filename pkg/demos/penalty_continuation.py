"""
Penalty parameter and warmstarts
================================

The bounds are enforced through a quadratic penalty with weight 1/eps.
Bound violations shrink linearly in eps while each cold solve gets a bit
harder.  Starting each solve from the previous solution removes almost all
of that extra work.
"""

import numpy as np

from kirchhoff_ocp import experiments
from kirchhoff_ocp.config import load_preset

cfg = load_preset("penalty")

cold = experiments.run_penalty_sweep(cfg, warmstart=False)
warm = experiments.run_penalty_sweep(cfg, warmstart=True)

print("     eps   cold  warm   lower viol.   upper viol.")
for c, w in zip(cold.rows, warm.rows):
    print(f"{c[0]:8.0e}  {c[1]:4d}  {w[1]:4d}   {c[4]:.3e}     {c[5]:.3e}")

lower = np.array([row[4] for row in cold.rows])
print("violation ratios:", np.round(lower[1:] / lower[:-1], 4))
