"""Optimal couplings are c-cyclically monotone; shuffled ones are not.

Run with ``python demos/oracle_monotonicity.py``. Uses only the exact
enumeration oracle, so it finishes in under a second.
"""

# %%
import numpy as np

from vwb.oracle import check_c_monotone, exact_ot, power_cost

rng = np.random.default_rng(0)
xs, ys = rng.normal(size=(6, 2)), rng.normal(size=(6, 2)) + [2.0, 0.0]

# %% The optimal matching leaves no cheaper rearrangement of any subset.
for p in (1, 2):
    cost = power_cost(p)
    best = exact_ot(xs, ys, cost)
    report = check_c_monotone(best.support, cost)
    print(f"p={p}: optimal cost {best.cost:.4f}, matching {best.matching}, max gain {report.max_violation:.2e}")

# %% Swapping two destinations of the optimal plan creates a strictly cheaper cycle.
cost = power_cost(2)
best = exact_ot(xs, ys, cost)
pairs = best.support.copy()
pairs[[0, 1], 1] = pairs[[1, 0], 1]
report = check_c_monotone(pairs, cost)
print(f"after swapping two targets: gain {report.max_violation:.4f} on subset {report.subset}, "
      f"permutation {report.permutation}")
