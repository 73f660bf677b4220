"""Combining subset posteriors into one barycenter posterior.

Run with ``python demos/posterior_aggregation.py [iterations]``. Synthetic
subset posteriors come from a conjugate Gaussian model, so the full-data
posterior is known and serves as the reference for BW2-UVP.
"""

# %%
import sys

from vwb import cli
from vwb.experiments import read_report, synthetic_posteriors

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
files, truth_file, truth = synthetic_posteriors("runs/demo-posteriors", n_subsets=5, dim=2, seed=0)
print("full posterior mean", truth.mean.round(3), "covariance", truth.cov.round(4).tolist())

# %% Aggregate the five sample files; the config file only sets the step count.
with open("runs/demo-posteriors/agg.cfg", "w") as fh:
    fh.write(f"[train]\niterations = {iterations}\neval_every = 500\n")
code = cli.run(["aggregate", "--config", "runs/demo-posteriors/agg.cfg", *map(str, files),
                "--truth", str(truth_file), "--out", "runs/demo-aggregate", "--overwrite"])
assert code == 0
print(f"aggregated posterior BW2-UVP {float(read_report('runs/demo-aggregate/report.txt')['uvp']):.2f}%")

# %% Any emitted sample file can be scored against the reference afterwards.
cli.run(["eval", "runs/demo-aggregate/barycenter.csv", str(truth_file)])
