"""Gaussian benchmark through the command line, then reading the report back.

Run with ``python demos/gaussian_benchmark.py [iterations]``. Writes to
``runs/demo-bench``.
"""

# %%
import sys
import tempfile
from pathlib import Path

import numpy as np

from vwb import cli
from vwb.experiments import read_report

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = Path(tempfile.mkdtemp()) / "bench.cfg"
cfg.write_text(f"[train]\niterations = {iterations}\neval_every = 250\n[bench]\ndim = 2\nn_inputs = 3\n")

# %% Two seeds; ``--overwrite`` lets the demo be re-run.
code = cli.run(["bench-gauss", "--config", str(cfg), "--seeds", "2", "--out", "runs/demo-bench", "--overwrite"])
assert code == 0

# %% The history CSV columns are iteration, objective, UVP and wall-clock seconds.
report = read_report("runs/demo-bench/report.txt")
history = np.loadtxt("runs/demo-bench/history_seed0.csv", delimiter=",", skiprows=1)
print(f"seed 0 UVP {history[0, 2]:.1f}% at step {int(history[0, 0])} -> {history[-1, 2]:.2f}% at step {int(history[-1, 0])}")
print("files written:", *report["file"], sep="\n  ")
