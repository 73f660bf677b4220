"""Barycenter of two concentric rings with a ring-shaped proxy.

Run with ``python demos/rings.py [iterations]``. There is no closed-form
reference here; the script prints the learned radius next to the input radii.
"""

# %%
import sys
import tempfile
from pathlib import Path

import numpy as np

from vwb import cli, load_samples_csv

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
cfg = Path(tempfile.mkdtemp()) / "rings.cfg"
cfg.write_text(f"[train]\niterations = {iterations}\neval_every = 500\n[demo]\nscenario = rings\n")
assert cli.run(["demo-2d", "--config", str(cfg), "--out", "runs/demo-rings", "--overwrite"]) == 0

# %% Radii of the emitted samples.
for name in ("input0", "input1", "barycenter"):
    pts = load_samples_csv(f"runs/demo-rings/{name}.csv")
    radius = np.linalg.norm(pts, axis=1)
    print(f"{name:10s} radius {radius.mean():.3f} +- {radius.std():.3f}")
