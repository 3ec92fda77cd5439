"""
Which snapshots get combined, and what it costs
===============================================

Pairs are nearest neighbours in the normalised parameter box. Every pair
yields one artificial snapshot per blending weight alpha, each costing a
single linear solve (Oseen) instead of a full Newton solve.
"""

import tempfile

import numpy as np

from nsaug import RunConfig, pair_snapshots, run_pipeline

# 1D: a chain
print("5 points on a line:", pair_snapshots(np.linspace(5, 30, 5)).pairs)

# 2D: the four corners of the (Re, gamma) box and its centre
box = [[5.0, 30.0], [0.0, 4.0]]
five = np.array([[5, 0], [30, 0], [5, 4], [30, 4], [17.5, 2]], float)
print("corners:", pair_snapshots(five[:4], box).pairs)
print("corners and centre:", pair_snapshots(five, box).pairs)
print("with 9 weights the five points grow to", 5 + 9 * len(pair_snapshots(five, box)), "snapshots")

# cost on the corners, read back from the pipeline's own solve counters;
# both runs share one output directory so the snapshots are computed once
out = tempfile.mkdtemp(prefix="nsaug_cost_")
alphas = "0.1, 0.3, 0.5, 0.7, 0.9"
reports = {}
for strategy in ("none", "linear_oseen"):
    cfg = RunConfig.from_mapping({
        "problem": "cylinder_jets", "train_grid": "5:30:2, 0:4:2", "test_params": "none",
        "strategy": strategy, "alphas": alphas, "output_dir": out,
    })
    reports[strategy] = run_pipeline(cfg, upto="augment")

snap = reports["linear_oseen"].counters["snapshots"]
aug = reports["linear_oseen"].counters["augment"]
per_snapshot = (snap["stokes"] + snap["picard"] + snap["newton"]) / 4
print("snapshot stage:", snap)
print("augment stage: ", aug)
n_new = reports["linear_oseen"].n_artificial[0]
print(f"{n_new} new snapshots for {aug['oseen']} linear solves; "
      f"as full-order solves they would need about {n_new * per_snapshot:.0f}")
print(f"reduction {100 * (1 - aug['oseen'] / (n_new * per_snapshot)):.0f}%")
