"""How does verification AUC change with the number of key frames?

Sweeps K from 2 to 15 on a reduced benchmark and prints one row per K,
ending with the full-bag baseline for comparison.
"""

import tempfile
from pathlib import Path

from posepool import data_io
from posepool.verify import sweep_k

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    data_io.generate_synthetic(data_io.SynthConfig(num_identities=20, frames_per_video=60, dim=64), root)
    pairs = data_io.read_pairs(root / "pairs.csv")
    dataset = data_io.DatasetIndex.open(root).preload()

    rows = sweep_k(dataset, pairs, list(range(2, 16)) + ["all"], pooling="max")
    print(f"{'K':>4}  {'AUC':>6}  correlations/pair")
    for row in rows:
        print(f"{row.k!s:>4}  {row.auc:.4f}  {row.mean_correlations:g}")
    data_io.write_sweep(root / "sweep.csv", [r for r in rows if r.k != "all"])
