"""Score two videos with max, mean and median pooling.

Generates a tiny dataset on disk, loads a same-identity and a
different-identity pair, and compares full bags against K=9 selections.
"""

import tempfile
from pathlib import Path

from posepool import data_io
from posepool.pose_select import select_frames
from posepool.similarity import POOLINGS, pooled_similarity, subset_bag

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    config = data_io.SynthConfig(num_identities=4, videos_per_identity=2, frames_per_video=60, dim=64, seed=3)
    data_io.generate_synthetic(config, root)
    dataset = data_io.DatasetIndex.open(root)

    pairs = {"same person": ("id0000_v00", "id0000_v01"), "different people": ("id0000_v00", "id0001_v00")}
    for label, (a, b) in pairs.items():
        (pose_a, bag_a), (pose_b, bag_b) = dataset[a], dataset[b]
        key_a = subset_bag(bag_a, select_frames(pose_a, 9))
        key_b = subset_bag(bag_b, select_frames(pose_b, 9))
        print(f"{label}: {a} vs {b}")
        for pooling in POOLINGS:
            full = pooled_similarity(bag_a, bag_b, pooling)
            key = pooled_similarity(key_a, key_b, pooling)
            print(f"  {pooling:6s} full={full:+.4f}  K=9={key:+.4f}")
        print(f"  correlations: full={bag_a.n * bag_b.n}  K=9={key_a.n * key_b.n}")
