"""Pick pose-diverse key frames from one synthetic video.

Builds a 60-frame pose track that visits three head orientations, clusters
it, and prints which frames were kept and why.
"""

import numpy as np

from posepool import cluster_poses, select_frames, select_k

rng = np.random.default_rng(7)

# three poses the subject holds for a while: frontal, turned left, looking up
holds = np.array([[0.0, 0.0, 0.0], [-35.0, 5.0, 0.0], [10.0, 18.0, -4.0]])
track = np.vstack([h + rng.normal(scale=2.0, size=(20, 3)) for h in holds])
print(f"video has {len(track)} frames")

choice = select_k(track, k_min=2, k_max=8, seed=0)
print(f"default penalty gamma = {choice.penalty:.3f} per cluster")
print("k    ratio    ratio + gamma*k")
for k, score in sorted(choice.scores.items()):
    print(f"{k}  {choice.models[k].objective:8.4f}  {score:8.4f}")
print(f"chosen k with the default penalty = {choice.k}")

# the default penalty is measured in squared degrees while the ratio is
# unitless, so on wide pose tracks it favors the smallest k; a small
# explicit penalty lets the ratio speak
choice = select_k(track, k_min=2, k_max=8, seed=0, penalty=0.2)
print(f"chosen k with penalty 0.2 = {choice.k}")

model = cluster_poses(track, choice.k, seed=0)
print("centroids (yaw, pitch, roll):")
for c in model.centroids:
    print("  " + "  ".join(f"{v:7.2f}" for v in c))

mask = select_frames(track, choice.k, seed=0)
print(f"selected frames: {list(mask.selected)}")
for idx in mask.selected:
    print(f"  frame {idx:2d} pose {np.round(track[idx], 1)}")

# the default K=9 keeps more frames than there are pose clusters,
# which splits the holds into finer sub-poses
nine = select_frames(track, 9, seed=0)
print(f"with K=9: {list(nine.selected)}")
