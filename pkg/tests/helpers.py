import numpy as np


def two_group_poses(rng, n_per_group=10, separation=40.0, jitter=1.0):
    a = np.array([-separation / 2, 0.0, 0.0]) + rng.uniform(-jitter, jitter, (n_per_group, 3))
    b = np.array([separation / 2, 0.0, 0.0]) + rng.uniform(-jitter, jitter, (n_per_group, 3))
    return np.vstack([a, b])
