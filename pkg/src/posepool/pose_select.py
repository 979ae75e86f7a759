"""Pose-diverse key-frame selection.

A video's per-frame head poses (yaw, pitch, roll in degrees) are clustered
with Lloyd iterations; among the restarts, the model with the lowest
within/between scatter ratio is kept, and the frame closest to each
centroid is selected.  The ratio rewards tight clusters whose centroids
are spread apart, so the selected frames keep the pose diversity of the
whole sequence while shrinking it to ``k`` frames.

Distances are plain Euclidean on the degree triples (no angular
wraparound).  All ties resolve to the lowest index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np

from .errors import DataValidationError, InvalidArgumentError, UndefinedObjectiveError

log = logging.getLogger(__name__)

DEFAULT_K = 9
DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-6
NOMINAL_RANGE_DEG = 180.0

ObjectiveForm = Literal["per_cluster", "global"]
KSpec = Union[int, Literal["auto", "all"]]


@dataclass(frozen=True)
class PoseSet:
    """Ordered head poses of one video; row ``i`` is frame ``i``."""

    video_id: str
    poses: np.ndarray

    def __post_init__(self):
        arr = np.array(self.poses, dtype=np.float64, copy=True)
        if arr.ndim == 1 and arr.size == 3:
            arr = arr.reshape(1, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise DataValidationError(
                f"{self.video_id}: poses must have shape (m, 3), got {arr.shape}"
            )
        if arr.shape[0] < 1:
            raise DataValidationError(f"{self.video_id}: pose set is empty")
        bad = ~np.isfinite(arr).all(axis=1)
        if bad.any():
            frame = int(np.flatnonzero(bad)[0])
            raise DataValidationError(
                f"{self.video_id}: non-finite pose at frame {frame}: {arr[frame].tolist()}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "poses", arr)

    @property
    def m(self) -> int:
        return self.poses.shape[0]

    def out_of_range(self) -> list[int]:
        """Frame indices with any angle outside [-180, 180] degrees."""
        mask = (np.abs(self.poses) > NOMINAL_RANGE_DEG).any(axis=1)
        return np.flatnonzero(mask).tolist()


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    within_ssd: float
    between_ssd: float
    objective: float
    form: ObjectiveForm = "per_cluster"
    n_iter: int = 0
    restart: int = 0
    history: tuple = field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class SelectionMask:
    """Sorted indices of the selected frames (the K-sparse frame mask)."""

    video_id: str
    m: int
    selected: tuple
    degenerate: bool = False
    objective: float | None = None

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        if not sel:
            raise InvalidArgumentError("selection mask must select at least one frame")
        if any(b <= a for a, b in zip(sel, sel[1:])):
            raise InvalidArgumentError(f"selected indices must be strictly increasing: {sel}")
        if sel[0] < 0 or sel[-1] >= self.m:
            raise InvalidArgumentError(f"selected indices must lie in [0, {self.m})")
        object.__setattr__(self, "selected", sel)

    @property
    def k(self) -> int:
        return len(self.selected)

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(self.m, dtype=bool)
        vec[list(self.selected)] = True
        return vec

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "m": self.m,
            "k": self.k,
            "selected": list(self.selected),
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionMask":
        try:
            mask = cls(
                video_id=str(data["video_id"]),
                m=int(data["m"]),
                selected=tuple(data["selected"]),
                degenerate=bool(data["degenerate"]),
            )
        except KeyError as exc:
            raise DataValidationError(f"mask JSON missing field {exc.args[0]!r}") from None
        if int(data["k"]) != mask.k:
            raise DataValidationError(f"mask JSON k={data['k']} but {mask.k} frames selected")
        return mask

    @classmethod
    def all_frames(cls, video_id: str, m: int) -> "SelectionMask":
        return cls(video_id=video_id, m=m, selected=tuple(range(m)))


@dataclass(frozen=True)
class KChoice:
    k: int
    degenerate: bool
    scores: dict = field(default_factory=dict)
    penalty: float = 0.0
    models: dict = field(default_factory=dict, repr=False, compare=False)


def _points(poses) -> tuple[str, np.ndarray]:
    if isinstance(poses, PoseSet):
        return poses.video_id, poses.poses
    ps = PoseSet("", poses)
    return ps.video_id, ps.poses


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("mkd,mkd->mk", diff, diff)


def _means(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=k)
    return sums / counts[:, None]


def within_ssd(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    diff = points - centroids[labels]
    return float(np.einsum("md,md->", diff, diff))


def between_ssd(centroids: np.ndarray) -> float:
    """Sum of squared distances over ordered centroid pairs (j != k)."""
    return float(_sq_dists(centroids, centroids).sum())


def _ratio(points, centroids, labels, form: ObjectiveForm) -> float:
    k = centroids.shape[0]
    if k < 2:
        raise UndefinedObjectiveError("ratio objective needs at least two clusters")
    if form == "global":
        num = within_ssd(points, centroids, labels)
        den = between_ssd(centroids)
        if den == 0.0:
            return 0.0 if num == 0.0 else np.inf
        return num / den
    if form != "per_cluster":
        raise InvalidArgumentError(f"unknown objective form {form!r}")
    diff = points - centroids[labels]
    per_point = np.einsum("md,md->m", diff, diff)
    within = np.bincount(labels, weights=per_point, minlength=k)
    between = _sq_dists(centroids, centroids).sum(axis=1)
    total = 0.0
    for w, b in zip(within, between):
        if b == 0.0:
            if w != 0.0:
                return np.inf
            continue
        total += w / b
    return float(total)


def objective_ratio(
    model: ClusterModel, poses, form: ObjectiveForm | None = None
) -> float:
    """Within/between scatter ratio of ``model`` on ``poses``.

    The default per-cluster form sums, over clusters, the cluster's own
    within-SSD divided by the squared distances from its centroid to every
    other centroid.  ``form="global"`` gives total within over total
    between instead.
    """
    _, points = _points(poses)
    labels = np.asarray(model.assignments)
    if labels.shape != (points.shape[0],):
        raise InvalidArgumentError(
            f"model has {labels.shape[0]} assignments but poses have {points.shape[0]} frames"
        )
    return _ratio(points, np.asarray(model.centroids), labels, form or model.form)


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = points.shape[0]
    chosen = [int(rng.integers(m))]
    closest = _sq_dists(points, points[chosen[0]][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0.0:
            idx = int(rng.choice(m, p=closest / total))
        else:
            # every point already coincides with a center
            idx = int(rng.integers(m))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[idx][None, :])[:, 0])
    return points[chosen].copy()


def _repair_empty(points, d2, labels, k):
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        own = d2[np.arange(len(labels)), labels].copy()
        own[counts[labels] < 2] = -1.0
        idx = int(np.argmax(own))
        counts[labels[idx]] -= 1
        labels[idx] = j
        counts[j] = 1
        d2[idx, j] = 0.0
    return labels


def lloyd(
    points: np.ndarray,
    centroids: np.ndarray,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
):
    """Run Lloyd iterations from ``centroids``.

    Returns ``(centroids, labels, history, n_iter)`` where ``history`` holds
    the within-SSD after each mean update.  Stops when assignments no longer
    change or the within-SSD relative decrease drops to ``tol``.
    """
    k = centroids.shape[0]
    labels = None
    history = []
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        d2 = _sq_dists(points, centroids)
        new_labels = _repair_empty(points, d2, np.argmin(d2, axis=1), k)
        centroids = _means(points, new_labels, k)
        w = within_ssd(points, centroids, new_labels)
        history.append(w)
        if labels is not None and np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        if len(history) > 1:
            prev = history[-2]
            if prev == 0.0 or (prev - w) <= tol * prev:
                break
    return centroids, labels, history, n_iter


def _check_positive_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise InvalidArgumentError(f"{name} must be an integer >= {minimum}, got {value!r}")


def _seed_children(seed, n):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise InvalidArgumentError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.SeedSequence(int(seed)).spawn(n)


def cluster_poses(
    poses,
    k: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    form: ObjectiveForm = "per_cluster",
) -> ClusterModel:
    """Cluster poses into ``k`` groups, keeping the restart with the lowest ratio.

    Each restart draws k-means++ seeds from its own child of ``seed`` and
    runs Lloyd to convergence; the ratio objective is evaluated only on
    converged models.  Child streams do not depend on ``restarts``, so adding
    restarts can only lower the returned objective.
    """
    _, points = _points(poses)
    m = points.shape[0]
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidArgumentError(f"k must be a positive integer, got {k!r}")
    if k > m:
        raise InvalidArgumentError(f"k={k} exceeds the number of poses m={m}")
    _check_positive_int("restarts", restarts)
    _check_positive_int("max_iters", max_iters)
    if not (tol >= 0.0):
        raise InvalidArgumentError(f"tol must be nonnegative, got {tol!r}")
    if form not in ("per_cluster", "global"):
        raise InvalidArgumentError(f"unknown objective form {form!r}")

    best = None
    for r, child in enumerate(_seed_children(seed, restarts)):
        rng = np.random.default_rng(child)
        init = kmeans_plusplus(points, k, rng)
        centroids, labels, history, n_iter = lloyd(points, init, max_iters, tol)
        obj = np.inf if k == 1 else _ratio(points, centroids, labels, form)
        if best is None or obj < best[0]:
            best = (obj, r, centroids, labels, history, n_iter)

    obj, r, centroids, labels, history, n_iter = best
    centroids.setflags(write=False)
    labels = labels.astype(np.int64)
    labels.setflags(write=False)
    return ClusterModel(
        k=int(k),
        centroids=centroids,
        assignments=labels,
        within_ssd=within_ssd(points, centroids, labels),
        between_ssd=between_ssd(centroids),
        objective=float(obj),
        form=form,
        n_iter=n_iter,
        restart=r,
        history=tuple(history),
    )


def select_key_frames(model: ClusterModel, poses) -> SelectionMask:
    """Pick, per cluster, the member frame nearest its centroid."""
    video_id, points = _points(poses)
    labels = np.asarray(model.assignments)
    if labels.shape != (points.shape[0],):
        raise InvalidArgumentError(
            f"model has {labels.shape[0]} assignments but poses have {points.shape[0]} frames"
        )
    centroids = np.asarray(model.centroids)
    selected = []
    for j in range(model.k):
        members = np.flatnonzero(labels == j)
        if members.size == 0:
            raise InvalidArgumentError(f"cluster {j} has no members")
        diff = points[members] - centroids[j]
        d2 = np.einsum("md,md->m", diff, diff)
        selected.append(int(members[np.argmin(d2)]))
    return SelectionMask(
        video_id=video_id,
        m=points.shape[0],
        selected=tuple(sorted(selected)),
        objective=model.objective,
    )


def is_degenerate(poses) -> bool:
    """True when every pose is identical, so no between-cluster spread exists."""
    _, points = _points(poses)
    return bool((points == points[0]).all())


def select_k(
    poses,
    k_min: int = 2,
    k_max: int = 10,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    penalty: float | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> KChoice:
    """Choose the number of clusters by a penalized ratio objective.

    Scores ``objective(k) + penalty * k`` for each ``k`` in
    ``[max(k_min, 2), min(k_max, m)]`` and returns the lowest-scoring ``k``.
    ``penalty`` defaults to ``0.01 * total pose variance``.
    """
    _, points = _points(poses)
    m = points.shape[0]
    _check_positive_int("k_min", k_min)
    _check_positive_int("k_max", k_max)
    if k_max < k_min:
        raise InvalidArgumentError(f"k_max={k_max} is below k_min={k_min}")
    if is_degenerate(points):
        return KChoice(k=1, degenerate=True)
    if m <= k_min:
        return KChoice(k=m, degenerate=False)

    gamma = 0.01 * float(points.var(axis=0).sum()) if penalty is None else float(penalty)
    candidates = range(max(k_min, 2), min(k_max, m) + 1)
    if not candidates:
        return KChoice(k=1, degenerate=False, penalty=gamma)
    scores, models = {}, {}
    for k in candidates:
        model = cluster_poses(points, k, seed=seed, restarts=restarts, max_iters=max_iters, tol=tol)
        models[k] = model
        scores[k] = model.objective + gamma * k
    best_k = min(scores, key=lambda kk: (scores[kk], kk))
    return KChoice(k=best_k, degenerate=False, scores=scores, penalty=gamma, models=models)


def select_frames(
    poses,
    k: KSpec = DEFAULT_K,
    seed: int = 0,
    *,
    k_min: int = 2,
    k_max: int = 10,
    restarts: int = DEFAULT_RESTARTS,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    penalty: float | None = None,
) -> SelectionMask:
    """Select pose-diverse key frames from a video.

    ``k`` is a fixed cluster count, ``"auto"`` (choose within
    ``[k_min, k_max]``), or ``"all"`` (keep every frame).  When the video has
    no more frames than requested, every frame is kept without clustering.
    A video whose poses are all identical yields frame 0 with
    ``degenerate=True``.
    """
    video_id, points = _points(poses)
    m = points.shape[0]

    if k == "all":
        return SelectionMask.all_frames(video_id, m)
    if k == "auto":
        choice = select_k(
            points, k_min, k_max, seed=seed, restarts=restarts,
            penalty=penalty, max_iters=max_iters, tol=tol,
        )
        if choice.degenerate:
            return SelectionMask(video_id, m, (0,), degenerate=True)
        if choice.k >= m:
            return SelectionMask.all_frames(video_id, m)
        model = choice.models[choice.k]
        return select_key_frames(model, PoseSet(video_id, points))
    if isinstance(k, str):
        raise InvalidArgumentError(f"k must be an integer, 'auto' or 'all', got {k!r}")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidArgumentError(f"k must be a positive integer, got {k!r}")

    if m <= k:
        if m < k:
            log.warning("%s: only %d frames for k=%d; keeping all frames", video_id or "<poses>", m, k)
        return SelectionMask.all_frames(video_id, m)
    if is_degenerate(points):
        return SelectionMask(video_id, m, (0,), degenerate=True)
    model = cluster_poses(points, int(k), seed=seed, restarts=restarts, max_iters=max_iters, tol=tol)
    return select_key_frames(model, PoseSet(video_id, points))
