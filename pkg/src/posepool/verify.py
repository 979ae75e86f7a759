"""Pair verification harness: score labelled video pairs, then ROC / AUC.

A dataset is any mapping ``video_id -> (PoseSet, FeatureBag)``;
:class:`posepool.data_io.DatasetIndex` is the on-disk implementation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataValidationError, InvalidArgumentError, VideoNotFoundError
from .pose_select import DEFAULT_K, KSpec, PoseSet, select_frames
from .similarity import FeatureBag, check_pooling, pooled_similarity, subset_bag


@dataclass(frozen=True)
class PairRecord:
    pair_id: int
    video_a: str
    video_b: str
    same: bool


@dataclass(frozen=True)
class ScoreRecord:
    pair_id: int
    similarity: float
    pooling: str
    k_a: int
    k_b: int

    @property
    def correlations_computed(self) -> int:
        return self.k_a * self.k_b


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass(frozen=True)
class SweepRow:
    k: object
    auc: float
    mean_correlations: float


def _map(fn, items, workers: int):
    items = list(items)
    if workers is None or workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _unique_videos(pairs: Iterable[PairRecord]) -> list[str]:
    seen = {}
    for p in pairs:
        seen.setdefault(p.video_a, None)
        seen.setdefault(p.video_b, None)
    return list(seen)


def load_videos(
    dataset: Mapping, video_ids: Sequence[str], workers: int = 1
) -> dict[str, tuple[PoseSet, FeatureBag]]:
    """Fetch and cross-check pose/feature data for each id."""

    def load(vid):
        try:
            poses, bag = dataset[vid]
        except KeyError:
            raise VideoNotFoundError(vid) from None
        if poses.m != bag.n:
            raise DataValidationError(
                f"{vid}: {poses.m} poses but {bag.n} feature vectors"
            )
        return poses, bag

    return dict(zip(video_ids, _map(load, video_ids, workers)))


def prepare_bags(
    videos: Mapping[str, tuple[PoseSet, FeatureBag]],
    k: KSpec = DEFAULT_K,
    seed: int = 0,
    workers: int = 1,
    **select_kw,
) -> dict[str, FeatureBag]:
    """Run frame selection once per video and return the reduced bags."""

    def reduce(item):
        vid, (poses, bag) = item
        if k == "all":
            return bag
        return subset_bag(bag, select_frames(poses, k, seed, **select_kw))

    items = list(videos.items())
    return dict(zip([vid for vid, _ in items], _map(reduce, items, workers)))


def score_prepared(
    bags: Mapping[str, FeatureBag],
    pairs: Sequence[PairRecord],
    pooling: str = "max",
    workers: int = 1,
) -> list[ScoreRecord]:
    check_pooling(pooling)

    def score(p):
        a, b = bags[p.video_a], bags[p.video_b]
        return ScoreRecord(p.pair_id, pooled_similarity(a, b, pooling), pooling, a.n, b.n)

    return _map(score, pairs, workers)


def score_pairs(
    dataset: Mapping,
    pairs: Sequence[PairRecord],
    k: KSpec = DEFAULT_K,
    pooling: str = "max",
    seed: int = 0,
    workers: int = 1,
    **select_kw,
) -> list[ScoreRecord]:
    """Similarity for each pair, in input order.

    Key frames are selected once per video and reused across every pair
    that video appears in.  Output is identical for any ``workers``.
    """
    check_pooling(pooling)
    _check_unique_ids(pairs)
    videos = load_videos(dataset, _unique_videos(pairs), workers)
    bags = prepare_bags(videos, k, seed, workers, **select_kw)
    return score_prepared(bags, pairs, pooling, workers)


def _check_unique_ids(pairs):
    ids = [p.pair_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise DataValidationError("pair ids must be unique")


def _binary_inputs(scores, labels):
    s = np.asarray([r.similarity if isinstance(r, ScoreRecord) else r for r in scores], dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise InvalidArgumentError(f"{s.size} scores but {y.size} labels")
    if not np.isfinite(s).all():
        raise DataValidationError("scores must be finite")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise InvalidArgumentError("need at least one same and one different pair")
    return s, y


def roc_curve(scores, labels) -> RocCurve:
    """ROC over every distinct score used as a threshold, highest first.

    Tied scores form one step (a diagonal segment).  The AUC is the
    trapezoidal area, accumulated in integer counts so that perfect
    separation gives exactly 1.0.
    """
    s, y = _binary_inputs(scores, labels)
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    ends = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.size - 1]
    tps = np.r_[0, np.cumsum(y_sorted)[ends]]
    fps = np.r_[0, ends + 1 - tps[1:]]
    n_pos, n_neg = int(tps[-1]), int(fps[-1])
    area2 = int(np.sum(np.diff(fps) * (tps[1:] + tps[:-1])))
    return RocCurve(
        fpr=fps / n_neg,
        tpr=tps / n_pos,
        thresholds=np.r_[np.inf, s_sorted[ends]],
        auc=area2 / (2 * n_pos * n_neg),
    )


def accuracy_at_best_threshold(scores, labels) -> tuple[float, float]:
    """Threshold maximising (TP + TN) / N; a pair is "same" when score > threshold.

    Candidates are the midpoints between consecutive distinct scores plus
    -inf and +inf (accept all / reject all).  Accuracy ties go to the lowest
    threshold.
    """
    s, y = _binary_inputs(scores, labels)
    u = np.unique(s)
    thresholds = np.r_[-np.inf, (u[:-1] + u[1:]) / 2.0, np.inf]
    # number of scores <= each distinct value, split by class
    idx = np.searchsorted(u, s)
    neg_le = np.cumsum(np.bincount(idx[~y], minlength=u.size))
    pos_le = np.cumsum(np.bincount(idx[y], minlength=u.size))
    n_pos = int(y.sum())
    # threshold t_i rejects the i lowest distinct values
    tn = np.r_[0, neg_le]
    tp = n_pos - np.r_[0, pos_le]
    correct = tn + tp
    best = int(np.argmax(correct))
    return float(thresholds[best]), float(correct[best] / s.size)


def evaluate(records: Sequence[ScoreRecord], pairs: Sequence[PairRecord]) -> RocCurve:
    """ROC for score records, matching labels by pair id."""
    label = {p.pair_id: p.same for p in pairs}
    try:
        labels = [label[r.pair_id] for r in records]
    except KeyError as exc:
        raise InvalidArgumentError(f"score for unknown pair id {exc.args[0]}") from None
    return roc_curve(records, labels)


def sweep_k(
    dataset: Mapping,
    pairs: Sequence[PairRecord],
    k_values: Iterable,
    pooling: str = "max",
    seed: int = 0,
    workers: int = 1,
    **select_kw,
) -> list[SweepRow]:
    """One verification run per ``k``; videos are loaded only once."""
    check_pooling(pooling)
    _check_unique_ids(pairs)
    videos = load_videos(dataset, _unique_videos(pairs), workers)
    rows = []
    for k in k_values:
        bags = prepare_bags(videos, k, seed, workers, **select_kw)
        records = score_prepared(bags, pairs, pooling, workers)
        roc = evaluate(records, pairs)
        mean_corr = float(np.mean([r.correlations_computed for r in records]))
        rows.append(SweepRow(k, roc.auc, mean_corr))
    return rows

