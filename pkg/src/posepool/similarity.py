"""Bag-of-features similarity between two videos.

A video is a bag of unit-norm frame features.  Two bags are compared
through their correlation matrix (inner products of every cross pair);
the default pooling takes its maximum, i.e. the nearest-neighbour
similarity between the two point sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DataValidationError, InvalidArgumentError
from .pose_select import SelectionMask

Pooling = Literal["max", "mean", "median"]
POOLINGS = ("max", "mean", "median")
MIN_NORM = 1e-12
NORM_TOL = 1e-6


def normalize_feature(raw) -> np.ndarray:
    """Scale a feature vector to unit Euclidean norm (float64)."""
    v = np.asarray(raw, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DataValidationError(f"feature must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise DataValidationError("feature vector has non-finite entries")
    norm = np.linalg.norm(v)
    if norm <= MIN_NORM:
        raise DataValidationError(f"feature vector has near-zero norm ({norm:.3g})")
    return v / norm


def normalize_rows(raw) -> np.ndarray:
    """Row-wise :func:`normalize_feature` for an ``(n, d)`` matrix."""
    x = np.asarray(raw, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise DataValidationError(f"features must have shape (n, d) with n, d >= 1, got {x.shape}")
    finite = np.isfinite(x).all(axis=1)
    if not finite.all():
        raise DataValidationError(f"non-finite feature at row {int(np.flatnonzero(~finite)[0])}")
    norms = np.linalg.norm(x, axis=1)
    small = norms <= MIN_NORM
    if small.any():
        raise DataValidationError(f"zero-norm feature at row {int(np.flatnonzero(small)[0])}")
    return x / norms[:, None]


@dataclass(frozen=True)
class FeatureBag:
    """Unit-norm feature vectors of one video, one row per source frame."""

    video_id: str
    vectors: np.ndarray
    frame_indices: np.ndarray | None = None

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=np.float64, copy=True)
        if vecs.ndim != 2 or vecs.shape[0] < 1 or vecs.shape[1] < 1:
            raise DataValidationError(
                f"{self.video_id}: bag needs shape (n, d) with n, d >= 1, got {vecs.shape}"
            )
        norms = np.linalg.norm(vecs, axis=1)
        if not np.all(np.abs(norms - 1.0) <= NORM_TOL):
            raise DataValidationError(
                f"{self.video_id}: bag vectors must be unit norm; use FeatureBag.from_raw"
            )
        if self.frame_indices is None:
            idx = np.arange(vecs.shape[0], dtype=np.int64)
        else:
            idx = np.array(self.frame_indices, dtype=np.int64, copy=True)
        if idx.shape != (vecs.shape[0],):
            raise DataValidationError(
                f"{self.video_id}: {idx.size} frame indices for {vecs.shape[0]} vectors"
            )
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise DataValidationError(f"{self.video_id}: frame indices must be strictly ascending")
        vecs.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "frame_indices", idx)

    @classmethod
    def from_raw(cls, video_id: str, raw, frame_indices=None) -> "FeatureBag":
        return cls(video_id, normalize_rows(raw), frame_indices)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


def correlation_matrix(bag_a: FeatureBag, bag_b: FeatureBag) -> np.ndarray:
    """``(n_a, n_b)`` matrix of inner products between the two bags' vectors.

    Uses ``einsum`` rather than a BLAS matmul: BLAS picks different
    accumulation orders for different matrix shapes, so the same pair of
    vectors could round differently inside a 9x9 and a 100x100 product.
    With einsum every entry is the same dot-product loop regardless of bag
    size, which keeps max pooling exactly monotone under subsetting.
    """
    if bag_a.d != bag_b.d:
        raise InvalidArgumentError(
            f"feature dimensions differ: {bag_a.video_id} d={bag_a.d}, {bag_b.video_id} d={bag_b.d}"
        )
    return np.einsum("id,jd->ij", bag_a.vectors, bag_b.vectors)


def check_pooling(pooling: str) -> str:
    if pooling not in POOLINGS:
        raise InvalidArgumentError(
            f"unknown pooling {pooling!r}; choose one of {', '.join(POOLINGS)} "
            "(histogram-majority pooling is not supported)"
        )
    return pooling


def _pool(values: np.ndarray, pooling: str) -> float:
    flat = values.ravel()
    if pooling == "max":
        return float(flat.max())
    if pooling == "mean":
        return float(flat.mean())
    if pooling == "median":
        # lower-middle order statistic for even counts
        mid = (flat.size - 1) // 2
        return float(np.partition(flat, mid)[mid])
    check_pooling(pooling)
    raise AssertionError("unreachable")


def pooled_similarity(bag_a: FeatureBag, bag_b: FeatureBag, pooling: Pooling = "max") -> float:
    check_pooling(pooling)
    return _pool(correlation_matrix(bag_a, bag_b), pooling)


def max_correlation_similarity(bag_a: FeatureBag, bag_b: FeatureBag) -> float:
    """Largest correlation over all cross pairs of the two bags."""
    return pooled_similarity(bag_a, bag_b, "max")


def subset_bag(bag: FeatureBag, mask: SelectionMask) -> FeatureBag:
    """Restrict ``bag`` to the frames selected by ``mask`` (order preserved)."""
    if mask.video_id and bag.video_id and mask.video_id != bag.video_id:
        raise InvalidArgumentError(
            f"mask is for video {mask.video_id!r} but bag is {bag.video_id!r}"
        )
    wanted = np.asarray(mask.selected, dtype=np.int64)
    pos = np.searchsorted(bag.frame_indices, wanted)
    pos_clipped = np.minimum(pos, bag.n - 1)
    missing = bag.frame_indices[pos_clipped] != wanted
    if missing.any():
        raise InvalidArgumentError(
            f"frame {int(wanted[np.flatnonzero(missing)[0]])} is not in bag {bag.video_id!r}"
        )
    return FeatureBag(bag.video_id, bag.vectors[pos], bag.frame_indices[pos])
