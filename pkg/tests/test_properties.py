"""Property-based checks of the invariants the library promises."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import nearest_member_scan, wilcoxon_auc
from posepool.pose_select import ClusterModel, SelectionMask, cluster_poses, objective_ratio, select_frames
from posepool.similarity import FeatureBag, max_correlation_similarity, pooled_similarity, subset_bag
from posepool.verify import roc_curve

angles = st.floats(min_value=-90, max_value=90, allow_nan=False, allow_infinity=False)
seeds = st.integers(min_value=0, max_value=2**31 - 1)


@st.composite
def pose_clouds(draw, min_m=4, max_m=30):
    m = draw(st.integers(min_m, max_m))
    pts = draw(arrays(np.float64, (m, 3), elements=angles))
    # keep enough spread that every k up to 3 has distinct centroids
    if len(np.unique(pts, axis=0)) < 4:
        pts = pts + np.arange(m)[:, None] * np.array([1.0, 0.5, 0.25])
    return pts


@st.composite
def bags(draw, d=6, max_n=7):
    n = draw(st.integers(1, max_n))
    x = draw(arrays(np.float64, (n, d), elements=st.floats(-1, 1, allow_nan=False)))
    x[:, 0] += 1.5  # bounded away from zero norm
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    return q * np.sign(np.diag(r))


@given(pose_clouds(), seeds, st.floats(0.1, 10), arrays(np.float64, 3, elements=st.floats(-50, 50)))
@settings(max_examples=60, deadline=None)
def test_objective_invariant_under_similarity_transforms(pts, seed, scale, shift):
    model = cluster_poses(pts, 3, seed=seed % 1000, restarts=2)
    base = objective_ratio(model, pts)
    rot = rotation(np.random.default_rng(seed))
    moved = scale * pts @ rot.T + shift
    moved_model = ClusterModel(3, scale * model.centroids @ rot.T + shift, model.assignments, 0, 0, 0)
    assert objective_ratio(moved_model, moved) == pytest.approx(base, rel=1e-9, abs=1e-12)


@given(pose_clouds(min_m=6), seeds, st.sampled_from([2, 3, 4, 9]))
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_selection_mask_validity(pts, seed, k):
    mask = select_frames(pts, k, seed % 1000, restarts=3)
    m = len(pts)
    assert mask.k == min(k, m)
    assert list(mask.selected) == sorted(set(mask.selected))
    assert mask.to_vector().sum() == mask.k
    if k < m:
        model = cluster_poses(pts, k, seed=seed % 1000, restarts=3)
        assert list(mask.selected) == nearest_member_scan(
            pts.tolist(), model.assignments.tolist(), model.centroids.tolist()
        )


@given(pose_clouds(), seeds)
@settings(max_examples=25, deadline=None)
def test_clustering_is_deterministic(pts, seed):
    a = cluster_poses(pts, 3, seed=seed % 1000, restarts=3)
    b = cluster_poses(pts, 3, seed=seed % 1000, restarts=3)
    assert a.assignments.tobytes() == b.assignments.tobytes()
    assert a.centroids.tobytes() == b.centroids.tobytes()


@given(bags(), bags(), st.sampled_from(["max", "mean", "median"]))
@settings(max_examples=60, deadline=None)
def test_pooling_symmetric_and_bounded(a, b, pooling):
    ba, bb = FeatureBag("a", a), FeatureBag("b", b)
    ab, ba_ = pooled_similarity(ba, bb, pooling), pooled_similarity(bb, ba, pooling)
    assert ab == pytest.approx(ba_, abs=1e-12)
    assert -1 - 1e-9 <= ab <= 1 + 1e-9


@given(bags(), bags(), st.randoms(use_true_random=False), st.sampled_from(["max", "mean", "median"]))
@settings(max_examples=60, deadline=None)
def test_pooling_permutation_invariant(a, b, rnd, pooling):
    pa, pb = list(range(len(a))), list(range(len(b)))
    rnd.shuffle(pa)
    rnd.shuffle(pb)
    x = pooled_similarity(FeatureBag("a", a), FeatureBag("b", b), pooling)
    y = pooled_similarity(FeatureBag("a", a[pa]), FeatureBag("b", b[pb]), pooling)
    assert x == pytest.approx(y, abs=1e-12)


@given(bags(), bags(), bags(max_n=1))
@settings(max_examples=60, deadline=None)
def test_max_never_decreases_when_appending(a, b, extra):
    before = max_correlation_similarity(FeatureBag("a", a), FeatureBag("b", b))
    after = max_correlation_similarity(FeatureBag("a", np.vstack([a, extra])), FeatureBag("b", b))
    assert after >= before


@given(bags(max_n=8), bags(max_n=8), st.data())
@settings(max_examples=60, deadline=None)
def test_subset_max_bounded_by_full(a, b, data):
    ba, bb = FeatureBag("a", a), FeatureBag("b", b)
    sel_a = data.draw(st.sets(st.integers(0, len(a) - 1), min_size=1))
    sel_b = data.draw(st.sets(st.integers(0, len(b) - 1), min_size=1))
    sub = max_correlation_similarity(
        subset_bag(ba, SelectionMask("a", len(a), tuple(sorted(sel_a)))),
        subset_bag(bb, SelectionMask("b", len(b), tuple(sorted(sel_b)))),
    )
    assert sub <= max_correlation_similarity(ba, bb)


@given(st.lists(st.tuples(st.integers(0, 20), st.booleans()), min_size=2, max_size=80))
@settings(max_examples=100, deadline=None)
def test_auc_is_wilcoxon(rows):
    scores = [s / 4 for s, _ in rows]
    labels = [l for _, l in rows]
    if all(labels) or not any(labels):
        return
    roc = roc_curve(scores, labels)
    assert roc.auc == pytest.approx(wilcoxon_auc(scores, labels), abs=1e-9)
    assert roc.points[0] == (0.0, 0.0) and roc.points[-1] == (1.0, 1.0)
    assert np.all(np.diff(roc.fpr) >= 0) and np.all(np.diff(roc.tpr) >= 0)
