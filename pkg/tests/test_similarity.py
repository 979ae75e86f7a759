import math

import numpy as np
import pytest

from oracles import naive_correlations
from posepool.errors import DataValidationError, InvalidArgumentError
from posepool.pose_select import SelectionMask
from posepool.similarity import (
    FeatureBag,
    correlation_matrix,
    max_correlation_similarity,
    normalize_feature,
    pooled_similarity,
    subset_bag,
)


def unit_rows(rng, n, d):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def e(i, d=4):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def test_normalize_three_four_five():
    np.testing.assert_allclose(normalize_feature([3, 4]), [0.6, 0.8], rtol=0, atol=1e-15)


def test_normalize_unit_vector_unchanged():
    np.testing.assert_array_equal(normalize_feature(e(0)), e(0))


def test_normalize_all_ones_4096():
    out = normalize_feature(np.ones(4096))
    np.testing.assert_array_equal(out, np.full(4096, 1 / 64))


@pytest.mark.parametrize("raw", [np.zeros(8), np.full(4, 1e-14), [1.0, np.nan], [np.inf, 0.0]])
def test_normalize_rejects_degenerate(raw):
    with pytest.raises(DataValidationError):
        normalize_feature(raw)


def test_normalize_idempotent(rng):
    v = rng.normal(size=64) * 17
    once = normalize_feature(v)
    np.testing.assert_allclose(normalize_feature(once), once, atol=1e-12, rtol=0)


def test_bag_requires_unit_rows():
    with pytest.raises(DataValidationError):
        FeatureBag("v", [[3.0, 4.0]])
    bag = FeatureBag.from_raw("v", [[3.0, 4.0], [0.0, 2.0]])
    np.testing.assert_allclose(np.linalg.norm(bag.vectors, axis=1), 1.0, atol=1e-12)
    assert bag.frame_indices.tolist() == [0, 1]


def test_bag_rejects_zero_row():
    with pytest.raises(DataValidationError, match="row 1"):
        FeatureBag.from_raw("v", [[1.0, 0.0], [0.0, 0.0]])


def test_bag_frame_indices_ascending():
    with pytest.raises(DataValidationError):
        FeatureBag("v", [e(0), e(1)], frame_indices=[3, 1])


def test_self_and_orthogonal_correlation():
    assert correlation_matrix(FeatureBag("a", [e(0)]), FeatureBag("b", [e(0)])).tolist() == [[1.0]]
    assert correlation_matrix(FeatureBag("a", [e(0)]), FeatureBag("b", [e(1)])).tolist() == [[0.0]]


def test_correlation_matches_double_loop(rng):
    a, b = unit_rows(rng, 3, 8), unit_rows(rng, 4, 8)
    got = correlation_matrix(FeatureBag("a", a), FeatureBag("b", b))
    assert got.shape == (3, 4)
    np.testing.assert_allclose(got, naive_correlations(a.tolist(), b.tolist()), atol=1e-12, rtol=0)


def test_correlation_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        correlation_matrix(FeatureBag("a", [e(0, 4)]), FeatureBag("b", [e(0, 5)]))


def test_shared_vector_gives_one(rng):
    shared = unit_rows(rng, 1, 16)
    a = FeatureBag("a", np.vstack([unit_rows(rng, 3, 16), shared]))
    b = FeatureBag("b", np.vstack([shared, unit_rows(rng, 5, 16)]))
    assert max_correlation_similarity(a, b) == pytest.approx(1.0, abs=1e-9)


def test_max_hand_example():
    a = FeatureBag("a", [e(0), (e(0) + e(1)) / math.sqrt(2)])
    b = FeatureBag("b", [e(1)])
    assert max_correlation_similarity(a, b) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_max_of_nine_by_nine_matches_oracle(rng):
    a, b = unit_rows(rng, 9, 32), unit_rows(rng, 9, 32)
    expected = max(max(row) for row in naive_correlations(a.tolist(), b.tolist()))
    got = max_correlation_similarity(FeatureBag("a", a), FeatureBag("b", b))
    assert got == pytest.approx(expected, abs=1e-12)


def test_mean_pooling_examples():
    one = FeatureBag("a", [e(0)])
    assert pooled_similarity(one, one, "mean") == 1.0
    assert pooled_similarity(one, FeatureBag("b", [e(0), e(1)]), "mean") == 0.5


def test_median_is_sorted_index_12_of_25(rng):
    a, b = unit_rows(rng, 5, 8), unit_rows(rng, 5, 8)
    entries = sorted(x for row in naive_correlations(a.tolist(), b.tolist()) for x in row)
    got = pooled_similarity(FeatureBag("a", a), FeatureBag("b", b), "median")
    assert got == pytest.approx(entries[12], abs=1e-12)


def test_median_even_count_takes_lower_middle():
    a = FeatureBag("a", [e(0)])
    b = FeatureBag.from_raw("b", [[1, 0, 0, 0], [1, 1, 0, 0], [0, 1, 0, 0], [1, 3, 0, 0]])
    # entries 1, 0.7071, 0, 0.3162 -> sorted lower-middle is 0.3162
    assert pooled_similarity(a, b, "median") == pytest.approx(1 / math.sqrt(10), abs=1e-12)


def test_unknown_pooling_mentions_histogram():
    bag = FeatureBag("a", [e(0)])
    with pytest.raises(InvalidArgumentError, match="histogram"):
        pooled_similarity(bag, bag, "majority")


def test_max_pooling_matches_max_correlation(rng):
    a, b = FeatureBag("a", unit_rows(rng, 6, 10)), FeatureBag("b", unit_rows(rng, 4, 10))
    assert pooled_similarity(a, b, "max") == max_correlation_similarity(a, b)


def test_subset_all_frames_is_identity(rng):
    bag = FeatureBag("v", unit_rows(rng, 6, 8))
    sub = subset_bag(bag, SelectionMask.all_frames("v", 6))
    np.testing.assert_array_equal(sub.vectors, bag.vectors)
    np.testing.assert_array_equal(sub.frame_indices, bag.frame_indices)


def test_subset_singleton(rng):
    bag = FeatureBag("v", unit_rows(rng, 3, 8))
    sub = subset_bag(bag, SelectionMask("v", 3, (0,)))
    assert sub.n == 1
    np.testing.assert_array_equal(sub.vectors[0], bag.vectors[0])


def test_subset_nine_of_49_matches_manual_filter(rng):
    bag = FeatureBag("v", unit_rows(rng, 49, 8))
    chosen = sorted(rng.choice(49, size=9, replace=False).tolist())
    sub = subset_bag(bag, SelectionMask("v", 49, tuple(chosen)))
    manual = [row for i, row in enumerate(bag.vectors.tolist()) if i in chosen]
    assert sub.frame_indices.tolist() == chosen
    assert sub.vectors.tolist() == manual


def test_subset_rejects_missing_frame_and_wrong_video(rng):
    bag = FeatureBag("v", unit_rows(rng, 4, 8), frame_indices=[0, 2, 4, 6])
    with pytest.raises(InvalidArgumentError, match="frame 3"):
        subset_bag(bag, SelectionMask("v", 8, (2, 3)))
    with pytest.raises(InvalidArgumentError):
        subset_bag(bag, SelectionMask("other", 8, (2,)))
