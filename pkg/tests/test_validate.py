import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kpicluster.exceptions import UndefinedIndexError
from kpicluster.validate import (
    Index,
    ValidationScore,
    calinski_harabasz,
    cluster_geometry,
    davies_bouldin,
    score_partition,
    select_optimal_k,
    silhouette,
)

X4 = np.array([[0.0], [1.0], [10.0], [11.0]])
AABB = ["A", "A", "B", "B"]


class TestHandFixture:
    def test_silhouette(self):
        mean, br = silhouette(X4, AABB)
        assert mean == pytest.approx(0.8997493734, abs=1e-6)
        np.testing.assert_allclose(br.s, [0.9047619, 0.8947368, 0.8947368, 0.9047619], atol=1e-6)

    def test_calinski_harabasz(self):
        s = calinski_harabasz(X4, AABB)
        assert (s.ss_b, s.ss_w, s.value) == pytest.approx((100, 1, 200))

    def test_worst_split(self):
        s = calinski_harabasz(X4, ["A", "B", "A", "B"])
        assert (s.ss_b, s.ss_w, s.value) == pytest.approx((1, 100, 0.02))

    def test_davies_bouldin(self):
        geo = cluster_geometry(X4, AABB)
        np.testing.assert_allclose(geo.within_scatter, [0.5, 0.5])
        assert geo.centroid_distances[0, 1] == 10
        assert davies_bouldin(X4, AABB).value == pytest.approx(0.1)


class TestConventions:
    def test_coincident_points_give_zero_silhouette(self):
        mean, br = silhouette(np.zeros((4, 2)), [0, 0, 1, 1])
        assert mean == 0 and np.all(br.s == 0)

    def test_singleton_scores_zero(self):
        _, br = silhouette(np.array([[0.0], [1.0], [5.0]]), [0, 0, 1])
        assert br.s[2] == 0

    def test_perfect_clusters_give_infinite_ch(self):
        X = np.array([[0.0], [0.0], [3.0], [3.0]])
        assert calinski_harabasz(X, [0, 0, 1, 1]).value == math.inf

    def test_zero_scatter_db(self):
        X = np.array([[0.0], [0.0], [3.0], [3.0]])
        assert davies_bouldin(X, [0, 0, 1, 1]).value == 0

    def test_farther_apart_shrinks_db(self):
        base = davies_bouldin(X4, AABB).value
        far = np.array([[0.0], [1.0], [100.0], [101.0]])
        assert davies_bouldin(far, AABB).value == pytest.approx(base / 10, rel=1e-12)

    def test_coincident_centroids(self):
        X = np.array([[-1.0], [1.0], [-2.0], [2.0]])
        with pytest.raises(UndefinedIndexError):
            davies_bouldin(X, [0, 0, 1, 1])
        assert score_partition(X, [0, 0, 1, 1])[Index.DAVIES_BOULDIN] is None

    @pytest.mark.parametrize("labels", [[0, 0, 0, 0], [0, 1, 2, 3]])
    def test_k_out_of_range(self, labels):
        for fn in (calinski_harabasz, davies_bouldin, lambda X, l: silhouette(X, l)):
            with pytest.raises(UndefinedIndexError):
                fn(X4, labels)
        assert all(v is None for v in score_partition(X4, labels).values())


def random_instance(rng):
    n = int(rng.integers(4, 61))
    d = int(rng.integers(1, 9))
    k = int(rng.integers(2, min(6, n - 1) + 1))
    X = rng.normal(size=(n, d)) + rng.integers(0, 4, size=(n, 1)) * 3.0
    labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(labels)
    return X, labels


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300) if b != 0 else abs(a)


def test_brute_force_oracle_agreement():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        X, labels = random_instance(rng)
        Xl, ll = X.tolist(), labels.tolist()
        metric = ("euclidean", "manhattan", "cosine")[trial % 3]
        assert rel_err(silhouette(X, labels, metric)[0], oracles.silhouette(Xl, ll, metric)) <= 1e-9
        assert rel_err(calinski_harabasz(X, labels).value, oracles.calinski_harabasz(Xl, ll)) <= 1e-9
        assert rel_err(davies_bouldin(X, labels).value, oracles.davies_bouldin(Xl, ll)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.sampled_from(["euclidean", "manhattan", "cosine"]))
def test_invariances(seed, scale, metric):
    rng = np.random.default_rng(seed)
    X, labels = random_instance(rng)
    relabel = rng.permutation(labels.max() + 1)[labels] + 7
    base = score_partition(X, labels, metric)
    assert score_partition(X, relabel, metric) == base
    scaled = score_partition(X * scale, labels, metric)
    for index, value in base.items():
        assert rel_err(scaled[index], value) <= 1e-9
    mean, br = silhouette(X, labels, metric)
    assert -1 <= mean <= 1 and np.all(np.abs(br.s) <= 1)


def shrink(X, labels, t):
    c = np.array([X[labels == lab].mean(axis=0) for lab in labels])
    return c + t * (X - c)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_shrinking_improves_ch_and_db(seed, t):
    X, labels = random_instance(np.random.default_rng(seed))
    before, after = score_partition(X, labels), score_partition(shrink(X, labels, t), labels)
    assert after[Index.CALINSKI_HARABASZ] >= before[Index.CALINSKI_HARABASZ] * (1 - 1e-12)
    assert after[Index.DAVIES_BOULDIN] <= before[Index.DAVIES_BOULDIN] * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_shrinking_separated_clusters_improves_silhouette(seed, t):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    labels = np.repeat(np.arange(k), rng.integers(2, 10, size=k))
    X = rng.normal(size=(len(labels), 3)) + 10.0 * rng.normal(size=(k, 3))[labels]
    before = silhouette(X, labels)[0]
    if before <= 0.5:
        return
    assert silhouette(shrink(X, labels, t), labels)[0] >= before - 1e-12


def test_shrinking_can_lower_silhouette_of_overlapping_clusters():
    # b_i shrinks too, so without separation the silhouette may drop
    X = np.array([[6.0], [3.0], [2.0], [4.0], [8.0]])
    labels = np.array([0, 0, 1, 1, 1])
    assert silhouette(shrink(X, labels, 0.5), labels)[0] < silhouette(X, labels)[0]


def test_geometry_invariants():
    X, labels = random_instance(np.random.default_rng(5))
    geo = cluster_geometry(X, labels)
    assert geo.sizes.sum() == X.shape[0]
    d = geo.centroid_distances
    assert np.array_equal(d, d.T) and np.all(np.diag(d) == 0)


class TestSelectOptimalK:
    def test_silhouette_maximizes(self):
        assert select_optimal_k({2: 0.3, 3: 0.523, 4: 0.4}, "silhouette") == (3, 0.523)

    def test_db_minimizes(self):
        assert select_optimal_k({2: 0.9, 13: 0.503, 20: 0.6}, "davies_bouldin") == (13, 0.503)

    def test_tie_prefers_smaller_k(self):
        assert select_optimal_k({7: 0.5, 2: 0.5}, Index.SILHOUETTE) == (2, 0.5)

    def test_missing_skipped(self):
        scores = {2: None, 3: float("nan"), 4: ValidationScore(Index.CALINSKI_HARABASZ, 5.0, 4)}
        assert select_optimal_k(scores, Index.CALINSKI_HARABASZ) == (4, 5.0)

    def test_inf_ranks_first_for_ch(self):
        assert select_optimal_k({2: 1e9, 3: math.inf}, Index.CALINSKI_HARABASZ)[0] == 3

    def test_all_missing(self):
        with pytest.raises(ValueError):
            select_optimal_k({2: None}, Index.SILHOUETTE)
