import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kpicluster.preprocess import TimeNodeMatrix, standardize
from kpicluster.reduce import (
    RETAINED_BUCKETS,
    FixedPCA,
    PcaResult,
    feature_matrix,
    flatten_job,
    pca2,
    retained_bucket,
    retained_info_table,
)


def matrix(values, job="j", kpi="k"):
    values = np.asarray(values, dtype=float)
    return TimeNodeMatrix(job_id=job, kpi=kpi, grid=np.linspace(0, 1, len(values)),
                          values=values, node_ids=tuple(str(i) for i in range(values.shape[1])))


def standardized(values, **kw):
    return standardize(matrix(values, **kw))


def with_spectrum(variances, t=64, seed=0, job="j"):
    """Centered matrix whose covariance eigenvalues are exactly ``variances``."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(t, len(variances))))
    q -= q.mean(axis=0)
    q, _ = np.linalg.qr(q)
    rot, _ = np.linalg.qr(rng.normal(size=(len(variances), len(variances))))
    return matrix(q * np.sqrt(np.asarray(variances) * t) @ rot.T, job=job)


class TestPca2:
    def test_two_nodes_retain_everything(self):
        rng = np.random.default_rng(1)
        r = pca2(standardized(rng.normal(size=(20, 2))))
        assert r.retained == 1.0

    def test_identical_columns(self):
        col = np.sin(np.linspace(0, 3, 16))
        z = standardized(np.column_stack([col] * 3))
        r = pca2(z)
        np.testing.assert_allclose(r.eigenvalues, [3, 0, 0], atol=1e-12)
        assert r.retained == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(r.scores[:, 0]), np.sqrt(3) * np.abs(z.values[:, 0]),
                                   atol=1e-12)

    def test_two_signals_duplicated(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(2, 50))
        r = pca2(standardized(np.column_stack([a, a, b, b])))
        assert r.retained == pytest.approx(1.0)
        np.testing.assert_allclose(r.eigenvalues[2:], 0, atol=1e-12)

    def test_eigenvalues_match_brute_force(self):
        rng = np.random.default_rng(3)
        z = standardized(rng.normal(size=(30, 5)))
        cov = z.values.T @ z.values / 30
        expected = np.sort(np.linalg.eigvalsh(cov))[::-1]
        np.testing.assert_allclose(pca2(z).eigenvalues, expected, atol=1e-12)

    def test_all_zero_matrix(self):
        r = pca2(matrix(np.zeros((5, 3))))
        assert r.retained == 1.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            pca2(matrix([[0.0, np.nan], [1.0, 2.0]]))

    def test_sign_convention(self):
        rng = np.random.default_rng(4)
        r = pca2(standardized(rng.normal(size=(25, 4))))
        for j in range(2):
            col = r.components[:, j]
            assert col[np.argmax(np.abs(col))] > 0


finite = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 30), st.integers(2, 7)), elements=finite),
       st.randoms())
def test_pca_properties(X, rnd):
    z = standardized(X)
    r = pca2(z)
    Z = z.values
    np.testing.assert_allclose(r.components.T @ r.components, np.eye(2), atol=1e-8)
    assert np.all(np.diff(r.eigenvalues) <= 1e-12) and np.all(r.eigenvalues >= 0)
    assert 0.0 <= r.retained <= 1.0
    cov = Z.T @ Z / Z.shape[0]
    assert abs(r.eigenvalues.sum() - np.trace(cov)) <= 1e-8 * max(1.0, np.trace(cov))
    total = np.sum(Z**2)
    if total > 1e-6:
        resid = np.sum((Z - r.scores @ r.components.T) ** 2) / total
        assert abs(resid - (1 - r.retained)) <= 1e-8
        pc1, pc2 = r.scores.T
        assert abs(pc1 @ pc2) <= 1e-6 * max(np.linalg.norm(pc1) * np.linalg.norm(pc2), 1e-12) + 1e-9
    again = pca2(z)
    assert np.array_equal(again.scores, r.scores)
    perm = list(range(Z.shape[1]))
    rnd.shuffle(perm)
    p = pca2(matrix(Z[:, perm]))
    np.testing.assert_allclose(p.eigenvalues, r.eigenvalues, atol=1e-9)
    assert p.retained == pytest.approx(r.retained, abs=1e-9)


def test_fixed_pca_estimator():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 4))
    X -= X.mean(axis=0)
    est = FixedPCA().fit(X)
    np.testing.assert_allclose(est.transform(X), X @ est.components_)
    assert est.get_params() == {"n_components": 2, "symmetry_tol": 1e-8}


class TestRetainedTable:
    @pytest.mark.parametrize("value,bucket", [(1.0, ">=95"), (0.95, ">=95"), (0.9, "90-95"),
                                              (0.85, "85-90"), (0.8, "80-85"), (0.75, "75-80"),
                                              (0.7499, "<75")])
    def test_bucket_edges(self, value, bucket):
        assert retained_bucket(value) == bucket

    def test_all_two_node_jobs(self):
        rng = np.random.default_rng(6)
        results = [pca2(standardized(rng.normal(size=(10, 2)), job=f"j{i}")) for i in range(5)]
        assert retained_info_table(results)[">=95"] == 5

    def test_mirrors_reference_distribution(self):
        target = dict(zip(RETAINED_BUCKETS, (142, 76, 27, 26, 20, 11)))
        shares = dict(zip(RETAINED_BUCKETS, (0.97, 0.92, 0.87, 0.82, 0.77, 0.6)))
        results, i = [], 0
        for bucket, count in target.items():
            r = shares[bucket]
            for _ in range(count):
                # top two eigenvalues carry share r of the total variance
                spectrum = [0.6 * r, 0.4 * r, 0.5 * (1 - r), 0.5 * (1 - r)]
                results.append(pca2(with_spectrum(spectrum, seed=i, job=f"j{i:03d}")))
                i += 1
        assert sum(target.values()) == 302
        assert retained_info_table(results) == target


class TestFlatten:
    def _result(self, scores, kpi="k", job="j"):
        scores = np.asarray(scores, dtype=float)
        return PcaResult(job, kpi, scores, np.eye(2), np.array([1.0, 0.0]), 1.0)

    def test_layout(self):
        fv = flatten_job({"k": self._result([[1, 4], [2, 5], [3, 6]])}, ["k"])
        assert fv.data.tolist() == [1, 2, 3, 4, 5, 6]

    def test_two_kpis_in_selection_order(self):
        res = {"a": self._result([[1, 2], [3, 4]], "a"), "b": self._result([[5, 6], [7, 8]], "b")}
        fv = flatten_job(res, ["a", "b"])
        assert len(fv.data) == 8
        assert fv.data.tolist() == [1, 3, 2, 4, 5, 7, 6, 8]

    def test_eleven_kpis(self):
        res = {f"k{i}": self._result(np.zeros((128, 2)), f"k{i}") for i in range(11)}
        assert len(flatten_job(res, list(res)).data) == 2816

    def test_missing_kpi(self):
        with pytest.raises(KeyError):
            flatten_job({"a": self._result([[1, 2]])}, ["a", "b"])

    def test_mismatched_length(self):
        res = {"a": self._result(np.zeros((3, 2)), "a"), "b": self._result(np.zeros((4, 2)), "b")}
        with pytest.raises(ValueError):
            flatten_job(res, ["a", "b"])

    def test_feature_matrix_rows(self):
        res = {"a": self._result([[1, 2], [3, 4]], "a")}
        X = feature_matrix([flatten_job(res, ["a"]), flatten_job(res, ["a"])])
        assert X.shape == (2, 4)
