import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import cdist

from knninfo.knn import (NeighborIndex, brute_force_count, brute_force_knn, build_index,
                         count_within, knn_of_sample)
from knninfo.metrics import JointMetric, Metric

LINE = np.array([[0.0], [1.0], [3.0]])


def test_build_index_examples():
    pts = np.array([[0, 0], [1, 0], [0, 1], [2, 2], [-1, 3]], dtype=float)
    assert len(build_index(pts, Metric.EUCLIDEAN)) == 5
    with pytest.raises(ValueError):
        build_index(np.array([[0.0, 1.0], [np.nan, 2.0]]), Metric.EUCLIDEAN)
    with pytest.raises(ValueError):
        build_index(np.array([[0.0, 1.0]]), Metric.EUCLIDEAN)
    with pytest.raises(ValueError):
        build_index(np.array([[0.0], [np.inf]]), Metric.EUCLIDEAN)


def test_index_does_not_alias_caller_array():
    pts = np.random.default_rng(0).random((20, 2))
    idx = build_index(pts)
    pts[0, 0] = 99.0
    assert pts.flags.writeable
    assert idx.data[0, 0] != 99.0


def test_knn_line_examples():
    idx = build_index(LINE, Metric.EUCLIDEAN)
    r1 = knn_of_sample(idx, 1, 1)
    assert r1.distances.tolist() == [1.0] and r1.indices.tolist() == [0]
    r2 = knn_of_sample(idx, 1, 2)
    assert r2.epsilon == 2.0 and r2.indices.tolist() == [0, 2]
    with pytest.raises(ValueError):
        knn_of_sample(idx, 1, 3)
    with pytest.raises(IndexError):
        knn_of_sample(idx, 3, 1)


def test_count_line_examples():
    idx = build_index(LINE, Metric.EUCLIDEAN)
    assert count_within(idx, 0, 1.0) == 0
    assert count_within(idx, 0, 1.5) == 1
    with pytest.raises(ValueError):
        count_within(idx, 0, 0.0)


def test_ties_broken_by_smaller_index():
    pts = np.array([[0.0], [1.0], [-1.0], [2.0], [-2.0]])
    r = knn_of_sample(build_index(pts), 0, 4)
    assert r.indices.tolist() == [1, 2, 3, 4]
    grid = np.array([[x, y] for x in range(6) for y in range(6)], dtype=float)
    idx = build_index(grid, Metric.CHEBYSHEV)
    for i in range(len(grid)):
        got = knn_of_sample(idx, i, 8)
        ref = brute_force_knn(grid, Metric.CHEBYSHEV, i, 8)
        assert got.indices.tolist() == ref.indices.tolist()


@pytest.mark.parametrize("metric", [Metric.EUCLIDEAN, Metric.CHEBYSHEV])
def test_4d_all_samples_match_oracle(metric):
    pts = np.random.default_rng(1).random((200, 4))
    idx = build_index(pts, metric)
    dist, ind = idx.knn_all(3)
    for i in range(200):
        ref = brute_force_knn(pts, metric, i, 3)
        assert np.array_equal(dist[i], ref.distances)
        assert np.array_equal(ind[i], ref.indices)
        single = knn_of_sample(idx, i, 3)
        assert np.array_equal(single.distances, ref.distances)


def test_gaussian_10k_3d_matches_pairwise_matrix():
    pts = np.random.default_rng(2).standard_normal((10_000, 3))
    idx = build_index(pts, Metric.EUCLIDEAN)
    dist, ind = idx.knn_all(3)
    rows = np.random.default_rng(3).choice(10_000, 300, replace=False)
    full = cdist(pts[rows], pts)
    full[np.arange(len(rows)), rows] = np.inf
    ref = np.sort(full, axis=1)[:, :3]
    np.testing.assert_allclose(dist[rows], ref, rtol=1e-12)
    for i in rows[:50]:
        assert np.array_equal(dist[i], brute_force_knn(pts, Metric.EUCLIDEAN, i, 3).distances)


@pytest.mark.parametrize("d", [1, 2, 5])
def test_counts_match_oracle(d):
    rng = np.random.default_rng(d)
    pts = rng.random((200, d))
    radii = rng.uniform(0.01, 0.5, 200)
    for metric in Metric:
        idx = build_index(pts, metric)
        counts = idx.count_all(radii)
        for i in range(200):
            ref = brute_force_count(pts, metric, i, radii[i])
            assert counts[i] == ref == count_within(idx, i, radii[i])


def test_counts_strict_at_exact_neighbour_distance():
    pts = np.random.default_rng(7).random((300, 2))
    for metric in Metric:
        idx = build_index(pts, metric)
        dist, _ = idx.knn_all(4)
        for k in (1, 2, 3, 4):
            counts = idx.count_all(dist[:, k - 1])
            assert np.all(counts >= k - 1)
            assert np.all(counts <= k - 1)  # continuous data: exactly the k-1 nearer ones


def test_joint_metric_matches_oracle():
    rng = np.random.default_rng(4)
    z = rng.standard_normal((300, 3))
    for mx in Metric:
        for my in Metric:
            jm = JointMetric(mx, my, 1, 2)
            idx = build_index(z, jm)
            dist, ind = idx.knn_all(5)
            for i in range(0, 300, 7):
                ref = brute_force_knn(z, jm, i, 5)
                assert np.array_equal(dist[i], ref.distances)
                assert np.array_equal(ind[i], ref.indices)
    with pytest.raises(ValueError):
        build_index(z, JointMetric(d_x=1, d_y=1))


def test_one_dimensional_sorted_count_equals_tree_count():
    rng = np.random.default_rng(5)
    pts = np.round(rng.random((500, 1)), 2)  # many exact ties
    radii = rng.choice([0.01, 0.02, 0.05, 0.1], 500)
    idx = build_index(pts)
    counts = idx.count_all(radii)
    for i in range(500):
        assert counts[i] == brute_force_count(pts, Metric.EUCLIDEAN, i, radii[i])


def test_clustered_and_duplicate_points():
    rng = np.random.default_rng(6)
    base = rng.random((30, 2))
    pts = np.vstack([base, base, base + 1e-12, rng.random((100, 2)) * 1e6])
    for metric in Metric:
        idx = build_index(pts, metric)
        dist, ind = idx.knn_all(6)
        for i in range(len(pts)):
            ref = brute_force_knn(pts, metric, i, 6)
            assert np.array_equal(dist[i], ref.distances)
            assert np.array_equal(ind[i], ref.indices)


coords = st.floats(min_value=-100, max_value=100, allow_nan=False, allow_subnormal=False)


@given(st.integers(2, 60).flatmap(lambda n: st.tuples(
    arrays(np.float64, (n, 2), elements=coords), st.integers(1, n - 1),
    st.sampled_from(list(Metric)))))
@settings(max_examples=150, deadline=None)
def test_property_oracle_equivalence(args):
    pts, k, metric = args
    idx = NeighborIndex(pts, metric, leafsize=2)
    dist, ind = idx.knn_all(k)
    for i in range(len(pts)):
        ref = brute_force_knn(pts, metric, i, k)
        assert np.array_equal(dist[i], ref.distances)
        assert np.array_equal(ind[i], ref.indices)
        assert i not in ind[i]
        assert np.all(np.diff(dist[i]) >= 0)
    r = dist[:, -1] + 0.5
    counts = idx.count_all(r)
    assert all(counts[i] == brute_force_count(pts, metric, i, r[i]) for i in range(len(pts)))


@given(arrays(np.float64, (40, 3), elements=coords), st.integers(1, 38))
@settings(max_examples=50, deadline=None)
def test_property_monotone_in_k(pts, k):
    idx = NeighborIndex(pts, Metric.EUCLIDEAN, leafsize=4)
    a, _ = idx.knn_all(k)
    b, _ = idx.knn_all(k + 1)
    assert np.array_equal(a, b[:, :k])
    assert np.all(b[:, k] >= b[:, k - 1])


def test_concurrent_queries_agree():
    from concurrent.futures import ThreadPoolExecutor

    pts = np.random.default_rng(8).random((2000, 3))
    idx = build_index(pts)
    expect = idx.knn_all(4)
    with ThreadPoolExecutor(4) as pool:
        results = list(pool.map(lambda _: idx.knn_all(4), range(8)))
    for dist, ind in results:
        assert np.array_equal(dist, expect[0]) and np.array_equal(ind, expect[1])
