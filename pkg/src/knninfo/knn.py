"""Exact k-nearest-neighbour queries that exclude the query point itself.

:class:`NeighborIndex` wraps a compiled k-d tree.  ``brute_force_knn`` and
``brute_force_count`` are the O(N) per-query oracles used to verify it.
"""

from dataclasses import dataclass

import numpy as np

from . import _kdtree
from .metrics import JointMetric, Metric, distances_to

LEAFSIZE = 16


@dataclass(frozen=True)
class KnnResult:
    indices: np.ndarray
    distances: np.ndarray

    @property
    def epsilon(self):
        return float(self.distances[-1])


class NeighborIndex:
    """Immutable k-d tree over an (N, d) point array.

    Queries are read-only, so one index can serve several threads at once.
    """

    def __init__(self, points, metric=Metric.EUCLIDEAN, leafsize=LEAFSIZE):
        data = np.array(points, dtype=np.float64, order="C", copy=True)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValueError("points must be a 2-d array (n_samples, n_dims)")
        n, d = data.shape
        if n < 2:
            raise ValueError(f"need at least 2 points to build an index, got {n}")
        if np.isnan(data).any():
            rows = np.unique(np.nonzero(np.isnan(data))[0])[:10]
            raise ValueError(f"points contain NaN (rows {rows.tolist()})")
        if not np.isfinite(data).all():
            raise ValueError("points contain infinite coordinates")
        if isinstance(metric, JointMetric):
            if metric.d_z != d:
                raise ValueError(f"joint metric expects {metric.d_z} columns, got {d}")
            self.split, self.mx, self.my = metric.d_x, metric.x_metric.code, metric.y_metric.code
        else:
            metric = Metric.parse(metric)
            self.split, self.mx, self.my = d, metric.code, metric.code
        self.metric = metric
        self.data = data
        self.data.flags.writeable = False
        perm, *nodes = _kdtree.build(data, int(leafsize))
        # points stored in tree order so leaf scans are contiguous
        self._tree = (np.ascontiguousarray(data[perm]), perm, *nodes)
        self._sorted = np.sort(data[:, 0]) if d == 1 else None

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    def __len__(self):
        return self.n

    def knn_all(self, k):
        """(distances, indices), each (N, k), of every sample's k nearest others."""
        k = self._check_k(k)
        return _kdtree.knn_self(*self._tree, k, self.split, self.mx, self.my)

    def count_all(self, radii):
        """For every sample i, the number of j != i with distance < radii[i]."""
        radii = np.ascontiguousarray(np.broadcast_to(np.asarray(radii, dtype=np.float64), (self.n,)))
        if not (radii > 0).all():
            raise ValueError("radii must be positive")
        if self._sorted is not None:
            counts = _kdtree.count_sorted_1d(self._sorted, self.data[:, 0], radii)
        else:
            counts = _kdtree.count_self(*self._tree, radii, self.split, self.mx, self.my)
        # the sample itself sits at distance 0 < r
        return counts - 1

    def _check_k(self, k):
        if int(k) != k or k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")
        if k >= self.n:
            raise ValueError(f"k={k} must be smaller than the number of points N={self.n}")
        return int(k)

    def _check_i(self, i):
        if int(i) != i or not 0 <= i < self.n:
            raise IndexError(f"sample index {i!r} out of range for N={self.n}")
        return int(i)


def build_index(points, metric=Metric.EUCLIDEAN):
    """Build an exact kNN index; ``metric`` may be a Metric or a JointMetric."""
    return NeighborIndex(points, metric)


def knn_of_sample(idx, i, k):
    """The k nearest other points of sample i, ties broken by smaller index."""
    i = idx._check_i(i)
    k = idx._check_k(k)
    q = idx.data[i:i + 1]
    dist, ind = _kdtree.knn_all(*idx._tree, q, np.array([i]), k,
                                idx.split, idx.mx, idx.my)
    return KnnResult(indices=ind[0], distances=dist[0])


def count_within(idx, i, r):
    """Number of samples j != i with distance(x(j), x(i)) < r (strict)."""
    i = idx._check_i(i)
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r!r}")
    q = idx.data[i:i + 1]
    radius = np.array([float(r)])
    if idx._sorted is not None:
        count = _kdtree.count_sorted_1d(idx._sorted, q[:, 0], radius)[0]
    else:
        count = _kdtree.count_all(*idx._tree, q, radius, idx.split, idx.mx, idx.my)[0]
    return int(count) - 1


def brute_force_knn(points, metric, i, k):
    """Oracle for :func:`knn_of_sample` by a full scan."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={n}")
    dist = distances_to(metric, points, points[i])
    others = np.delete(np.arange(n), i)
    order = np.lexsort((others, dist[others]))[:k]
    return KnnResult(indices=others[order], distances=dist[others][order])


def brute_force_count(points, metric, i, r):
    """Oracle for :func:`count_within` by a full scan."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    dist = distances_to(metric, points, points[i])
    below = dist < r
    below[i] = False
    return int(below.sum())
