"""Compiled k-d tree kernels (median splits, exact queries).

Points live in one (N, D) float64 array whose first ``split`` columns form
the x part and the rest the y part.  A part's norm is chosen by a code
(0 Euclidean, 1 Chebyshev); with ``split == D`` there is no y part.  The
distance arithmetic mirrors :func:`knninfo.metrics.distances_to` exactly.

Box bounds are computed with the same operation order as point distances.
Because rounding is monotone, a computed point distance never falls below
the computed lower bound of its box, nor above the upper bound, so pruning
is exact without any slack.
"""

import numpy as np
from numba import njit

_STACK = 256


@njit(cache=True, nogil=True, inline="always")
def _part_dist(data, j, q, c0, c1, code):
    if code == 1 or c1 - c0 == 1:
        m = 0.0
        for c in range(c0, c1):
            t = abs(data[j, c] - q[c])
            if t > m:
                m = t
        return m
    s = 0.0
    for c in range(c0, c1):
        t = data[j, c] - q[c]
        s += t * t
    return np.sqrt(s)


@njit(cache=True, nogil=True, inline="always")
def _dist(data, j, q, split, mx, my):
    d = data.shape[1]
    dx = _part_dist(data, j, q, 0, split, mx)
    if split == d:
        return dx
    dy = _part_dist(data, j, q, split, d, my)
    return dx if dx >= dy else dy


@njit(cache=True, nogil=True, inline="always")
def _part_box(lo, hi, node, q, c0, c1, code, upper):
    # lower (upper=False) or upper (upper=True) bound of the part distance
    single = code == 1 or c1 - c0 == 1
    acc = 0.0
    for c in range(c0, c1):
        a = lo[node, c]
        b = hi[node, c]
        if upper:
            ta = abs(a - q[c])
            tb = abs(b - q[c])
            t = ta if ta >= tb else tb
        elif q[c] < a:
            t = a - q[c]
        elif q[c] > b:
            t = q[c] - b
        else:
            t = 0.0
        if single:
            if t > acc:
                acc = t
        else:
            acc += t * t
    return acc if single else np.sqrt(acc)


@njit(cache=True, nogil=True, inline="always")
def _box(lo, hi, node, q, split, mx, my, upper):
    d = lo.shape[1]
    bx = _part_box(lo, hi, node, q, 0, split, mx, upper)
    if split == d:
        return bx
    by = _part_box(lo, hi, node, q, split, d, my, upper)
    return bx if bx >= by else by


@njit(cache=True, nogil=True)
def build(data, leafsize):
    """Return (perm, start, end, left, right, lo, hi) describing the tree."""
    n, d = data.shape
    half = (leafsize + 1) // 2
    max_nodes = 2 * (n // half + 1) + 1
    perm = np.arange(n)
    start = np.empty(max_nodes, np.int64)
    end = np.empty(max_nodes, np.int64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    lo = np.empty((max_nodes, d))
    hi = np.empty((max_nodes, d))
    stack = np.empty(_STACK, np.int64)
    start[0] = 0
    end[0] = n
    n_nodes = 1
    top = 0
    stack[0] = 0
    while top >= 0:
        node = stack[top]
        top -= 1
        s = start[node]
        e = end[node]
        for c in range(d):
            a = data[perm[s], c]
            b = a
            for t in range(s + 1, e):
                v = data[perm[t], c]
                if v < a:
                    a = v
                if v > b:
                    b = v
            lo[node, c] = a
            hi[node, c] = b
        if e - s <= leafsize:
            continue
        dim = 0
        spread = -1.0
        for c in range(d):
            w = hi[node, c] - lo[node, c]
            if w > spread:
                spread = w
                dim = c
        if spread <= 0.0:
            continue
        seg = perm[s:e].copy()
        order = np.argsort(data[seg, dim], kind="mergesort")
        for t in range(e - s):
            perm[s + t] = seg[order[t]]
        mid = (s + e) // 2
        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        start[lchild] = s
        end[lchild] = mid
        start[rchild] = mid
        end[rchild] = e
        left[node] = lchild
        right[node] = rchild
        stack[top + 1] = rchild
        stack[top + 2] = lchild
        top += 2
    return (perm, start[:n_nodes].copy(), end[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), lo[:n_nodes].copy(), hi[:n_nodes].copy())


@njit(cache=True, nogil=True, inline="always")
def _knn_one(sdata, perm, start, end, left, right, lo, hi, q, skip, k, split, mx, my,
             out_d, out_i, stack, bound):
    n = sdata.shape[0]
    for t in range(k):
        out_d[t] = np.inf
        out_i[t] = n
    top = 0
    stack[0] = 0
    bound[0] = 0.0
    while top >= 0:
        node = stack[top]
        lb = bound[top]
        top -= 1
        if lb > out_d[k - 1]:
            continue
        if left[node] < 0:
            for t in range(start[node], end[node]):
                j = perm[t]
                if j == skip:
                    continue
                dj = _dist(sdata, t, q, split, mx, my)
                if dj < out_d[k - 1] or (dj == out_d[k - 1] and j < out_i[k - 1]):
                    pos = k - 1
                    while pos > 0 and (out_d[pos - 1] > dj or (out_d[pos - 1] == dj and out_i[pos - 1] > j)):
                        out_d[pos] = out_d[pos - 1]
                        out_i[pos] = out_i[pos - 1]
                        pos -= 1
                    out_d[pos] = dj
                    out_i[pos] = j
            continue
        a = left[node]
        b = right[node]
        da = _box(lo, hi, a, q, split, mx, my, False)
        db = _box(lo, hi, b, q, split, mx, my, False)
        # nearer child is popped first
        if da > db:
            a, b = b, a
            da, db = db, da
        if db <= out_d[k - 1]:
            top += 1
            stack[top] = b
            bound[top] = db
        if da <= out_d[k - 1]:
            top += 1
            stack[top] = a
            bound[top] = da


@njit(cache=True, nogil=True)
def knn_all(sdata, perm, start, end, left, right, lo, hi, queries, skips, k, split, mx, my):
    """k nearest neighbours of each query row, excluding index ``skips[i]``.

    ``sdata`` holds the points in tree order (``sdata[t] = data[perm[t]]``);
    returned indices refer to the original order.  Ties in distance are
    broken by smaller point index.
    """
    m = queries.shape[0]
    dist = np.empty((m, k))
    idx = np.empty((m, k), np.int64)
    stack = np.empty(_STACK, np.int64)
    bound = np.empty(_STACK)
    for i in range(m):
        _knn_one(sdata, perm, start, end, left, right, lo, hi, queries[i], skips[i], k,
                 split, mx, my, dist[i], idx[i], stack, bound)
    return dist, idx


@njit(cache=True, nogil=True)
def knn_self(sdata, perm, start, end, left, right, lo, hi, k, split, mx, my):
    """k nearest other points of every indexed point, rows in original order.

    Queries run in tree order so consecutive searches touch the same leaves.
    """
    n = sdata.shape[0]
    dist = np.empty((n, k))
    idx = np.empty((n, k), np.int64)
    stack = np.empty(_STACK, np.int64)
    bound = np.empty(_STACK)
    for t in range(n):
        j = perm[t]
        _knn_one(sdata, perm, start, end, left, right, lo, hi, sdata[t], j, k,
                 split, mx, my, dist[j], idx[j], stack, bound)
    return dist, idx


@njit(cache=True, nogil=True, inline="always")
def _count_one(sdata, start, end, left, right, lo, hi, q, r, split, mx, my, stack):
    cnt = 0
    top = 0
    stack[0] = 0
    while top >= 0:
        node = stack[top]
        top -= 1
        if _box(lo, hi, node, q, split, mx, my, False) >= r:
            continue
        if _box(lo, hi, node, q, split, mx, my, True) < r:
            cnt += end[node] - start[node]
            continue
        if left[node] < 0:
            for t in range(start[node], end[node]):
                if _dist(sdata, t, q, split, mx, my) < r:
                    cnt += 1
            continue
        stack[top + 1] = right[node]
        stack[top + 2] = left[node]
        top += 2
    return cnt


@njit(cache=True, nogil=True)
def count_all(sdata, perm, start, end, left, right, lo, hi, queries, radii, split, mx, my):
    """Number of points at distance strictly below ``radii[i]`` from each query row."""
    m = queries.shape[0]
    out = np.zeros(m, np.int64)
    stack = np.empty(_STACK, np.int64)
    for i in range(m):
        out[i] = _count_one(sdata, start, end, left, right, lo, hi, queries[i], radii[i],
                            split, mx, my, stack)
    return out


@njit(cache=True, nogil=True)
def count_self(sdata, perm, start, end, left, right, lo, hi, radii, split, mx, my):
    """Strict counts around every indexed point (self included), original order."""
    n = sdata.shape[0]
    out = np.zeros(n, np.int64)
    stack = np.empty(_STACK, np.int64)
    for t in range(n):
        j = perm[t]
        out[j] = _count_one(sdata, start, end, left, right, lo, hi, sdata[t], radii[j],
                            split, mx, my, stack)
    return out


@njit(cache=True, nogil=True)
def count_sorted_1d(sorted_values, queries, radii):
    """Strict |v - q| < r counts on a sorted 1-d array via two binary searches.

    fl(v - q) is nondecreasing in v, so both predicates split the sorted
    array into a prefix and a suffix and the count is exact.
    """
    n = sorted_values.shape[0]
    m = queries.shape[0]
    out = np.empty(m, np.int64)
    for i in range(m):
        q = queries[i]
        r = radii[i]
        # first index with v - q >= r
        a, b = 0, n
        while a < b:
            mid = (a + b) >> 1
            if sorted_values[mid] - q < r:
                a = mid + 1
            else:
                b = mid
        upper = a
        # first index with q - v < r
        a, b = 0, n
        while a < b:
            mid = (a + b) >> 1
            if q - sorted_values[mid] < r:
                b = mid
            else:
                a = mid + 1
        lower = a
        out[i] = upper - lower if upper > lower else 0
    return out
