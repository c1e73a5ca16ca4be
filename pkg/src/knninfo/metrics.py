"""Norms, pointwise distances and unit-ball volumes.

Distances are evaluated coordinate by coordinate in a fixed order
(Euclidean: running sum of squared differences, then one square root;
Chebyshev: running maximum of absolute differences).  The compiled k-d tree
uses the same arithmetic, so tree results and the brute-force oracle agree
bit for bit.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .special import log_gamma


class Metric(str, enum.Enum):
    EUCLIDEAN = "l2"
    CHEBYSHEV = "linf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "l2": cls.EUCLIDEAN, "euclidean": cls.EUCLIDEAN,
            "linf": cls.CHEBYSHEV, "chebyshev": cls.CHEBYSHEV, "max": cls.CHEBYSHEV,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown metric {value!r}; expected 'l2' or 'linf'") from None

    @property
    def code(self):
        # integer tag understood by the compiled kernels
        return 0 if self is Metric.EUCLIDEAN else 1


@dataclass(frozen=True)
class JointMetric:
    """Max-composition of a metric on x and a metric on y.

    d((x, y), (x', y')) = max(x_metric(x, x'), y_metric(y, y')).
    """

    x_metric: Metric = Metric.CHEBYSHEV
    y_metric: Metric = Metric.CHEBYSHEV
    d_x: int = 1
    d_y: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x_metric", Metric.parse(self.x_metric))
        object.__setattr__(self, "y_metric", Metric.parse(self.y_metric))
        if self.d_x < 1 or self.d_y < 1:
            raise ValueError("d_x and d_y must be positive")

    @property
    def d_z(self):
        return self.d_x + self.d_y

    def distance(self, a, b):
        a = np.asarray(a, dtype=np.float64).ravel()
        b = np.asarray(b, dtype=np.float64).ravel()
        if a.shape != b.shape or a.size != self.d_z:
            raise ValueError(f"points must both have {self.d_z} coordinates, got {a.size} and {b.size}")
        dx = distance(self.x_metric, a[: self.d_x], b[: self.d_x])
        dy = distance(self.y_metric, a[self.d_x:], b[self.d_x:])
        return max(dx, dy)


def _part_distances(metric, points, q):
    # points (n, p), q (p,): distances from each row to q
    n, p = points.shape
    if p == 1 or metric is Metric.CHEBYSHEV:
        acc = np.zeros(n)
        for c in range(p):
            np.maximum(acc, np.abs(points[:, c] - q[c]), out=acc)
        return acc
    acc = np.zeros(n)
    for c in range(p):
        t = points[:, c] - q[c]
        acc += t * t
    return np.sqrt(acc)


def distances_to(metric, points, q):
    """Distances from every row of ``points`` to the point ``q``.

    ``metric`` is a :class:`Metric` or a :class:`JointMetric`; for the joint
    case the first ``d_x`` columns are the x part.
    """
    points = np.asarray(points, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64).ravel()
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != q.size:
        raise ValueError(f"dimension mismatch: points have {points.shape[1]} columns, query has {q.size}")
    if isinstance(metric, JointMetric):
        if q.size != metric.d_z:
            raise ValueError(f"joint metric expects {metric.d_z} columns, got {q.size}")
        dx = _part_distances(metric.x_metric, points[:, : metric.d_x], q[: metric.d_x])
        dy = _part_distances(metric.y_metric, points[:, metric.d_x:], q[metric.d_x:])
        return np.maximum(dx, dy)
    return _part_distances(Metric.parse(metric), points, q)


def distance(metric, a, b):
    """Distance between two points under ``metric``."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    if isinstance(metric, JointMetric):
        return metric.distance(a, b)
    return float(distances_to(metric, a[None, :], b)[0])


def log_unit_ball_volume(metric, d):
    """ln c_d, the log-volume of the unit ball of ``metric`` in R^d."""
    metric = Metric.parse(metric)
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    if metric is Metric.CHEBYSHEV:
        return d * math.log(2.0)
    if d == 1:
        return math.log(2.0)
    if d == 2:
        return math.log(math.pi)
    return 0.5 * d * math.log(math.pi) - log_gamma(0.5 * d + 1.0)


def unit_ball_volume(metric, d):
    """c_d: 2^d for Chebyshev, pi^(d/2) / Gamma(d/2 + 1) for Euclidean."""
    metric = Metric.parse(metric)
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if metric is Metric.CHEBYSHEV:
        return 2.0 ** int(d)
    if d == 1:
        return 2.0
    if d == 2:
        return math.pi
    return math.exp(log_unit_ball_volume(metric, d))
