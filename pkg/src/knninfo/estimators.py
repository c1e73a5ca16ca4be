"""Kozachenko-Leonenko entropy (plain and truncated) and KSG mutual information.

All values are in nats.  Per-sample terms are reduced with ``math.fsum``,
which rounds the exact sum once, so estimates do not depend on sample order.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .knn import NeighborIndex
from .metrics import JointMetric, Metric, log_unit_ball_volume
from .special import digamma


@dataclass(frozen=True, eq=False)
class SampleSet:
    """An (n, d) batch of finite sample points, n >= 2."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError(f"samples must be an (n, d) array, got shape {np.shape(self.data)}")
        if arr.shape[0] < 2:
            raise ValueError(f"need at least 2 samples, got {arr.shape[0]}")
        bad = ~np.isfinite(arr)
        if bad.any():
            rows = np.unique(np.nonzero(bad)[0])[:10]
            raise ValueError(f"samples contain NaN or infinite values (rows {rows.tolist()})")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def of(cls, x):
        return x if isinstance(x, cls) else cls(x)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class Truncation:
    """Truncation radius a_N = A * N**(-beta); beta defaults to 1/(d+2)."""

    A: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        if not self.A > 0 or not math.isfinite(self.A):
            raise ValueError(f"truncation constant A must be positive, got {self.A!r}")

    def beta_for(self, d):
        beta = 1.0 / (d + 2) if self.beta is None else float(self.beta)
        if not 0 < beta < 1.0 / d:
            raise ValueError(f"beta must lie in (0, 1/d) = (0, {1.0 / d:.6g}), got {beta!r}")
        return beta

    def radius(self, n, d):
        return self.A * n ** -self.beta_for(d)


@dataclass(frozen=True)
class EstimatorConfig:
    k: int = 3
    truncation: Truncation | None = None
    metric: Metric = Metric.EUCLIDEAN

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "metric", Metric.parse(self.metric))


@dataclass
class NeighborStats:
    """Per-sample intermediates of the estimators.

    ``n_x``/``n_y`` count the other samples j != i strictly inside epsilon(i)
    on each marginal, so they lie in [k - 1, N - 1].
    """

    epsilon: np.ndarray
    rho: np.ndarray | None = None
    a_n: float | None = None
    n_x: np.ndarray | None = None
    n_y: np.ndarray | None = None
    ties: int = 0


@dataclass
class EstimateResult:
    value: float
    config: dict
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def _check_no_duplicates(eps):
    zero = np.flatnonzero(eps == 0.0)
    if zero.size:
        shown = zero[:20].tolist()
        more = "" if zero.size <= 20 else f" (+{zero.size - 20} more)"
        raise ValueError(
            f"{zero.size} samples have a duplicate at distance 0 so their k-th neighbour "
            f"distance is 0: indices {shown}{more}; jitter or deduplicate the data"
        )


def _kth_distances(index, k):
    # query one extra neighbour when possible to report ties at the k-th distance
    extra = k + 1 < index.n
    dist, _ = index.knn_all(k + 1 if extra else k)
    eps = np.ascontiguousarray(dist[:, k - 1])
    ties = int(np.count_nonzero(dist[:, k - 1] == dist[:, k])) if extra else 0
    return eps, ties


def neighbor_stats(x, y=None, cfg=None, *, metrics=None):
    """epsilon, rho and (for a pair x, y) the marginal counts n_x, n_y.

    Entropy mode (``y is None``): distances under ``cfg.metric``; rho is set
    when ``cfg.truncation`` is given.  KSG mode: epsilon is taken under the
    joint max metric and n_x, n_y count the other marginal points strictly
    closer than epsilon.
    """
    cfg = cfg or EstimatorConfig()
    x = SampleSet.of(x)
    k = cfg.k
    if y is None:
        if k >= x.n:
            raise ValueError(f"k={k} must be smaller than the number of samples N={x.n}")
        eps, ties = _kth_distances(NeighborIndex(x.data, cfg.metric), k)
        _check_no_duplicates(eps)
        stats = NeighborStats(epsilon=eps, ties=ties)
        if cfg.truncation is not None:
            stats.a_n = cfg.truncation.radius(x.n, x.d)
            stats.rho = np.minimum(eps, stats.a_n)
        return stats

    y = SampleSet.of(y)
    if x.n != y.n:
        raise ValueError(f"x and y must have the same number of samples, got {x.n} and {y.n}")
    if k >= x.n:
        raise ValueError(f"k={k} must be smaller than the number of samples N={x.n}")
    if metrics is None:
        metrics = JointMetric(Metric.CHEBYSHEV, Metric.CHEBYSHEV, x.d, y.d)
    elif (metrics.d_x, metrics.d_y) != (x.d, y.d):
        metrics = JointMetric(metrics.x_metric, metrics.y_metric, x.d, y.d)
    z = np.hstack([x.data, y.data])
    eps, ties = _kth_distances(NeighborIndex(z, metrics), k)
    _check_no_duplicates(eps)
    n_x = NeighborIndex(x.data, metrics.x_metric).count_all(eps)
    n_y = NeighborIndex(y.data, metrics.y_metric).count_all(eps)
    return NeighborStats(epsilon=eps, n_x=n_x, n_y=n_y, ties=ties)


def _mean(values):
    return math.fsum(values) / len(values)


def _kl_value(n, d, k, metric, radii):
    return (-digamma(k) + digamma(n) + log_unit_ball_volume(metric, d)
            + d * _mean(np.log(radii)))


def kl_entropy(samples, cfg=None):
    """Kozachenko-Leonenko estimate -psi(k) + psi(N) + ln c_d + (d/N) sum ln eps(i)."""
    cfg = cfg or EstimatorConfig()
    if cfg.truncation is not None:
        raise ValueError("kl_entropy takes no truncation; use truncated_kl_entropy")
    x = SampleSet.of(samples)
    stats = neighbor_stats(x, cfg=cfg)
    value = _kl_value(x.n, x.d, cfg.k, cfg.metric, stats.epsilon)
    return EstimateResult(
        value=value,
        config={"estimator": "kl", "k": cfg.k, "metric": cfg.metric.value},
        diagnostics={"n": x.n, "d": x.d, "mean_epsilon": _mean(stats.epsilon), "ties": stats.ties},
    )


def truncated_kl_entropy(samples, cfg=None):
    """KL estimate with eps(i) replaced by rho(i) = min(eps(i), A * N**-beta)."""
    cfg = cfg or EstimatorConfig(truncation=Truncation())
    if cfg.truncation is None:
        cfg = EstimatorConfig(k=cfg.k, truncation=Truncation(), metric=cfg.metric)
    x = SampleSet.of(samples)
    beta = cfg.truncation.beta_for(x.d)
    stats = neighbor_stats(x, cfg=cfg)
    value = _kl_value(x.n, x.d, cfg.k, cfg.metric, stats.rho)
    return EstimateResult(
        value=value,
        config={"estimator": "truncated_kl", "k": cfg.k, "metric": cfg.metric.value,
                "A": cfg.truncation.A, "beta": beta, "a_n": stats.a_n},
        diagnostics={
            "n": x.n, "d": x.d,
            "truncated": int(np.count_nonzero(stats.epsilon > stats.a_n)),
            "mean_epsilon": _mean(stats.epsilon),
            "mean_rho": _mean(stats.rho),
            "ties": stats.ties,
        },
    )


def ksg_mi(x, y, k=3, metrics=None, *, count_self=True):
    """KSG estimate psi(N) + psi(k) - <psi(n_x + 1)> - <psi(n_y + 1)>.

    epsilon(i) is the k-th neighbour distance under the joint max metric and
    n_x(i), n_y(i) count samples strictly inside epsilon(i) on each marginal.
    With ``count_self=True`` (default) the counts run over all j, so sample i
    itself adds one to each; ``count_self=False`` counts only j != i.  No
    truncation is applied.
    """
    cfg = EstimatorConfig(k=k)
    x = SampleSet.of(x)
    y = SampleSet.of(y)
    stats = neighbor_stats(x, y, cfg, metrics=metrics)
    n = x.n
    shift = 2.0 if count_self else 1.0
    value = (digamma(n) + digamma(k)
             - _mean(digamma(stats.n_x + shift)) - _mean(digamma(stats.n_y + shift)))
    metrics = metrics or JointMetric(d_x=x.d, d_y=y.d)
    return EstimateResult(
        value=value,
        config={"estimator": "ksg", "k": int(k), "x_metric": metrics.x_metric.value,
                "y_metric": metrics.y_metric.value, "count_self": count_self},
        diagnostics={
            "n": n, "d_x": x.d, "d_y": y.d,
            "mean_epsilon": _mean(stats.epsilon),
            "mean_n_x": _mean(stats.n_x), "mean_n_y": _mean(stats.n_y),
            "ties": stats.ties,
        },
    )
