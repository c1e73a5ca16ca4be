"""Synthetic distributions with known entropy / mutual information.

Every sampler is a pure function of ``(seed, trial, n)``: the generator is
seeded from ``numpy.random.SeedSequence([seed, n, trial])``, so any trial can
be regenerated on its own and trials can be drawn in any order or in
parallel.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .estimators import SampleSet
from .special import digamma, log_gamma


def trial_rng(seed, n, trial):
    if min(seed, n, trial) < 0:
        raise ValueError("seed, n and trial must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(trial)]))


def _log_det_equicorr(d, rho):
    # eigenvalues: 1 - rho (multiplicity d - 1) and 1 + (d - 1) rho
    return (d - 1) * math.log1p(-rho) + math.log1p((d - 1) * rho)


def _check_n(n):
    if int(n) != n or n < 2:
        raise ValueError(f"sample size must be an integer >= 2, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class GaussianStd:
    d: int = 1
    family = "gaussian_std"
    joint = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    def sample(self, n, seed, trial=0):
        return SampleSet(trial_rng(seed, _check_n(n), trial).standard_normal((n, self.d)))

    def true_entropy(self):
        return 0.5 * self.d * math.log(2 * math.pi * math.e)


@dataclass(frozen=True)
class Uniform01:
    d: int = 1
    family = "uniform01"
    joint = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    def sample(self, n, seed, trial=0):
        return SampleSet(trial_rng(seed, _check_n(n), trial).random((n, self.d)))

    def true_entropy(self):
        return 0.0

    def ball_probability(self, centers, radii):
        """Mass of the Chebyshev ball B(c, r) (any norm when d = 1)."""
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if centers.shape[0] == 1 and self.d == 1 and centers.shape[1] != 1:
            centers = centers.T
        r = np.asarray(radii, dtype=np.float64)[:, None]
        side = np.minimum(centers + r, 1.0) - np.maximum(centers - r, 0.0)
        return np.prod(np.clip(side, 0.0, None), axis=1)


@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0
    family = "exponential"
    joint = False
    d = 1

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def sample(self, n, seed, trial=0):
        rng = trial_rng(seed, _check_n(n), trial)
        return SampleSet(rng.exponential(1.0 / self.rate, (n, 1)))

    def true_entropy(self):
        return 1.0 - math.log(self.rate)


@dataclass(frozen=True)
class Cauchy:
    """Standard Cauchy (location 0, scale 1); only d = 1 is supported."""

    d: int = 1
    family = "cauchy"
    joint = False

    def __post_init__(self):
        if self.d != 1:
            raise ValueError("Cauchy is only available in one dimension")

    def sample(self, n, seed, trial=0):
        return SampleSet(trial_rng(seed, _check_n(n), trial).standard_cauchy((n, 1)))

    def true_entropy(self):
        return math.log(4 * math.pi)


@dataclass(frozen=True)
class JointGaussianEquicorr:
    """(X, Y) ~ N(0, K) with K_ij = rho + (1 - rho) delta_ij, X the first d_x coordinates."""

    d_x: int = 1
    d_y: int = 1
    rho: float = 0.6
    family = "joint_gaussian_equicorr"
    joint = True

    def __post_init__(self):
        if self.d_x < 1 or self.d_y < 1:
            raise ValueError("d_x and d_y must be >= 1")
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho!r}")
        d_z = self.d_x + self.d_y
        if not 1 + (d_z - 1) * self.rho > 0:
            raise ValueError(f"rho={self.rho} does not give a positive definite {d_z}x{d_z} matrix")

    @property
    def d_z(self):
        return self.d_x + self.d_y

    def covariance(self):
        return np.full((self.d_z, self.d_z), self.rho) + (1 - self.rho) * np.eye(self.d_z)

    def sample(self, n, seed, trial=0):
        n = _check_n(n)
        w = trial_rng(seed, n, trial).standard_normal((n, self.d_z))
        chol = np.linalg.cholesky(self.covariance())
        # explicit column sums keep the result independent of BLAS threading
        z = np.zeros_like(w)
        for i in range(self.d_z):
            for j in range(i + 1):
                z[:, i] += chol[i, j] * w[:, j]
        return SampleSet(z[:, : self.d_x]), SampleSet(z[:, self.d_x:])

    def true_entropy(self):
        return 0.5 * self.d_z * math.log(2 * math.pi * math.e) + 0.5 * _log_det_equicorr(self.d_z, self.rho)

    def true_mi(self):
        return 0.5 * (_log_det_equicorr(self.d_x, self.rho) + _log_det_equicorr(self.d_y, self.rho)
                      - _log_det_equicorr(self.d_z, self.rho))


@dataclass(frozen=True)
class PathologicalMixtureLite:
    """Bumps of width 1/j^(4/3) and mass 90/(pi^4 j^4), component j moved by min(2^(j^4), shift_cap).

    The unshifted layout places component j at
    a_j = sum_{i<j} 2/lambda_i + 1/lambda_j, so supports are disjoint before
    and after the shifts.  Mass beyond ``n_components`` goes to component 1.
    Each bump is 30 (1/4 - u^2)^2 on [-1/2, 1/2] (a centred Beta(3, 3)).
    """

    n_components: int = 8
    shift_cap: float = 1e6
    family = "pathological_mixture_lite"
    joint = False
    d = 1

    def __post_init__(self):
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if not self.shift_cap > 0:
            raise ValueError("shift_cap must be positive")

    @property
    def lambdas(self):
        return np.arange(1, self.n_components + 1, dtype=np.float64) ** (4.0 / 3.0)

    @property
    def weights(self):
        j = np.arange(1, self.n_components + 1, dtype=np.float64)
        w = 90.0 / (math.pi ** 4 * j ** 4)
        w[0] += 1.0 - math.fsum(w)
        return w

    @property
    def centers(self):
        lam = self.lambdas
        a = np.cumsum(2.0 / lam) - 1.0 / lam
        return a + self.shifts

    @property
    def shifts(self):
        log2_cap = math.log2(self.shift_cap)
        return np.array([self.shift_cap if j ** 4 >= log2_cap else 2.0 ** (j ** 4)
                         for j in range(1, self.n_components + 1)])

    def sample(self, n, seed, trial=0):
        n = _check_n(n)
        rng = trial_rng(seed, n, trial)
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        u = rng.beta(3.0, 3.0, size=n) - 0.5
        return SampleSet((self.centers[comp] + u / self.lambdas[comp])[:, None])

    @staticmethod
    def bump(u):
        u = np.asarray(u, dtype=np.float64)
        return np.where(np.abs(u) <= 0.5, 30.0 * (0.25 - u * u) ** 2, 0.0)

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for w, lam, c in zip(self.weights, self.lambdas, self.centers):
            out += w * lam * self.bump(lam * (x - c))
        return out

    def total_mass(self):
        parts = []
        for lam, c in zip(self.lambdas, self.centers):
            half = 0.5 / lam
            val, _ = integrate.quad(self.density, c - half, c + half, epsabs=1e-13, epsrel=1e-13)
            parts.append(val)
        return math.fsum(parts)

    def true_entropy(self):
        # -int f ln f per component in local coordinates u = lambda (x - c)
        parts = []
        for w, lam in zip(self.weights, self.lambdas):
            def integrand(u, w=w, lam=lam):
                g = 30.0 * (0.25 - u * u) ** 2
                return -w * g * math.log(w * lam * g) if g > 0 else 0.0
            val, _ = integrate.quad(integrand, -0.5, 0.5, epsabs=1e-12, epsrel=1e-12, limit=200)
            parts.append(val)
        return math.fsum(parts)


_FAMILIES = {cls.family: cls for cls in (GaussianStd, Uniform01, Exponential, Cauchy,
                                          JointGaussianEquicorr, PathologicalMixtureLite)}


def from_dict(data):
    """Build a distribution from ``{"family": ..., **params}``."""
    data = dict(data)
    try:
        cls = _FAMILIES[data.pop("family")]
    except KeyError as exc:
        raise ValueError(f"unknown or missing distribution family {exc}; "
                         f"choose from {sorted(_FAMILIES)}") from None
    try:
        return cls(**data)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {cls.family}: {exc}") from None


def to_dict(spec):
    return {"family": spec.family, **asdict(spec)}


def sample(spec, n, seed, trial=0):
    """n i.i.d. draws; a (x, y) pair of SampleSets for joint families."""
    return spec.sample(n, seed, trial)


def true_entropy(spec):
    return spec.true_entropy()


def true_mi(spec):
    if not getattr(spec, "joint", False):
        raise ValueError(f"{spec.family} is not a joint distribution; mutual information undefined")
    return spec.true_mi()


def beta_entropy(a, b):
    """Differential entropy of Beta(a, b), used as a closed-form cross-check."""
    log_beta = log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    return (log_beta - (a - 1) * digamma(a) - (b - 1) * digamma(b)
            + (a + b - 2) * digamma(a + b))
