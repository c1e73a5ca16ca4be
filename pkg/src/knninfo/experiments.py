"""Adaptive-trial bias/variance measurement and log-log convergence rates.

For each sample size n the estimator is run on fresh seeded samples,
trial t using ``SeedSequence([seed, n, t])``, until the ``ci_level``
confidence interval of the bias is short relative to the bias itself.
Rates are the negated OLS slopes of log10|bias| and log10 variance
against log10 n.

Trials are drawn in batches; within a batch they may run on a thread pool,
but results are collected in trial order and reduced with ``math.fsum``,
so reports do not depend on the number of threads.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import norm

from . import distributions
from .estimators import EstimatorConfig, Truncation, kl_entropy, ksg_mi, truncated_kl_entropy
from .metrics import Metric

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

ESTIMATORS = ("kl", "truncated_kl", "ksg")


class CellError(RuntimeError):
    """An estimator failed inside a cell; carries what is needed to replay the trial."""

    def __init__(self, n, trial, seed, cause):
        self.n, self.trial, self.seed = n, trial, seed
        super().__init__(f"estimator failed at n={n}, trial={trial} "
                         f"(replay with seed={seed}, n={n}, trial={trial}): {cause}")


@dataclass(frozen=True)
class ExperimentSpec:
    distribution: object
    estimator: str
    n_grid: tuple
    k: int = 3
    seed: int = 0
    uncertainty_target: float = 0.05
    ci_level: float = 0.99
    min_trials: int = 100
    max_trials: int = 10 ** 6
    batch_size: int = 100
    bias_fit_min_n: int | None = None
    bias_fit_max_n: int | None = None
    truncation_A: float = 1.0
    truncation_beta: float | None = None
    metric: str = "l2"
    ksg_count_self: bool = True
    tau: float = 1.0
    alpha: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator: expected one of {ESTIMATORS}, got {self.estimator!r}")
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if len(grid) == 0:
            raise ValueError("n_grid: must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"n_grid: must be strictly increasing, got {list(grid)}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k: must be a positive integer, got {self.k!r}")
        if grid[0] <= self.k:
            raise ValueError(f"n_grid: every n must exceed k={self.k}, got {grid[0]}")
        if not 0 < self.uncertainty_target < 1:
            raise ValueError(f"uncertainty_target: must lie in (0, 1), got {self.uncertainty_target!r}")
        if not 0 < self.ci_level < 1:
            raise ValueError(f"ci_level: must lie in (0, 1), got {self.ci_level!r}")
        if not 2 <= self.min_trials <= self.max_trials:
            raise ValueError("min_trials/max_trials: need 2 <= min_trials <= max_trials")
        if self.batch_size < 1:
            raise ValueError("batch_size: must be >= 1")
        if self.seed < 0:
            raise ValueError("seed: must be a non-negative integer")
        joint = getattr(self.distribution, "joint", False)
        if (self.estimator == "ksg") != joint:
            raise ValueError(f"estimator: {self.estimator!r} does not apply to "
                             f"distribution family {self.distribution.family!r}")
        Metric.parse(self.metric)
        if self.estimator == "truncated_kl":
            Truncation(self.truncation_A, self.truncation_beta).beta_for(self.distribution.d)
        self.rate_model()

    def rate_model(self):
        dist = self.distribution
        if self.estimator == "ksg":
            return RateModel("ksg", dist.d_x, dist.d_y, tau=self.tau, alpha=self.alpha)
        return RateModel("kl", dist.d, 0, tau=self.tau, alpha=self.alpha)

    def estimator_config(self):
        trunc = None
        if self.estimator == "truncated_kl":
            trunc = Truncation(self.truncation_A, self.truncation_beta)
        return EstimatorConfig(k=self.k, truncation=trunc, metric=self.metric)

    def truth(self):
        if self.estimator == "ksg":
            return distributions.true_mi(self.distribution)
        return distributions.true_entropy(self.distribution)

    def to_dict(self):
        out = asdict(self)
        out["distribution"] = distributions.to_dict(self.distribution)
        out["n_grid"] = list(self.n_grid)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "distribution" not in data:
            raise ValueError("distribution: missing section")
        data["distribution"] = distributions.from_dict(data["distribution"])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        missing = {"estimator", "n_grid"} - set(data)
        if missing:
            raise ValueError(f"missing experiment fields: {sorted(missing)}")
        return cls(**data)


_CONFIG_SECTIONS = {
    "estimator": {"kind": "estimator", "k": "k", "A": "truncation_A", "beta": "truncation_beta",
                  "metric": "metric", "count_self": "ksg_count_self"},
    "grid": {"n": "n_grid", "bias_fit_min_n": "bias_fit_min_n", "bias_fit_max_n": "bias_fit_max_n"},
    "stopping": {"uncertainty_target": "uncertainty_target", "ci_level": "ci_level",
                 "min_trials": "min_trials", "max_trials": "max_trials", "batch_size": "batch_size"},
    "theory": {"tau": "tau", "alpha": "alpha"},
}


def spec_from_config(config):
    """Flatten the sectioned config layout (see README) into an ExperimentSpec."""
    config = dict(config)
    flat = {}
    for key in ("name", "seed"):
        if key in config:
            flat[key] = config.pop(key)
    if "distribution" not in config:
        raise ValueError("distribution: missing section")
    flat["distribution"] = config.pop("distribution")
    for section, keys in _CONFIG_SECTIONS.items():
        body = config.pop(section, {})
        if not isinstance(body, dict):
            raise ValueError(f"{section}: expected a section")
        for key, value in body.items():
            if key not in keys:
                raise ValueError(f"{section}.{key}: unknown field")
            flat[keys[key]] = value
    if config:
        raise ValueError(f"unknown config sections or keys: {sorted(config)}")
    return ExperimentSpec.from_dict(flat)


def load_config(path):
    with open(path, "rb") as fh:
        try:
            config = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from None
    config.setdefault("name", str(path).rsplit("/", 1)[-1].removesuffix(".toml"))
    return spec_from_config(config)


@dataclass(frozen=True)
class RateModel:
    """Inputs of the theoretical rates: estimator kind, dimensions and tail exponent.

    ``alpha`` (a finite moment order) overrides ``tau`` with the bound
    alpha / (alpha + d), d = d_x for entropy and d_x + d_y for KSG; the
    rate is then a supremum that is approached but not attained.
    """

    estimator: str
    d_x: int
    d_y: int = 0
    tau: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        kind = {"kl": "kl", "truncated_kl": "kl", "ksg": "ksg"}.get(self.estimator)
        if kind is None:
            raise ValueError(f"estimator must be 'kl' or 'ksg', got {self.estimator!r}")
        object.__setattr__(self, "estimator", kind)
        if self.d_x < 1 or (kind == "ksg" and self.d_y < 1):
            raise ValueError("dimensions must be positive (d_y required for ksg)")
        if self.alpha is not None and not _exact(self.alpha) > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not 0 < self.tau_exact <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau!r}")

    @property
    def d(self):
        return self.d_x + self.d_y

    @property
    def tau_exact(self):
        if self.alpha is not None:
            alpha = _exact(self.alpha)
            return alpha / (alpha + self.d)
        return _exact(self.tau)


def _exact(x):
    # decimal literals such as 0.6 become 3/5 rather than the binary float
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class Rates:
    bias_slope: Fraction
    variance_slope: Fraction
    tau: Fraction
    supremum: bool = False

    def as_floats(self):
        return {"bias_slope": float(self.bias_slope), "variance_slope": float(self.variance_slope),
                "tau": float(self.tau), "supremum": self.supremum}


def theoretical_rates(model):
    """Bias and variance decay exponents implied by the bounds, log factors dropped.

    entropy: bias 2 tau / (d_x + 2); KSG: bias min(2 tau / (d_z + 2), min(d_x, d_y) / d_z);
    variance 1 in both cases.
    """
    tau = model.tau_exact
    if model.estimator == "kl":
        bias = 2 * tau / (model.d_x + 2)
    else:
        d_z = model.d
        bias = min(2 * tau / (d_z + 2), Fraction(min(model.d_x, model.d_y), d_z))
    return Rates(bias_slope=bias, variance_slope=Fraction(1), tau=tau,
                 supremum=model.alpha is not None)


@dataclass
class CellResult:
    n: int
    trials: int
    bias: float
    bias_ci: float
    variance: float
    variance_ci: float
    converged: bool
    unresolved: bool = False
    mean_estimate: float = math.nan

    @property
    def relative_uncertainty(self):
        if self.bias == 0:
            return math.inf
        return 2 * self.bias_ci / abs(self.bias)


@dataclass
class FitResult:
    bias_slope: float
    variance_slope: float
    bias_range: tuple
    variance_range: tuple
    excluded: list = field(default_factory=list)


@dataclass
class ConvergenceReport:
    spec: ExperimentSpec
    rows: list
    fitted: FitResult
    theoretical: Rates
    truth: float

    @property
    def all_converged(self):
        return all(r.converged for r in self.rows)

    def summary(self):
        return {
            "name": self.spec.name,
            "spec": self.spec.to_dict(),
            "truth": self.truth,
            "rows": [asdict(r) for r in self.rows],
            "fitted": asdict(self.fitted),
            "theoretical": {**self.theoretical.as_floats(),
                            "bias_slope_exact": str(self.theoretical.bias_slope)},
            "all_converged": self.all_converged,
        }


class _RunningMoments:
    """Power sums of trial errors, shifted by the first batch mean to avoid cancellation.

    Each batch is reduced with ``math.fsum`` and added in trial order, so the
    statistics depend only on the sequence of values.
    """

    def __init__(self):
        self.t = 0
        self.shift = None
        self.sums = [0.0, 0.0, 0.0, 0.0]

    def add(self, values):
        if self.shift is None:
            self.shift = math.fsum(values) / len(values)
        dev = [v - self.shift for v in values]
        for p in range(4):
            self.sums[p] += math.fsum(x ** (p + 1) for x in dev)
        self.t += len(values)

    def stats(self):
        """(mean, unbiased variance, fourth central moment)."""
        t = self.t
        s1, s2, s3, s4 = (x / t for x in self.sums)
        mean = self.shift + s1
        m2 = max(s2 - s1 * s1, 0.0)
        var = m2 * t / (t - 1)
        m4 = s4 - 4 * s1 * s3 + 6 * s1 * s1 * s2 - 3 * s1 ** 4
        return mean, var, max(m4, 0.0)


def make_trial(spec):
    """Return f(n, trial) -> estimate for the experiment's estimator and distribution."""
    cfg = spec.estimator_config()
    dist = spec.distribution

    if spec.estimator == "ksg":
        def trial_fn(n, trial):
            x, y = dist.sample(n, spec.seed, trial)
            return ksg_mi(x, y, k=spec.k, count_self=spec.ksg_count_self).value
    elif spec.estimator == "truncated_kl":
        def trial_fn(n, trial):
            return truncated_kl_entropy(dist.sample(n, spec.seed, trial), cfg).value
    else:
        def trial_fn(n, trial):
            return kl_entropy(dist.sample(n, spec.seed, trial), cfg).value
    return trial_fn


def run_cell(spec, n, *, trial_fn=None, truth=None, executor=None):
    """Run trials at sample size n until the bias is resolved or max_trials is hit.

    ``trial_fn(n, t)`` may replace the experiment's estimator (e.g. for testing the
    stopping rule); ``truth`` defaults to the distribution's true value.
    """
    if n not in spec.n_grid:
        raise ValueError(f"n={n} is not in the experiment grid")
    trial_fn = trial_fn or make_trial(spec)
    truth = spec.truth() if truth is None else truth
    z = float(norm.ppf(0.5 + spec.ci_level / 2))

    def one(t):
        try:
            return float(trial_fn(n, t))
        except Exception as exc:
            raise CellError(n, t, spec.seed, exc) from exc

    acc = _RunningMoments()
    while True:
        done = acc.t
        step = spec.min_trials - done if done < spec.min_trials else spec.batch_size
        step = min(step, spec.max_trials - done)
        trials = range(done + 1, done + step + 1)
        batch = list(executor.map(one, trials)) if executor else [one(t) for t in trials]
        acc.add([v - truth for v in batch])
        t = acc.t
        bias, var, m4 = acc.stats()
        half = z * math.sqrt(var / t)
        unresolved = bias == 0 and var == 0
        converged = not unresolved and bias != 0 and 2 * half / abs(bias) < spec.uncertainty_target
        if converged or unresolved or t >= spec.max_trials:
            break
    var_half = z * math.sqrt(max(m4 - var * var, 0.0) / t)
    return CellResult(n=n, trials=t, bias=bias, bias_ci=half, variance=var,
                      variance_ci=var_half, converged=converged, unresolved=unresolved,
                      mean_estimate=bias + truth)


def _ols_slope(x, y):
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    return sxy / sxx


def fit_rates(rows, bias_fit_min_n=None, bias_fit_max_n=None):
    """Negated log10-log10 OLS slopes of |bias| (within the fit window) and variance (all rows)."""
    lo = bias_fit_min_n or 0
    hi = bias_fit_max_n or math.inf
    excluded = []
    bias_rows = []
    for r in rows:
        if not lo <= r.n <= hi:
            continue
        if r.bias == 0 or not math.isfinite(r.bias):
            excluded.append(r.n)
            warnings.warn(f"n={r.n}: bias is {r.bias!r}, row excluded from the bias fit", stacklevel=2)
            continue
        bias_rows.append(r)
    var_rows = [r for r in rows if r.variance > 0 and math.isfinite(r.variance)]
    if len(bias_rows) < 3:
        raise ValueError(f"bias fit needs at least 3 usable rows, got {len(bias_rows)}")
    if len(var_rows) < 3:
        raise ValueError(f"variance fit needs at least 3 usable rows, got {len(var_rows)}")
    bias_slope = -_ols_slope([math.log10(r.n) for r in bias_rows],
                             [math.log10(abs(r.bias)) for r in bias_rows])
    var_slope = -_ols_slope([math.log10(r.n) for r in var_rows],
                            [math.log10(r.variance) for r in var_rows])
    return FitResult(bias_slope=bias_slope, variance_slope=var_slope,
                     bias_range=(bias_rows[0].n, bias_rows[-1].n),
                     variance_range=(var_rows[0].n, var_rows[-1].n), excluded=excluded)


def run_experiment(spec, threads=1, progress=None):
    """Run every cell of the grid, fit rates and attach the theoretical ones.

    ``progress`` is an optional callable receiving each finished CellResult.
    """
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    trial_fn = make_trial(spec)
    truth = spec.truth()
    rows = []
    with ThreadPoolExecutor(max_workers=threads) if threads > 1 else _NoPool() as pool:
        for n in spec.n_grid:
            row = run_cell(spec, n, trial_fn=trial_fn, truth=truth, executor=pool)
            rows.append(row)
            if progress:
                progress(row)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fitted = fit_rates(rows, spec.bias_fit_min_n, spec.bias_fit_max_n)
    for n in fitted.excluded:
        warnings.warn(f"n={n}: zero bias, excluded from the bias fit", stacklevel=2)
    return ConvergenceReport(spec=spec, rows=rows, fitted=fitted,
                             theoretical=theoretical_rates(spec.rate_model()), truth=truth)


class _NoPool:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def log_grid(lo_exp, hi_exp, per_decade=2):
    """Sample sizes round(10**e) for e from lo_exp to hi_exp in 1/per_decade steps."""
    steps = int(round((hi_exp - lo_exp) * per_decade))
    return [int(round(10 ** (lo_exp + i / per_decade))) for i in range(steps + 1)]


def log_plot_data(rows):
    """(log10 n, log10 |bias|, log10 variance) per row; -inf marks a zero entry."""
    with np.errstate(divide="ignore"):
        return [(math.log10(r.n), float(np.log10(abs(r.bias))), float(np.log10(r.variance)))
                for r in rows]
