"""A small convergence experiment: truncated KL on the uniform cube, d=1.

Runs in under a minute.  The small trial cap leaves the largest cells short
of the stopping target, and the cube boundary makes the bias decay faster
than the smooth-density prediction.  The bundled configs
(``knninfo experiment --list``) are the full-size versions.
"""

from knninfo import distributions as dist
from knninfo.experiments import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    distribution=dist.Uniform01(1),
    estimator="truncated_kl",
    n_grid=(100, 316, 1000, 3162),
    k=3,
    seed=7,
    truncation_A=3.0,
    max_trials=5000,
    name="mini",
)


def show(row):
    print(f"n={row.n:<6d} trials={row.trials:<6d} bias={row.bias:+.5f} +- {row.bias_ci:.5f}  "
          f"variance={row.variance:.3g}{'' if row.converged else '  (cap reached)'}")


report = run_experiment(spec, progress=show)
fit, theory = report.fitted, report.theoretical
print(f"bias slope     {fit.bias_slope:.2f}  (predicted {float(theory.bias_slope):.2f})")
print(f"variance slope {fit.variance_slope:.2f}  (predicted {float(theory.variance_slope):.2f})")
