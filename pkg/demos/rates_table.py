"""Print predicted bias and variance decay exponents for both estimators."""

from knninfo.experiments import RateModel, theoretical_rates

print("kl entropy, smooth densities")
for d in range(1, 7):
    r = theoretical_rates(RateModel("kl", d))
    print(f"  d={d}  bias {float(r.bias_slope):.2f} ({r.bias_slope})  variance {float(r.variance_slope):.2f}")

print("ksg mutual information, d_x = 1")
for dy in range(1, 4):
    r = theoretical_rates(RateModel("ksg", 1, dy))
    print(f"  d_y={dy}  bias {float(r.bias_slope):.2f} ({r.bias_slope})")

print("kl entropy, d=1, heavy tails with finite moment of order alpha")
for alpha in (0.5, 1.0, 2.0, 8.0):
    r = theoretical_rates(RateModel("kl", 1, alpha=alpha))
    print(f"  alpha={alpha:<4}  tau < {float(r.tau):.3f}  bias < {float(r.bias_slope):.3f}")
