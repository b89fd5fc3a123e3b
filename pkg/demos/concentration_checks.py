"""Mixing and moment bounds, checked against simulation.

Prints the geometric mixing envelope of a scalar AR(1) process, the
independent-blocks excursion bound with its empirical violation rate, and the
Gaussian fourth-moment identity against a Monte-Carlo estimate.
"""

import numpy as np

from mflq.bounds import (
    MixingModel,
    beta_mixing_bound,
    gaussian_fourth_moment,
    partial_sum_bound,
    verify_block_bound,
)

model = MixingModel(Gamma=np.array([[0.5]]), alpha=0.75)
print("mixing envelope for x' = 0.5 x + N(0,1), alpha = 0.75:")
for k in (0, 1, 2, 5, 10):
    print(f"  beta_{k} <= {beta_mixing_bound(model, k):.5f}")

b, s = partial_sum_bound(10_000, np.log(1 / 0.75), beta_mixing_bound(model, 0), 0.05)
print(f"\nblock length b = {b}, excursion bound s = {s:.1f} (n = 10000, delta = 0.05)")
res = verify_block_bound(np.array([[0.5]]), n=10_000, delta=0.05, trials=500, rng=0)
print(f"empirical violation rate over 500 trials: {res['violation_rate']:.4f} "
      f"(budget 4 delta = {res['budget']:.2f})")

rng = np.random.default_rng(1)
F = rng.normal(size=(3, 3))
F = 0.5 * (F + F.T)
F2 = rng.normal(size=(3, 3))
F2 = 0.5 * (F2 + F2.T)
g = rng.standard_normal((500_000, 3))
mc = float(np.mean(np.einsum("ti,ij,tj->t", g, F, g) * np.einsum("ti,ij,tj->t", g, F2, g)))
closed = gaussian_fourth_moment(F, F2)
print(f"\nfourth-moment identity: closed form {closed:.5f}, Monte Carlo {mc:.5f}")
