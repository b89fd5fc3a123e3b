"""Exact vs estimated policy evaluation on a small LQ system.

Builds a 2-state system, evaluates a fixed gain exactly (value matrix, Q
matrix, average cost), then recovers the value matrix from simulated
trajectories of increasing length to show the LSTD error shrinking like
1/sqrt(tau).
"""

import numpy as np

from mflq import LqSystem, bellman_residual, policy_value, rollout
from mflq.estimation import estimate_h

system = LqSystem(
    A=[[0.8, 0.1], [0.0, 0.7]],
    B=np.eye(2),
    M=np.eye(2),
    N=0.5 * np.eye(2),
    W=np.eye(2),
)
K = np.array([[0.2, 0.0], [0.1, 0.1]])

G, H, lam = policy_value(system, K)
print("value matrix H:")
print(np.round(H, 4))
print(f"average cost lambda = trace(H W) = {lam:.6f}")

states = np.random.default_rng(0).normal(size=(500, 2))
print(f"Bellman residual at the exact solution: {bellman_residual(system, K, H, lam, states):.2e}")

print("\nLSTD recovery from data (median of 5 seeds):")
print(f"{'tau':>8}  {'rel. error':>10}")
for tau in (1024, 4096, 16384, 65536):
    errs = []
    for seed in range(5):
        traj = rollout(system, K, tau, rng=np.random.default_rng(seed))
        H_hat = estimate_h(traj, system.W, floor=system.M).estimate
        errs.append(np.linalg.norm(H_hat - H) / np.linalg.norm(H))
    print(f"{tau:>8}  {np.median(errs):>10.4f}")
