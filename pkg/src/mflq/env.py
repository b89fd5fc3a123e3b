"""LQ system simulation, exact policy evaluation, and exploratory data collection.

A policy is its gain matrix K (shape d x n); actions are a = -K x.  Process
noise is N(0, W), sampled as a fixed Cholesky factor of W times standard
normals from a ``numpy.random.Generator`` (ziggurat algorithm), so seed sweeps
are bit-reproducible on a given platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    InstabilityError,
    check_symmetric,
    solve_lyapunov,
    spectral_radius,
    symmetrize,
)

# States past this norm flag the run as diverged instead of crashing it;
# stability-fraction experiments count these failures.
DIVERGENCE_THRESHOLD = 1e8


@dataclass(frozen=True)
class LqSystem:
    """Discrete-time system x' = A x + B a + w with cost x'Mx + a'Na, w ~ N(0, W)."""

    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    N: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        d = B.shape[1]
        M = check_symmetric(np.atleast_2d(np.asarray(self.M, dtype=float)), "M")
        N = check_symmetric(np.atleast_2d(np.asarray(self.N, dtype=float)), "N")
        W = check_symmetric(np.atleast_2d(np.asarray(self.W, dtype=float)), "W")
        if M.shape != (n, n):
            raise ValueError(f"M must be {n}x{n}, got {M.shape}")
        if N.shape != (d, d):
            raise ValueError(f"N must be {d}x{d}, got {N.shape}")
        if W.shape != (n, n):
            raise ValueError(f"W must be {n}x{n}, got {W.shape}")
        for name, X in (("M", M), ("N", N), ("W", W)):
            if np.linalg.eigvalsh(X)[0] <= 0.0:
                raise ValueError(f"{name} must be positive definite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "_W_chol", np.linalg.cholesky(W))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        return self._W_chol @ rng.standard_normal(self.n)

    def cost(self, x: np.ndarray, a: np.ndarray) -> float:
        return float(x @ self.M @ x + a @ self.N @ a)

    def cost_blockdiag(self) -> np.ndarray:
        """blockdiag(M, N), the one-step cost matrix in (x, a) coordinates."""
        n, d = self.n, self.d
        C = np.zeros((n + d, n + d))
        C[:n, :n] = self.M
        C[n:, n:] = self.N
        return C

    def closed_loop(self, K: np.ndarray) -> np.ndarray:
        return self.A - self.B @ np.atleast_2d(K)

    def is_stable(self, K: np.ndarray) -> bool:
        return spectral_radius(self.closed_loop(K)) < 1.0


@dataclass
class Trajectory:
    """A contiguous rollout: states[t+1] is the successor of (states[t], actions[t]).

    ``diverged_at`` is the step index at which the state norm crossed the
    divergence threshold, or None for a healthy rollout.  Arrays are truncated
    at that step.
    """

    states: np.ndarray       # (T+1, n)
    actions: np.ndarray      # (T, d)
    costs: np.ndarray        # (T,)
    exploratory: np.ndarray  # (T,) bool
    diverged_at: int | None = None

    def __len__(self) -> int:
        return self.costs.shape[0]

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


@dataclass
class TransitionDataset:
    """Tuples (x, a, x_next) gathered for Q-matrix estimation."""

    x: np.ndarray           # (m, n)
    a: np.ndarray           # (m, d)
    x_next: np.ndarray      # (m, n)
    exploratory: np.ndarray  # (m,) bool
    diverged_at: int | None = None

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    @staticmethod
    def concatenate(parts: list["TransitionDataset"]) -> "TransitionDataset":
        parts = [p for p in parts if len(p) > 0]
        if not parts:
            raise ValueError("no data to concatenate")
        return TransitionDataset(
            x=np.vstack([p.x for p in parts]),
            a=np.vstack([p.a for p in parts]),
            x_next=np.vstack([p.x_next for p in parts]),
            exploratory=np.concatenate([p.exploratory for p in parts]),
        )


def step(
    sys: LqSystem,
    x: np.ndarray,
    a: np.ndarray,
    rng: np.random.Generator | None,
    noiseless: bool = False,
) -> tuple[np.ndarray, float]:
    """One transition; returns (x_next, cost).  ``noiseless=True`` drops w."""
    x = np.asarray(x, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    if x.shape != (sys.n,) or a.shape != (sys.d,):
        raise ValueError(
            f"state/action shapes {x.shape}/{a.shape} do not match system ({sys.n}, {sys.d})"
        )
    x_next = sys.A @ x + sys.B @ a
    if not noiseless:
        if rng is None:
            raise ValueError("rng is required unless noiseless=True")
        x_next = x_next + sys.noise(rng)
    return x_next, sys.cost(x, a)


def rollout(
    sys: LqSystem,
    K: np.ndarray,
    T: int,
    x0: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    noiseless: bool = False,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> Trajectory:
    """Run a = -K x for T steps.  Divergence flags the trajectory, never raises."""
    if T < 1:
        raise ValueError("T must be >= 1")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n, d = sys.n, sys.d
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    Gamma = sys.closed_loop(K)
    cost_mat = sys.M + K.T @ sys.N @ K  # c(x, -Kx) = x' (M + K'NK) x

    if noiseless:
        noise = np.zeros((T, n))
    else:
        if rng is None:
            raise ValueError("rng is required unless noiseless=True")
        noise = (rng.standard_normal((T, n))) @ sys._W_chol.T

    states = np.empty((T + 1, n))
    costs = np.empty(T)
    states[0] = x
    diverged_at = None
    for t in range(T):
        costs[t] = x @ cost_mat @ x
        x = Gamma @ x + noise[t]
        states[t + 1] = x
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > divergence_threshold:
            diverged_at = t
            states = states[: t + 2]
            costs = costs[: t + 1]
            break
    T_eff = costs.shape[0]
    actions = states[:T_eff] @ (-K.T)
    return Trajectory(
        states=states,
        actions=actions,
        costs=costs,
        exploratory=np.zeros(T_eff, dtype=bool),
        diverged_at=diverged_at,
    )


def policy_value(sys: LqSystem, K: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact (G, H, lambda) of a stable linear policy.

    H solves H = Gamma^T H Gamma + M + K^T N K with Gamma = A - BK; then
    G = [A B]^T H [A B] + blockdiag(M, N) and lambda = trace(H W).
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Gamma = sys.closed_loop(K)
    rho = spectral_radius(Gamma)
    if rho >= 1.0:
        raise InstabilityError(f"policy is not stable (rho = {rho:.6g})")
    Q = symmetrize(sys.M + K.T @ sys.N @ K)
    H = solve_lyapunov(Gamma.T, Q)
    AB = np.hstack([sys.A, sys.B])
    G = symmetrize(AB.T @ H @ AB + sys.cost_blockdiag())
    lam = float(np.trace(H @ sys.W))
    return G, H, lam


def greedy_policy(G: np.ndarray, state_dim: int, tol: float = 1e-10) -> np.ndarray:
    """Gain of the action minimizing the quadratic form: K = G22^{-1} G21.

    Rejects singular or indefinite action blocks (the sign that the estimate
    was never projected onto its cost floor).
    """
    G = check_symmetric(G, "G")
    n = state_dim
    G22 = G[n:, n:]
    G21 = G[n:, :n]
    w = np.linalg.eigvalsh(G22)
    if w[0] <= tol:
        raise ValueError(
            "G22 is not positive definite; project G onto its floor before extracting "
            f"the greedy gain (min eigenvalue {w[0]:.3g})"
        )
    return np.linalg.solve(G22, G21)


def stationary_covariance(sys: LqSystem, K: np.ndarray) -> np.ndarray:
    """Steady-state covariance: unique solution of S = Gamma S Gamma^T + W."""
    Gamma = sys.closed_loop(K)
    if spectral_radius(Gamma) >= 1.0:
        raise InstabilityError("stationary covariance requires a stable policy")
    return solve_lyapunov(Gamma, sys.W)


def collect_data(
    sys: LqSystem,
    K: np.ndarray,
    budget: int,
    T_s: int,
    Sigma_a: np.ndarray,
    noise_rng: np.random.Generator,
    action_rng: np.random.Generator | None = None,
    x0: np.ndarray | None = None,
    record_all: bool = False,
    noiseless: bool = False,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> tuple[TransitionDataset, Trajectory]:
    """Run the policy with a random action every T_s-th step; collect tuples.

    Repeats floor(budget / T_s) times: follow a = -Kx for T_s - 1 steps from the
    current state, then play a ~ N(0, Sigma_a) and record (x, a, x_next).  The
    state carries over between repetitions (no reset).  With ``record_all``
    every transition is recorded and flagged exploratory, not just the randomly
    acted ones.

    Returns the dataset plus the full trajectory (for cost accounting).
    """
    if T_s < 1:
        raise ValueError("T_s must be >= 1")
    if budget < T_s:
        raise ValueError("budget smaller than one exploration period")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Sigma_a = check_symmetric(np.atleast_2d(np.asarray(Sigma_a, dtype=float)), "Sigma_a")
    if np.linalg.eigvalsh(Sigma_a)[0] <= 0.0:
        raise ValueError("Sigma_a must be positive definite")
    a_chol = np.linalg.cholesky(Sigma_a)
    if action_rng is None:
        action_rng = noise_rng

    n, d = sys.n, sys.d
    reps = budget // T_s
    T_total = reps * T_s
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)

    states = np.empty((T_total + 1, n))
    actions = np.empty((T_total, d))
    costs = np.empty(T_total)
    explore_mask = np.zeros(T_total, dtype=bool)
    states[0] = x
    diverged_at = None

    t = 0
    for _ in range(reps):
        for j in range(T_s):
            last = j == T_s - 1
            if last:
                a = a_chol @ action_rng.standard_normal(d)
            else:
                a = -K @ x
            x_next = sys.A @ x + sys.B @ a
            if not noiseless:
                x_next = x_next + sys.noise(noise_rng)
            actions[t] = a
            costs[t] = sys.cost(x, a)
            explore_mask[t] = last
            states[t + 1] = x_next
            x = x_next
            t += 1
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > divergence_threshold:
                diverged_at = t - 1
                break
        if diverged_at is not None:
            break

    T_eff = t
    states = states[: T_eff + 1]
    actions = actions[:T_eff]
    costs = costs[:T_eff]
    explore_mask = explore_mask[:T_eff]

    keep = np.ones(T_eff, dtype=bool) if record_all else explore_mask
    dataset = TransitionDataset(
        x=states[:-1][keep].copy(),
        a=actions[keep].copy(),
        x_next=states[1:][keep].copy(),
        exploratory=np.ones(int(keep.sum()), dtype=bool),
        diverged_at=diverged_at,
    )
    traj = Trajectory(
        states=states,
        actions=actions,
        costs=costs,
        exploratory=explore_mask,
        diverged_at=diverged_at,
    )
    return dataset, traj


def bellman_residual(
    sys: LqSystem,
    K: np.ndarray,
    H: np.ndarray,
    lam: float,
    test_states: np.ndarray,
) -> float:
    """Max violation of V(x) = c(x, -Kx) - lambda + E V(x') over test states.

    The expectation is analytic: E V(x') = (Gamma x)' H (Gamma x) + trace(H W).
    Zero (to rounding) exactly at the true (H, lambda) of the policy.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    H = check_symmetric(H, "H")
    Gamma = sys.closed_loop(K)
    X = np.atleast_2d(np.asarray(test_states, dtype=float))
    cost_mat = sys.M + K.T @ sys.N @ K
    v = np.einsum("ti,ij,tj->t", X, H, X)
    c = np.einsum("ti,ij,tj->t", X, cost_mat, X)
    Xn = X @ Gamma.T
    ev = np.einsum("ti,ij,tj->t", Xn, H, Xn) + float(np.trace(H @ sys.W))
    return float(np.max(np.abs(v - (c - lam + ev))))
