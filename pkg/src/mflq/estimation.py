"""Least-squares temporal-difference estimation of value and Q matrices.

Value matrices H are regressed from on-policy trajectories; Q matrices G from
exploratory transition tuples together with an H estimate.  Raw solutions are
symmetrized and then projected onto their positive-semidefinite floors (M for
H, blockdiag(M, N) for G); orthogonal projection onto a convex set can only
shrink the error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import LqSystem, Trajectory, TransitionDataset
from .linalg import (
    pinv_solve,
    psd_project,
    smallest_retained_singular_value,
    sym_mat,
    symmetrize,
)

# Steps dropped from the head of each evaluation trajectory before regression;
# stable linear systems mix exponentially fast, so a short burn-in suffices to
# get near the stationary regime the estimator analysis assumes.
BURN_IN = 50


@dataclass
class EstimationReport:
    """An estimate, its pre-projection raw version, and conditioning info."""

    estimate: np.ndarray
    raw_estimate: np.ndarray
    sample_count: int
    condition_diagnostic: float
    rank_warning: bool = False


def features(X: np.ndarray) -> np.ndarray:
    """Rows vect(x x^T) for each row x of X (row-major, duplicated off-diagonals)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m, n = X.shape
    return (X[:, :, None] * X[:, None, :]).reshape(m, n * n)


def _trajectory_blocks(traj: Trajectory, burn_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    T = len(traj)
    start = min(burn_in, max(0, T - 1))
    X = traj.states[start:-1]
    Xp = traj.states[start + 1 :]
    c = traj.costs[start:]
    if X.shape[0] < 1:
        raise ValueError("trajectory too short for estimation")
    return features(X), features(Xp), c


def lstd_h_raw(
    Phi: np.ndarray,
    Phi_plus: np.ndarray,
    w_row: np.ndarray,
    costs: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Raw (unprojected) value-matrix solve from explicit feature blocks.

    Solves Phi^T (Phi - Phi_plus + w_row) vect(H) = Phi^T costs by minimum-norm
    pseudo-inverse and symmetrizes.  Planting Phi_plus rows equal to their
    conditional expectations makes the recovery of H exact, which is the oracle
    the estimator tests are built on.
    """
    design = Phi.T @ (Phi - Phi_plus + np.asarray(w_row, dtype=float)[None, :])
    h_raw = pinv_solve(design, Phi.T @ np.asarray(costs, dtype=float))
    return sym_mat(h_raw), smallest_retained_singular_value(design)


def estimate_h(
    traj: Trajectory,
    noise_cov: np.ndarray,
    floor: np.ndarray,
    burn_in: int = BURN_IN,
) -> EstimationReport:
    """LSTD estimate of the value matrix from a single-policy trajectory.

    Solves vect(H) from Phi^T (Phi - Phi_plus + Wrow) vect(H) = Phi^T c by a
    minimum-norm pseudo-inverse, then symmetrizes and projects onto >= floor.
    """
    if len(traj) < 1:
        raise ValueError("empty trajectory")
    Phi, Phi_plus, c = _trajectory_blocks(traj, burn_in)
    tau, nsq = Phi.shape
    w_row = symmetrize(np.asarray(noise_cov, dtype=float)).reshape(-1)
    H_raw, cond = lstd_h_raw(Phi, Phi_plus, w_row, c)
    H = psd_project(H_raw, floor)
    return EstimationReport(
        estimate=H,
        raw_estimate=H_raw,
        sample_count=tau,
        condition_diagnostic=cond,
        rank_warning=tau < nsq,
    )


def estimate_h_unknown_w(
    traj: Trajectory,
    floor: np.ndarray,
    burn_in: int = BURN_IN,
) -> EstimationReport:
    """Value-matrix estimate that replaces trace(HW) by the empirical mean cost."""
    if len(traj) < 2:
        raise ValueError("need at least two transitions")
    Phi, Phi_plus, c = _trajectory_blocks(traj, burn_in)
    tau, nsq = Phi.shape
    design = Phi.T @ (Phi - Phi_plus)
    rhs = Phi.T @ (c - c.mean())
    h_raw = pinv_solve(design, rhs)
    H_raw = sym_mat(h_raw)
    H = psd_project(H_raw, floor)
    return EstimationReport(
        estimate=H,
        raw_estimate=H_raw,
        sample_count=tau,
        condition_diagnostic=smallest_retained_singular_value(design),
        rank_warning=tau < nsq,
    )


def estimate_g(
    data: TransitionDataset,
    H_hat: np.ndarray,
    sys: LqSystem,
) -> EstimationReport:
    """Q-matrix estimate from exploratory tuples and a value-matrix estimate.

    Regression targets are c(x, a) + (phi(x_next) - vect(W)) . vect(H_hat); the
    design is Psi with rows vect(z z^T), z = (x; a).  Minimum-norm least squares
    stands in for the plain Gram inverse so rank-deficient small datasets still
    produce the projected estimate.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    if not bool(np.all(data.exploratory)):
        raise ValueError("estimate_g requires exploratory tuples only")
    Z = np.hstack([data.x, data.a])
    Psi = features(Z)
    tau, zsq = Psi.shape
    H_hat = symmetrize(np.asarray(H_hat, dtype=float))
    h_hat = H_hat.reshape(-1)
    w_row = sys.W.reshape(-1)
    costs = np.einsum("ti,ij,tj->t", data.x, sys.M, data.x) + np.einsum(
        "ti,ij,tj->t", data.a, sys.N, data.a
    )
    targets = costs + (features(data.x_next) - w_row[None, :]) @ h_hat
    g_raw = pinv_solve(Psi, targets)
    G_raw = sym_mat(g_raw)
    G = psd_project(G_raw, sys.cost_blockdiag())
    return EstimationReport(
        estimate=G,
        raw_estimate=G_raw,
        sample_count=tau,
        condition_diagnostic=smallest_retained_singular_value(Psi),
        rank_warning=tau < zsq,
    )
