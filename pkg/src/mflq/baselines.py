"""Comparison algorithms sharing the adaptive-control run format.

All baselines emit the same RunRecord as the main algorithm, so regret
decomposition and the experiment harness apply unchanged.  Runs given the same
integer seed and a shared schedule consume identical noise streams in phase 1
and diverge only through their policy updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algorithm import (
    PhaseSchedule,
    RunRecord,
    _RunTape,
    _true_value,
    run_mflq,
    split_streams,
)
from .env import (
    DIVERGENCE_THRESHOLD,
    LqSystem,
    Trajectory,
    collect_data,
    greedy_policy,
    rollout,
)
from .linalg import (
    RiccatiDivergenceError,
    optimal_controller,
    psd_project,
    spectral_radius,
    sym_mat,
)


def initial_policy(sys: LqSystem, scale: float = 200.0) -> np.ndarray:
    """Stable but suboptimal starting gain: optimal controller for cost scale*M."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    K, _ = optimal_controller(sys.A, sys.B, scale * sys.M, sys.N)
    return K


def run_lspi(
    sys: LqSystem,
    K1: np.ndarray,
    schedule: PhaseSchedule,
    Sigma_a: np.ndarray,
    rng: np.random.Generator | int | None = None,
    oracle_estimates: bool = False,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> RunRecord:
    """Least-squares policy iteration: greedy on the most recent Q estimate.

    Identical to the main algorithm except that no averaging is performed, so
    a single-phase schedule makes the two coincide exactly.
    """
    return run_mflq(
        sys,
        K1,
        schedule,
        Sigma_a,
        rng=rng,
        oracle_estimates=oracle_estimates,
        divergence_threshold=divergence_threshold,
        algorithm_label="lspi",
        _policy_update="latest",
    )


def run_model_based(
    sys: LqSystem,
    K1: np.ndarray,
    schedule: PhaseSchedule,
    Sigma_a: np.ndarray,
    rng: np.random.Generator | int | None = None,
    noiseless: bool = False,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> RunRecord:
    """Certainty-equivalent control with ordinary-least-squares identification.

    Follows the same phase/exploration pattern as the model-free runs; at the
    end of each phase it regresses x_next on (x, a) over all transitions so far
    (on-policy and exploratory alike) and adopts the optimal controller of the
    estimated dynamics.  If the certainty-equivalent Riccati solve fails or is
    unstable against its own estimate, the previous gain is retained and the
    event flagged in ``extras["ce_failures"]``.
    """
    K1 = np.atleast_2d(np.asarray(K1, dtype=float))
    if not sys.is_stable(K1):
        raise ValueError("K1 must be stable for the true system")
    noise_rng, action_rng, _ = split_streams(rng)
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None

    tape = _RunTape()
    policies: list[np.ndarray] = []
    true_H: list[np.ndarray | None] = []
    true_lam: list[float] = []
    stable_flags: list[bool] = []
    ab_estimates: list[tuple[np.ndarray, np.ndarray]] = []
    ce_failures: list[int] = []
    diverged_phase: int | None = None

    Z_chunks: list[np.ndarray] = []
    Xn_chunks: list[np.ndarray] = []

    def absorb_transitions(states: np.ndarray, actions: np.ndarray) -> None:
        Z_chunks.append(np.hstack([states[:-1], actions]))
        Xn_chunks.append(states[1:])

    x = np.zeros(sys.n)
    K = K1
    upfront_data = None

    _, _, lam1, _ = _true_value(sys, K1)
    if schedule.upfront_collection:
        upfront_data, traj = collect_data(
            sys,
            K1,
            budget=schedule.tuples_per_phase * schedule.T_s,
            T_s=schedule.T_s,
            Sigma_a=Sigma_a,
            noise_rng=noise_rng,
            action_rng=action_rng,
            x0=x,
            noiseless=noiseless,
            divergence_threshold=divergence_threshold,
        )
        tape.absorb(traj, lam1)
        absorb_transitions(traj.states, traj.actions)
        x = traj.states[-1]
        if traj.diverged:
            diverged_phase = 0
    pre_phase_steps = tape.t

    if diverged_phase is None:
        for i in range(1, schedule.S + 1):
            phase_start = tape.t
            _, H_i, lam_i, is_stable = _true_value(sys, K)
            policies.append(K)
            true_H.append(H_i)
            true_lam.append(lam_i)
            stable_flags.append(is_stable)

            traj = rollout(
                sys,
                K,
                schedule.T_v,
                x0=x,
                rng=noise_rng,
                noiseless=noiseless,
                divergence_threshold=divergence_threshold,
            )
            tape.absorb(traj, lam_i)
            absorb_transitions(traj.states, traj.actions)
            x = traj.states[-1]
            if traj.diverged:
                diverged_phase = i
                tape.bounds.append((phase_start, tape.t))
                break

            if not schedule.upfront_collection:
                _, ctraj = collect_data(
                    sys,
                    K,
                    budget=schedule.tuples_per_phase * schedule.T_s,
                    T_s=schedule.T_s,
                    Sigma_a=Sigma_a,
                    noise_rng=noise_rng,
                    action_rng=action_rng,
                    x0=x,
                    noiseless=noiseless,
                    divergence_threshold=divergence_threshold,
                )
                tape.absorb(ctraj, lam_i)
                absorb_transitions(ctraj.states, ctraj.actions)
                x = ctraj.states[-1]
                if ctraj.diverged:
                    diverged_phase = i
                    tape.bounds.append((phase_start, tape.t))
                    break
            tape.bounds.append((phase_start, tape.t))

            Z = np.vstack(Z_chunks)
            Xn = np.vstack(Xn_chunks)
            Theta, _, _, _ = np.linalg.lstsq(Z, Xn, rcond=None)
            A_hat = Theta[: sys.n].T
            B_hat = Theta[sys.n :].T
            ab_estimates.append((A_hat, B_hat))
            try:
                K_new, _ = optimal_controller(A_hat, B_hat, sys.M, sys.N)
                if spectral_radius(A_hat - B_hat @ K_new) >= 1.0:
                    raise RiccatiDivergenceError("unstable against estimate")
                K = K_new
            except (ValueError, RiccatiDivergenceError, np.linalg.LinAlgError):
                ce_failures.append(i)

    return RunRecord(
        algorithm="model_based",
        seed=seed,
        schedule=schedule,
        per_step_costs=tape.costs(),
        per_step_lambda=tape.lambdas(),
        pre_phase_steps=pre_phase_steps,
        phase_bounds=tape.bounds,
        phase_policies=policies,
        phase_h_estimates=[None] * len(policies),
        phase_g_estimates=[None] * len(policies),
        phase_true_H=true_H,
        phase_true_lambda=true_lam,
        stability_flags=stable_flags,
        final_policy=K,
        diverged=diverged_phase is not None,
        diverged_phase=diverged_phase,
        max_state_norm=tape.max_x,
        max_action_norm=tape.max_a,
        extras={"ab_estimates": ab_estimates, "ce_failures": ce_failures},
    )


@dataclass
class RlsviPosterior:
    """Gaussian belief over vect(G): regression mean and shape matrix."""

    mean: np.ndarray
    covariance: np.ndarray
    sample_scale: float = 0.2


def run_rlsvi(
    sys: LqSystem,
    K1: np.ndarray,
    T: int,
    rng: np.random.Generator | int | None = None,
    sample_scale: float = 0.2,
    ridge: float = 1.0,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> RunRecord:
    """Exploration by value-parameter randomization instead of random actions.

    Maintains recursive least squares over vect(G) for the temporal-difference
    regression psi(x, a) . g ~ c + (phi(x_next) - vect(W)) . h, where h is the
    value matrix implied by the currently sampled parameters and policy.  Every
    floor(sqrt(T)) steps a parameter sample G ~ N(mean, sample_scale * cov) is
    drawn, symmetrized, projected onto >= blockdiag(M, N), and its greedy gain
    adopted.  ``cov`` is the least-squares estimator covariance, that is
    (ridge I + Psi^T Psi)^{-1} scaled by the running mean squared TD residual,
    so parameter draws concentrate as the fit improves.  The regression design
    follows the same identity as the batch Q estimator; regularization and the
    residual-variance scaling are this package's instantiation.
    """
    K1 = np.atleast_2d(np.asarray(K1, dtype=float))
    if not sys.is_stable(K1):
        raise ValueError("K1 must be stable for the true system")
    if T < 4:
        raise ValueError("T must be >= 4")
    noise_rng, _, sample_rng = split_streams(rng)
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None

    n, d = sys.n, sys.d
    p = (n + d) ** 2
    period = max(1, int(math.isqrt(T)))
    floor_mat = sys.cost_blockdiag()

    P = np.eye(p) / ridge
    mu = np.zeros(p)
    rss = 0.0
    obs = 0
    w_row = sys.W.reshape(-1)

    def implied_h(G: np.ndarray, K: np.ndarray) -> np.ndarray:
        IK = np.vstack([np.eye(n), -K])
        return (IK.T @ G @ IK).reshape(-1)

    K = K1
    G_cur = floor_mat.copy()
    h_cur = implied_h(G_cur, K)

    tape = _RunTape()
    policies: list[np.ndarray] = []
    g_samples: list[np.ndarray | None] = []
    h_implied: list[np.ndarray | None] = []
    true_H: list[np.ndarray | None] = []
    true_lam: list[float] = []
    stable_flags: list[bool] = []
    diverged_phase: int | None = None

    x = np.zeros(n)
    t = 0
    segment = 0
    while t < T and diverged_phase is None:
        seg_len = min(period, T - t)
        segment += 1
        _, H_i, lam_i, is_stable = _true_value(sys, K)
        policies.append(K)
        g_samples.append(G_cur.copy())
        h_implied.append(sym_mat(h_cur))
        true_H.append(H_i)
        true_lam.append(lam_i)
        stable_flags.append(is_stable)
        phase_start = tape.t

        states = np.empty((seg_len + 1, n))
        actions = np.empty((seg_len, d))
        costs = np.empty(seg_len)
        states[0] = x
        used = seg_len
        for j in range(seg_len):
            a = -K @ x
            x_next = sys.A @ x + sys.B @ a + sys.noise(noise_rng)
            c = sys.cost(x, a)
            actions[j] = a
            costs[j] = c
            states[j + 1] = x_next

            if not np.all(np.isfinite(x_next)) or np.linalg.norm(x_next) > divergence_threshold:
                x = x_next
                used = j + 1
                diverged_phase = segment
                break

            z = np.concatenate([x, a])
            # quartic features overflow double precision once the state blows
            # up; transitions that far out carry no regression signal
            if np.linalg.norm(z) <= 1e4:
                psi = np.outer(z, z).reshape(-1)
                y = c + (np.outer(x_next, x_next).reshape(-1) - w_row) @ h_cur
                resid = y - psi @ mu
                rss += resid * resid
                obs += 1
                Ppsi = P @ psi
                P -= np.outer(Ppsi, Ppsi) / (1.0 + psi @ Ppsi)
                mu = mu + (P @ psi) * resid
            x = x_next
        t += used
        tape.absorb(
            Trajectory(
                states=states[: used + 1],
                actions=actions[:used],
                costs=costs[:used],
                exploratory=np.zeros(used, dtype=bool),
            ),
            lam_i,
        )
        tape.bounds.append((phase_start, tape.t))
        if diverged_phase is not None:
            break

        P = 0.5 * (P + P.T)
        sigma_sq = rss / max(1, obs)
        if sample_scale > 0.0:
            w, V = np.linalg.eigh(P)
            w = np.clip(w, 0.0, None)
            noise = (V * np.sqrt(w)) @ sample_rng.standard_normal(p)
            g_draw = mu + math.sqrt(sample_scale * sigma_sq) * noise
        else:
            g_draw = mu
        G_cur = psd_project(sym_mat(g_draw), floor_mat)
        K = greedy_policy(G_cur, n)
        h_cur = implied_h(G_cur, K)

    return RunRecord(
        algorithm="rlsvi",
        seed=seed,
        schedule=None,
        per_step_costs=tape.costs(),
        per_step_lambda=tape.lambdas(),
        pre_phase_steps=0,
        phase_bounds=tape.bounds,
        phase_policies=policies,
        phase_h_estimates=h_implied,
        phase_g_estimates=g_samples,
        phase_true_H=true_H,
        phase_true_lambda=true_lam,
        stability_flags=stable_flags,
        final_policy=K,
        diverged=diverged_phase is not None,
        diverged_phase=diverged_phase,
        max_state_norm=tape.max_x,
        max_action_norm=tape.max_a,
        extras={
            "posterior": RlsviPosterior(
                mean=mu,
                covariance=(rss / max(1, obs)) * P,
                sample_scale=sample_scale,
            )
        },
    )
