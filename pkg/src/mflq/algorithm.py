"""Phase-scheduled model-free LQ control with follow-the-leader averaging.

One run alternates, per phase, an evaluation rollout of the current gain with
exploratory data collection, estimates the policy's value and Q matrices, and
switches to the gain that is greedy for the average of all Q estimates so far.
Divergent runs are flagged and terminated early with the record intact so that
stability-fraction statistics can count them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import (
    DIVERGENCE_THRESHOLD,
    LqSystem,
    Trajectory,
    TransitionDataset,
    collect_data,
    greedy_policy,
    policy_value,
    rollout,
)
from .estimation import estimate_g, estimate_h
from .linalg import psd_project, spectral_radius

VARIANTS = ("v1", "v2", "v3")

DEFAULT_TS_CONST = 10


class InfeasibleScheduleError(ValueError):
    """Horizon/exponent combination yields an empty schedule."""


def _floor_pow(T: int, p: float) -> int:
    # Guards against float pow landing epsilon below an exact integer
    # (e.g. 4096**0.25 must floor to 8, not 7).
    return int(math.floor(T**p + 1e-9))


@dataclass(frozen=True)
class PhaseSchedule:
    """Derived quantities driving a run: phase count, lengths, exploration."""

    variant: str
    T: int
    xi: float
    S: int
    T_v: int
    T_s: int
    tuples_per_phase: int  # per phase for v2/v3; the single up-front dataset for v1

    @property
    def upfront_collection(self) -> bool:
        return self.variant == "v1"

    @property
    def total_steps(self) -> int:
        collect = self.tuples_per_phase * self.T_s
        if self.variant == "v1":
            return collect + self.S * self.T_v
        return self.S * (self.T_v + collect)


def make_schedule(
    T: int,
    xi: float = 0.0,
    variant: str = "v2",
    T_s_const: int = DEFAULT_TS_CONST,
) -> PhaseSchedule:
    """Phase schedule for a horizon of T steps.

    v1 runs S = floor(T^(1/3 - xi)) - 1 phases of T_v = floor(T^(2/3 + xi))
    steps with a constant exploration period and a single up-front dataset of
    floor(T_v / T_s) tuples (one tuple per period, so collection itself fits in
    T_v steps).  v2/v3 run S = floor(T^(1/4)) phases, re-collecting
    floor(0.5 T^(1/2 + xi)) tuples per phase with period floor(T^(1/4 - xi)).
    Floor rounding keeps the total step count at most T.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if T < 64:
        raise InfeasibleScheduleError("T must be at least 64")
    if not 0.0 <= xi < 0.25:
        raise ValueError(f"xi must lie in [0, 1/4), got {xi}")

    if variant == "v1":
        if T_s_const < 1:
            raise ValueError("T_s_const must be >= 1")
        S = max(1, _floor_pow(T, 1.0 / 3.0 - xi) - 1)
        T_v = _floor_pow(T, 2.0 / 3.0 + xi)
        T_s = T_s_const
        # one tuple per exploration period; clip the up-front dataset so the
        # collection run plus S phases never exceed the horizon
        tuples = min(T_v // T_s, max(0, T - S * T_v) // T_s)
    else:
        S = _floor_pow(T, 0.25)
        T_v = int(math.floor(0.5 * T**0.75 + 1e-9))
        T_s = max(1, _floor_pow(T, 0.25 - xi))
        tuples = int(math.floor(0.5 * T ** (0.5 + xi) + 1e-9))

    if S < 1 or T_v < 1 or tuples < 1:
        raise InfeasibleScheduleError(
            f"infeasible schedule for T={T}, xi={xi}, variant={variant}"
        )
    sched = PhaseSchedule(variant=variant, T=T, xi=xi, S=S, T_v=T_v, T_s=T_s, tuples_per_phase=tuples)
    if sched.total_steps > T:
        raise InfeasibleScheduleError(
            f"schedule would use {sched.total_steps} > T = {T} steps"
        )
    return sched


@dataclass
class RunRecord:
    """Everything a run produced, phase by phase.

    ``per_step_lambda`` holds the true average cost of the policy in force at
    each step (NaN while an unstable policy runs); it is evaluation metadata
    computed from the known simulator, never visible to the learner.
    """

    algorithm: str
    seed: int | None
    schedule: PhaseSchedule | None
    per_step_costs: np.ndarray
    per_step_lambda: np.ndarray
    pre_phase_steps: int
    phase_bounds: list[tuple[int, int]]
    phase_policies: list[np.ndarray]
    phase_h_estimates: list[np.ndarray | None]
    phase_g_estimates: list[np.ndarray | None]
    phase_true_H: list[np.ndarray | None]
    phase_true_lambda: list[float]
    stability_flags: list[bool]
    final_policy: np.ndarray
    diverged: bool = False
    diverged_phase: int | None = None
    max_state_norm: float = 0.0
    max_action_norm: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return int(self.per_step_costs.shape[0])

    @property
    def stable(self) -> bool:
        return (not self.diverged) and all(self.stability_flags)

    @property
    def phases_run(self) -> int:
        return len(self.phase_policies)

    def phase_avg_costs(self) -> np.ndarray:
        return np.array(
            [self.per_step_costs[a:b].mean() if b > a else np.nan for a, b in self.phase_bounds]
        )


def split_streams(
    rng: np.random.Generator | int | None,
) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Derive (process-noise, exploration, algorithm) generators.

    Runs seeded with the same integer consume identical noise streams while
    their step patterns agree, so algorithms sharing a schedule see the same
    disturbances in phase 1 and diverge only through their actions.
    """
    if rng is None:
        rng = np.random.default_rng()
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    children = rng.spawn(3)
    return children[0], children[1], children[2]


class _RunTape:
    """Accumulates per-step costs and metadata while a run advances."""

    def __init__(self):
        self.cost_chunks: list[np.ndarray] = []
        self.lambda_chunks: list[np.ndarray] = []
        self.bounds: list[tuple[int, int]] = []
        self.t = 0
        self.max_x = 0.0
        self.max_a = 0.0

    def absorb(self, traj: Trajectory, lam: float) -> None:
        m = len(traj)
        self.cost_chunks.append(traj.costs)
        self.lambda_chunks.append(np.full(m, lam))
        self.t += m
        if m:
            self.max_x = max(self.max_x, float(np.max(np.linalg.norm(traj.states, axis=1))))
            self.max_a = max(self.max_a, float(np.max(np.linalg.norm(traj.actions, axis=1))))

    def costs(self) -> np.ndarray:
        return np.concatenate(self.cost_chunks) if self.cost_chunks else np.zeros(0)

    def lambdas(self) -> np.ndarray:
        return np.concatenate(self.lambda_chunks) if self.lambda_chunks else np.zeros(0)


def _true_value(sys: LqSystem, K: np.ndarray):
    """(G, H, lambda, stable) of K on the true system; NaN lambda if unstable."""
    if spectral_radius(sys.closed_loop(K)) < 1.0:
        G, H, lam = policy_value(sys, K)
        return G, H, lam, True
    return None, None, float("nan"), False


def run_mflq(
    sys: LqSystem,
    K1: np.ndarray,
    schedule: PhaseSchedule,
    Sigma_a: np.ndarray,
    rng: np.random.Generator | int | None = None,
    oracle_estimates: bool = False,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
    algorithm_label: str | None = None,
    _policy_update: str = "ftl",
) -> RunRecord:
    """One adaptive-control run of the scheduled FTL policy-iteration algorithm.

    Per phase: execute the current gain for T_v steps, estimate its value
    matrix from that rollout, obtain exploratory tuples (up-front dataset for
    v1, fresh collection for v2/v3 with v3 keeping every transition), estimate
    the Q matrix, and switch to the greedy gain of the running average of all
    Q estimates (``_policy_update="latest"`` gives plain policy iteration
    instead, used by the LSPI baseline).  ``oracle_estimates`` substitutes the
    exact per-phase Q matrices, isolating the policy-update dynamics from
    estimation noise.
    """
    K1 = np.atleast_2d(np.asarray(K1, dtype=float))
    if not sys.is_stable(K1):
        raise ValueError("K1 must be stable for the true system")
    if _policy_update not in ("ftl", "latest"):
        raise ValueError(f"unknown policy update {_policy_update!r}")
    noise_rng, action_rng, _ = split_streams(rng)
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    label = algorithm_label or ("mflq_" + schedule.variant)

    tape = _RunTape()
    policies: list[np.ndarray] = []
    h_estimates: list[np.ndarray | None] = []
    g_estimates: list[np.ndarray | None] = []
    true_H: list[np.ndarray | None] = []
    true_lam: list[float] = []
    stable_flags: list[bool] = []
    diverged_phase: int | None = None

    x = np.zeros(sys.n)
    K = K1
    G_mean: np.ndarray | None = None
    upfront_data: TransitionDataset | None = None
    record_all = schedule.variant == "v3"

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
            divergence_threshold=divergence_threshold,
        )
        tape.absorb(traj, lam1)
        x = traj.states[-1]
        if traj.diverged:
            diverged_phase = 0
    pre_phase_steps = tape.t

    if diverged_phase is None:
        for i in range(1, schedule.S + 1):
            phase_start = tape.t
            G_i, H_i, lam_i, is_stable = _true_value(sys, K)
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
                divergence_threshold=divergence_threshold,
            )
            tape.absorb(traj, lam_i)
            x = traj.states[-1]
            if traj.diverged:
                diverged_phase = i
                h_estimates.append(None)
                g_estimates.append(None)
                tape.bounds.append((phase_start, tape.t))
                break

            if oracle_estimates:
                if not is_stable:
                    diverged_phase = i
                    h_estimates.append(None)
                    g_estimates.append(None)
                    tape.bounds.append((phase_start, tape.t))
                    break
                H_hat, G_hat = H_i, G_i
            else:
                H_hat = estimate_h(traj, sys.W, floor=sys.M).estimate

            if schedule.upfront_collection:
                data = upfront_data
            else:
                data, ctraj = collect_data(
                    sys,
                    K,
                    budget=schedule.tuples_per_phase * schedule.T_s,
                    T_s=schedule.T_s,
                    Sigma_a=Sigma_a,
                    noise_rng=noise_rng,
                    action_rng=action_rng,
                    x0=x,
                    record_all=record_all,
                    divergence_threshold=divergence_threshold,
                )
                tape.absorb(ctraj, lam_i)
                x = ctraj.states[-1]
                if ctraj.diverged:
                    diverged_phase = i
                    h_estimates.append(H_hat)
                    g_estimates.append(None)
                    tape.bounds.append((phase_start, tape.t))
                    break

            if not oracle_estimates:
                G_hat = estimate_g(data, H_hat, sys).estimate
            h_estimates.append(H_hat)
            g_estimates.append(G_hat)
            tape.bounds.append((phase_start, tape.t))

            if _policy_update == "ftl":
                if G_mean is None:
                    G_mean = G_hat.copy()
                else:
                    G_mean += (G_hat - G_mean) / i
                G_for_greedy = G_mean
            else:
                G_for_greedy = G_hat
            K = greedy_policy(psd_project(G_for_greedy, sys.cost_blockdiag()), sys.n)

    extras = {}
    if G_mean is not None:
        extras["G_running_mean"] = G_mean
    return RunRecord(
        algorithm=label,
        seed=seed,
        schedule=schedule,
        per_step_costs=tape.costs(),
        per_step_lambda=tape.lambdas(),
        pre_phase_steps=pre_phase_steps,
        phase_bounds=tape.bounds,
        phase_policies=policies,
        phase_h_estimates=h_estimates,
        phase_g_estimates=g_estimates,
        phase_true_H=true_H,
        phase_true_lambda=true_lam,
        stability_flags=stable_flags,
        final_policy=K,
        diverged=diverged_phase is not None,
        diverged_phase=diverged_phase,
        max_state_norm=tape.max_x,
        max_action_norm=tape.max_a,
        extras=extras,
    )


@dataclass
class RegretBreakdown:
    """alpha: learner transient; beta: average-cost gap; gamma: comparator transient."""

    alpha: float
    beta: float
    gamma: float
    total: float
    reference_total_cost: float


def regret_decomposition(
    record: RunRecord,
    reference_K: np.ndarray,
    sys: LqSystem,
    rng: np.random.Generator | int | None = None,
) -> RegretBreakdown:
    """Split the run's regret against a fixed stable gain into three sums.

    alpha sums c_t - lambda(policy at t), beta sums lambda(policy at t) -
    lambda(reference), and gamma sums lambda(reference) - costs of a fresh
    independent reference rollout of the same length.  The three terms
    telescope: alpha + beta + gamma = total cost - reference rollout cost.
    """
    reference_K = np.atleast_2d(np.asarray(reference_K, dtype=float))
    _, _, lam_ref = policy_value(sys, reference_K)
    c = record.per_step_costs
    lam_t = record.per_step_lambda
    T_run = record.steps
    if T_run == 0:
        return RegretBreakdown(0.0, 0.0, 0.0, 0.0, 0.0)
    if isinstance(rng, (int, np.integer)) or rng is None:
        rng = np.random.default_rng(rng)
    ref = rollout(sys, reference_K, T_run, rng=rng)
    alpha = float(np.sum(c - lam_t))
    beta = float(np.sum(lam_t - lam_ref))
    gamma = float(T_run * lam_ref - np.sum(ref.costs))
    return RegretBreakdown(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        total=alpha + beta + gamma,
        reference_total_cost=float(np.sum(ref.costs)),
    )


@dataclass
class PhaseDiagnostics:
    phase: int
    stable: bool
    eps_empirical: float  # ||G_hat_i - G_i||_F, NaN when either side is missing
    eps_ok: bool
    h_norm: float
    h_norm_ok: bool


@dataclass
class StabilityReport:
    C1: float
    C_K: float
    C_H: float
    eps_threshold: float
    C_X: float
    C_A: float
    max_state_norm: float
    max_action_norm: float
    state_bound_ok: bool
    phases: list[PhaseDiagnostics]

    @property
    def all_ok(self) -> bool:
        return all(p.stable and p.eps_ok and p.h_norm_ok for p in self.phases)


def stability_diagnostics(
    record: RunRecord,
    sys: LqSystem,
    delta2: float = 0.05,
) -> StabilityReport:
    """Check a run against the boundedness conditions that back the analysis.

    Per phase, compares the empirical Q-estimation error to the tolerance
    1 / (12 C1 (sqrt(n) + C_K sqrt(d))^2 S) with C1 = ||H_1|| and
    C_K = 2 (3 C1 ||B|| ||A|| + 1), and verifies the value matrices stay below
    3 C1 and closed loops stay stable.  Also reports the high-probability
    state/action norm radii against the empirical maxima.
    """
    from .bounds import state_bounds

    if not record.phase_true_H or record.phase_true_H[0] is None:
        raise ValueError("record must contain a stable first phase")
    S = record.schedule.S if record.schedule is not None else max(1, record.phases_run)
    n, d = sys.n, sys.d
    C1 = float(np.linalg.norm(record.phase_true_H[0], 2))
    C_K = 2.0 * (3.0 * C1 * np.linalg.norm(sys.B, 2) * np.linalg.norm(sys.A, 2) + 1.0)
    C_H = 3.0 * C1
    eps_threshold = 1.0 / (12.0 * C1 * (math.sqrt(n) + C_K * math.sqrt(d)) ** 2 * S)
    T = record.schedule.T if record.schedule is not None else max(1, record.steps)
    C_X, C_A = state_bounds(C_H, n, T, delta2)

    phases = []
    for i in range(record.phases_run):
        H_i = record.phase_true_H[i]
        G_hat = record.phase_g_estimates[i] if i < len(record.phase_g_estimates) else None
        stable_i = record.stability_flags[i]
        if H_i is not None and G_hat is not None:
            G_i, _, _ = policy_value(sys, record.phase_policies[i])
            eps = float(np.linalg.norm(G_hat - G_i, "fro"))
        else:
            eps = float("nan")
        h_norm = float(np.linalg.norm(H_i, 2)) if H_i is not None else float("inf")
        phases.append(
            PhaseDiagnostics(
                phase=i + 1,
                stable=stable_i,
                eps_empirical=eps,
                eps_ok=bool(eps < eps_threshold) if np.isfinite(eps) else False,
                h_norm=h_norm,
                h_norm_ok=h_norm <= C_H + 1e-12,
            )
        )
    return StabilityReport(
        C1=C1,
        C_K=C_K,
        C_H=C_H,
        eps_threshold=eps_threshold,
        C_X=C_X,
        C_A=C_A,
        max_state_norm=record.max_state_norm,
        max_action_norm=record.max_action_norm,
        state_bound_ok=record.max_state_norm <= C_X,
        phases=phases,
    )
