"""Model-free adaptive control of linear-quadratic systems.

Library layout:

- ``linalg``: dense symmetric-matrix kernels (Lyapunov/Riccati solves, PSD
  projection, vectorization, resolvent norms).
- ``env``: LQ simulator, exact policy evaluation, exploratory data collection.
- ``estimation``: LSTD estimators for value and Q matrices.
- ``algorithm``: the phase-scheduled FTL policy-iteration algorithm, regret
  decomposition, and stability diagnostics.
- ``baselines``: LSPI, value-randomizing RLSVI, certainty-equivalent control.
- ``bounds``: mixing/blocks/small-ball bounds with Monte-Carlo validation.
- ``harness``: experiment configs, seed sweeps, CSV output (CLI: ``mflq``).
"""

from .algorithm import (
    InfeasibleScheduleError,
    PhaseSchedule,
    RegretBreakdown,
    RunRecord,
    StabilityReport,
    make_schedule,
    regret_decomposition,
    run_mflq,
    split_streams,
    stability_diagnostics,
)
from .baselines import initial_policy, run_lspi, run_model_based, run_rlsvi
from .env import (
    LqSystem,
    Trajectory,
    TransitionDataset,
    bellman_residual,
    collect_data,
    greedy_policy,
    policy_value,
    rollout,
    stationary_covariance,
    step,
)
from .estimation import EstimationReport, estimate_g, estimate_h, estimate_h_unknown_w
from .linalg import (
    InstabilityError,
    RiccatiDivergenceError,
    hinf_resolvent_norm,
    optimal_controller,
    pinv_solve,
    psd_project,
    solve_lyapunov,
    spectral_radius,
    sym_mat,
    sym_vec,
)

__version__ = "0.1.0"

__all__ = [
    "EstimationReport",
    "InfeasibleScheduleError",
    "InstabilityError",
    "LqSystem",
    "PhaseSchedule",
    "RegretBreakdown",
    "RiccatiDivergenceError",
    "RunRecord",
    "StabilityReport",
    "Trajectory",
    "TransitionDataset",
    "bellman_residual",
    "collect_data",
    "estimate_g",
    "estimate_h",
    "estimate_h_unknown_w",
    "greedy_policy",
    "hinf_resolvent_norm",
    "initial_policy",
    "make_schedule",
    "optimal_controller",
    "pinv_solve",
    "policy_value",
    "psd_project",
    "regret_decomposition",
    "rollout",
    "run_lspi",
    "run_mflq",
    "run_model_based",
    "run_rlsvi",
    "solve_lyapunov",
    "spectral_radius",
    "split_streams",
    "stability_diagnostics",
    "stationary_covariance",
    "step",
    "sym_mat",
    "sym_vec",
]
