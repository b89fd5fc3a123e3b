"""Experiment configuration, seed sweeps, and CSV persistence.

Configs are TOML: scalar keys plus matrices as row-lists.  Results are two
CSV files per experiment (per-phase rows and a per-algorithm summary) with a
fixed column order, UTF-8, '.' decimals, and floats printed via ``%.12g`` so
identical configs and seeds reproduce byte-identical output.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .algorithm import RunRecord, make_schedule, run_mflq
from .baselines import initial_policy, run_lspi, run_model_based, run_rlsvi
from .env import LqSystem, policy_value, rollout
from .linalg import optimal_controller

ALGORITHMS = ("mflq_v1", "mflq_v2", "mflq_v3", "lspi", "rlsvi", "model_based", "oracle")

BUILTIN_SYSTEMS = ("dean2017", "lewis-power")

RESULT_COLUMNS = [
    "seed",
    "algorithm",
    "phase_index",
    "steps_elapsed",
    "phase_avg_cost",
    "true_lambda",
    "cumulative_cost",
    "cumulative_regret",
    "stable",
]

SUMMARY_COLUMNS = [
    "algorithm",
    "T",
    "seeds",
    "stability_fraction",
    "median_final_phase_cost",
    "median_final_lambda",
    "lambda_opt",
    "median_cumulative_regret",
]

SWEEP_COLUMNS = [
    "T",
    "seeds",
    "stable_runs",
    "median_cumulative_regret",
    "loglog_slope",
]


class ConfigError(ValueError):
    """Configuration file is malformed or violates an invariant."""


@dataclass(frozen=True)
class ExperimentConfig:
    system: LqSystem
    algorithm: str
    T: int
    seeds: tuple[int, ...]
    Sigma_a: np.ndarray
    xi: float = 0.0
    initial_policy_scale: float = 200.0
    T_s_const: int = 10
    system_name: str = "inline"
    output_path: str | None = None
    rlsvi_sample_scale: float = 0.2


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return format(v, ".12g")


def _matrix_from_rows(rows, name: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"field {name!r} must be a list of rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ConfigError(f"field {name!r} row {i} has length {len(r)}, expected {width}")
        for v in r:
            if not isinstance(v, (int, float)):
                raise ConfigError(f"field {name!r} has a non-numeric entry")
    return np.array(rows, dtype=float)


def _builtin_path(name: str) -> Path:
    fname = name.replace("-", "_") + ".toml"
    return Path(__file__).parent / "systems" / fname


def load_builtin(name: str) -> tuple[LqSystem, float]:
    """(system, default exploration variance) for a bundled benchmark."""
    if name not in BUILTIN_SYSTEMS:
        raise ConfigError(f"unknown builtin system {name!r}; available: {BUILTIN_SYSTEMS}")
    with open(_builtin_path(name), "rb") as fh:
        data = tomllib.load(fh)
    system = LqSystem(
        A=_matrix_from_rows(data["A"], "A"),
        B=_matrix_from_rows(data["B"], "B"),
        M=_matrix_from_rows(data["M"], "M"),
        N=_matrix_from_rows(data["N"], "N"),
        W=_matrix_from_rows(data["W"], "W"),
    )
    return system, float(data.get("default_sigma_a", 1.0))


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration.

    ``system`` is either a builtin name ("dean2017", "lewis-power") or a
    [system] table with A, B, M, N, W as row-lists.  ``seeds`` is a list, or
    seed_start/seed_count.  Omitted Sigma_a falls back to the builtin default
    (identity for an inline system); a scalar means that multiple of I.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc

    default_sigma = 1.0
    system_spec = data.get("system")
    if isinstance(system_spec, str):
        system, default_sigma = load_builtin(system_spec)
        system_name = system_spec
    elif isinstance(system_spec, dict):
        missing = [k for k in ("A", "B", "M", "N", "W") if k not in system_spec]
        if missing:
            raise ConfigError(f"inline system is missing fields {missing}")
        try:
            system = LqSystem(**{k: _matrix_from_rows(system_spec[k], f"system.{k}") for k in ("A", "B", "M", "N", "W")})
        except ValueError as exc:
            raise ConfigError(f"invalid inline system: {exc}") from exc
        system_name = "inline"
    else:
        raise ConfigError("field 'system' must be a builtin name or a table of matrices")

    algorithm = data.get("algorithm")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"field 'algorithm' must be one of {ALGORITHMS}, got {algorithm!r}")

    T = data.get("T")
    if not isinstance(T, int) or T < 64:
        raise ConfigError("field 'T' must be an integer >= 64")

    if "seeds" in data:
        seeds = data["seeds"]
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("field 'seeds' must be a nonempty list of integers")
        seeds = tuple(seeds)
    elif "seed_start" in data or "seed_count" in data:
        start = data.get("seed_start", 0)
        count = data.get("seed_count")
        if not isinstance(start, int) or not isinstance(count, int) or count < 1:
            raise ConfigError("seed_start/seed_count must be integers with count >= 1")
        seeds = tuple(range(start, start + count))
    else:
        raise ConfigError("config must give 'seeds' or seed_start/seed_count")

    sigma_raw = data.get("Sigma_a", default_sigma)
    if isinstance(sigma_raw, (int, float)):
        if sigma_raw <= 0:
            raise ConfigError("scalar Sigma_a must be positive")
        Sigma_a = float(sigma_raw) * np.eye(system.d)
    else:
        Sigma_a = _matrix_from_rows(sigma_raw, "Sigma_a")
        if Sigma_a.shape != (system.d, system.d):
            raise ConfigError(f"Sigma_a must be {system.d}x{system.d}, got {Sigma_a.shape}")

    xi = float(data.get("xi", 0.0))
    if not 0.0 <= xi < 0.25:
        raise ConfigError("xi must lie in [0, 1/4)")
    scale = float(data.get("initial_policy_scale", 200.0))
    if scale <= 0:
        raise ConfigError("initial_policy_scale must be positive")
    T_s_const = data.get("T_s_const", 10)
    if not isinstance(T_s_const, int) or T_s_const < 1:
        raise ConfigError("T_s_const must be a positive integer")

    return ExperimentConfig(
        system=system,
        algorithm=algorithm,
        T=T,
        seeds=seeds,
        Sigma_a=Sigma_a,
        xi=xi,
        initial_policy_scale=scale,
        T_s_const=T_s_const,
        system_name=system_name,
        output_path=data.get("output_path"),
        rlsvi_sample_scale=float(data.get("rlsvi_sample_scale", 0.2)),
    )


def _run_oracle(sys: LqSystem, T: int, seed: int) -> RunRecord:
    """Fixed optimal controller for T steps, packaged as a one-phase record."""
    K_star, _ = optimal_controller(sys.A, sys.B, sys.M, sys.N)
    _, H, lam = policy_value(sys, K_star)
    rng = np.random.default_rng(seed)
    traj = rollout(sys, K_star, T, rng=rng)
    return RunRecord(
        algorithm="oracle",
        seed=seed,
        schedule=None,
        per_step_costs=traj.costs,
        per_step_lambda=np.full(len(traj), lam),
        pre_phase_steps=0,
        phase_bounds=[(0, len(traj))],
        phase_policies=[K_star],
        phase_h_estimates=[None],
        phase_g_estimates=[None],
        phase_true_H=[H],
        phase_true_lambda=[lam],
        stability_flags=[True],
        final_policy=K_star,
        diverged=traj.diverged,
        diverged_phase=1 if traj.diverged else None,
        max_state_norm=float(np.max(np.linalg.norm(traj.states, axis=1))),
        max_action_norm=float(np.max(np.linalg.norm(traj.actions, axis=1))),
    )


def run_single(config: ExperimentConfig, seed: int) -> RunRecord:
    """Execute the configured algorithm for one seed."""
    sys = config.system
    K1 = initial_policy(sys, config.initial_policy_scale)
    alg = config.algorithm
    if alg == "oracle":
        return _run_oracle(sys, config.T, seed)
    if alg == "rlsvi":
        return run_rlsvi(sys, K1, config.T, rng=seed, sample_scale=config.rlsvi_sample_scale)
    if alg == "model_based":
        schedule = make_schedule(config.T, config.xi, "v2", config.T_s_const)
        return run_model_based(sys, K1, schedule, config.Sigma_a, rng=seed)
    if alg == "lspi":
        schedule = make_schedule(config.T, config.xi, "v2", config.T_s_const)
        return run_lspi(sys, K1, schedule, config.Sigma_a, rng=seed)
    variant = alg.split("_")[1]
    schedule = make_schedule(config.T, config.xi, variant, config.T_s_const)
    return run_mflq(sys, K1, schedule, config.Sigma_a, rng=seed)


def _worker(args) -> tuple[int, RunRecord]:
    config, seed = args
    return seed, run_single(config, seed)


def _record_rows(record: RunRecord, lam_opt: float) -> list[dict]:
    rows = []
    cum = np.cumsum(record.per_step_costs)
    for i, (a, b) in enumerate(record.phase_bounds):
        if b <= a:
            continue
        cum_cost = float(cum[b - 1])
        rows.append(
            {
                "seed": record.seed,
                "algorithm": record.algorithm,
                "phase_index": i + 1,
                "steps_elapsed": b,
                "phase_avg_cost": float(record.per_step_costs[a:b].mean()),
                "true_lambda": record.phase_true_lambda[i] if i < len(record.phase_true_lambda) else float("nan"),
                "cumulative_cost": cum_cost,
                "cumulative_regret": cum_cost - b * lam_opt,
                "stable": record.stable,
            }
        )
    return rows


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _median(values: list[float]) -> float:
    return float(np.median(values)) if values else float("nan")


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    jobs: int = 1,
    seed_offset: int = 0,
) -> dict:
    """Run all seeds (optionally in parallel) and write results/summary CSVs.

    Divergent runs stay in the results file flagged unstable; they enter the
    stability fraction but are excluded from the cost and regret medians,
    mirroring the keep-sampling-until-stable evaluation protocol.
    Returns {"results": path, "summary": path, "records": [...], "rows": [...]}.
    """
    out = Path(out_dir if out_dir is not None else (config.output_path or "results"))
    seeds = [s + seed_offset for s in config.seeds]
    tasks = [(config, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_worker, tasks))
    else:
        results = dict(map(_worker, tasks))
    records = [results[s] for s in sorted(results)]

    _, _, lam_opt = _opt_reference(config.system)
    rows: list[dict] = []
    for rec in records:
        rows.extend(_record_rows(rec, lam_opt))
    results_path = out / "results.csv"
    _write_csv(results_path, RESULT_COLUMNS, rows)

    stable = [r for r in records if r.stable]
    final_costs = [float(r.per_step_costs[r.phase_bounds[-1][0] : r.phase_bounds[-1][1]].mean()) for r in stable if r.phase_bounds]
    final_lams = [r.phase_true_lambda[-1] for r in stable if r.phase_true_lambda]
    regrets = [float(np.sum(r.per_step_costs) - r.steps * lam_opt) for r in stable]
    summary_rows = [
        {
            "algorithm": config.algorithm,
            "T": config.T,
            "seeds": len(records),
            "stability_fraction": sum(r.stable for r in records) / len(records),
            "median_final_phase_cost": _median(final_costs),
            "median_final_lambda": _median([v for v in final_lams if not math.isnan(v)]),
            "lambda_opt": lam_opt,
            "median_cumulative_regret": _median(regrets),
        }
    ]
    summary_path = out / "summary.csv"
    _write_csv(summary_path, SUMMARY_COLUMNS, summary_rows)
    return {"results": results_path, "summary": summary_path, "records": records, "rows": rows}


def _opt_reference(sys: LqSystem) -> tuple[np.ndarray, np.ndarray, float]:
    K_star, _ = optimal_controller(sys.A, sys.B, sys.M, sys.N)
    _, H, lam = policy_value(sys, K_star)
    return K_star, H, lam


def fit_loglog_slope(T_values: list[float], medians: list[float]) -> float | None:
    """Least-squares slope of log(median regret) against log(T); None if undefined."""
    pts = [(t, m) for t, m in zip(T_values, medians) if m is not None and m > 0 and not math.isnan(m)]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def sweep(
    config: ExperimentConfig,
    T_grid: list[int],
    out_dir: str | Path | None = None,
    jobs: int = 1,
    seed_offset: int = 0,
) -> dict:
    """Run the experiment across a horizon grid; emit medians and log-log slope."""
    if sorted(T_grid) != list(T_grid):
        raise ValueError("T grid must be ascending")
    out = Path(out_dir if out_dir is not None else (config.output_path or "results"))
    _, _, lam_opt = _opt_reference(config.system)
    rows = []
    medians = []
    for T in T_grid:
        cfgT = replace(config, T=T)
        res = run_experiment(cfgT, out_dir=out / f"T{T}", jobs=jobs, seed_offset=seed_offset)
        records = res["records"]
        stable = [r for r in records if r.stable]
        regs = [float(np.sum(r.per_step_costs) - r.steps * lam_opt) for r in stable]
        med = _median(regs) if regs else float("nan")
        medians.append(None if math.isnan(med) else med)
        rows.append(
            {
                "T": T,
                "seeds": len(records),
                "stable_runs": len(stable),
                "median_cumulative_regret": med,
            }
        )
    slope = fit_loglog_slope([float(t) for t in T_grid], medians)
    for row in rows:
        row["loglog_slope"] = slope
    sweep_path = out / "sweep.csv"
    _write_csv(sweep_path, SWEEP_COLUMNS, rows)
    return {"sweep": sweep_path, "rows": rows, "slope": slope}
