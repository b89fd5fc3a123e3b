"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  Heavy statistics share
module-scoped fixtures; artifacts consumed by the plotting frontend are
written under tests/_artifacts/.
"""

import math
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from mflq import LqSystem
from mflq.algorithm import make_schedule, run_mflq
from mflq.baselines import initial_policy, run_lspi, run_model_based
from mflq.bounds import (
    SMALL_BALL_FLOOR,
    MixingModel,
    beta_mixing_bound,
    gaussian_fourth_moment,
    small_ball_probability,
    small_ball_samples,
    small_ball_second_moment,
    state_bounds,
    verify_block_bound,
)
from mflq.env import bellman_residual, collect_data, greedy_policy, policy_value, rollout
from mflq.estimation import estimate_g, estimate_h
from mflq.harness import (
    SUMMARY_COLUMNS,
    _write_csv,
    load_builtin,
    load_config,
    run_experiment,
    sweep,
)
from mflq.linalg import optimal_controller, solve_lyapunov

from conftest import random_spd, random_stable_matrix

ARTIFACTS = Path(__file__).parent / "_artifacts"
ARTIFACTS.mkdir(exist_ok=True)


def verdict(num: int, description: str, ok: bool, detail: str) -> bool:
    print(f"[criterion {num:>2}] {description}: {detail} -> {'PASS' if ok else 'FAIL'}")
    return ok


@pytest.fixture(scope="module")
def dean():
    system, sigma = load_builtin("dean2017")
    K1 = initial_policy(system, 200.0)
    K_star, _ = optimal_controller(system.A, system.B, system.M, system.N)
    _, _, lam_star = policy_value(system, K_star)
    return system, sigma * np.eye(system.d), K1, K_star, lam_star


@pytest.fixture(scope="module")
def scalar():
    return LqSystem(A=[[0.9]], B=[[1.0]], M=[[1.0]], N=[[0.1]], W=[[1.0]])


@pytest.fixture(scope="module")
def two_dim():
    return LqSystem(A=[[0.8, 0.1], [0.0, 0.7]], B=np.eye(2), M=np.eye(2),
                    N=0.5 * np.eye(2), W=np.eye(2))


@pytest.fixture(scope="module")
def stability_records(dean):
    """50-seed runs of the four compared algorithms at the mid-range horizon."""
    system, Sigma_a, K1, _, _ = dean
    T = 16384
    out = {}
    sched_v2 = make_schedule(T, 0.0, "v2")
    out["mflq_v1"] = [run_mflq(system, K1, make_schedule(T, 0.0, "v1"), Sigma_a, rng=s)
                      for s in range(50)]
    out["mflq_v3"] = [run_mflq(system, K1, make_schedule(T, 0.0, "v3"), Sigma_a, rng=s)
                      for s in range(50)]
    out["lspi"] = [run_lspi(system, K1, sched_v2, Sigma_a, rng=s) for s in range(50)]
    out["model_based"] = [run_model_based(system, K1, sched_v2, Sigma_a, rng=s)
                          for s in range(50)]
    return T, out


def test_criterion_1_lyapunov_riccati_oracles():
    rng = np.random.default_rng(101)
    worst_res, worst_series = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        Gamma = random_stable_matrix(rng, n, rho_max=0.92)
        Q = random_spd(rng, n)
        X = solve_lyapunov(Gamma, Q)
        res = np.linalg.norm(X - Gamma @ X @ Gamma.T - Q, "fro") / max(1.0, np.linalg.norm(Q, "fro"))
        series = np.zeros((n, n))
        P = np.eye(n)
        for _ in range(200):
            series += P @ Q @ P.T
            P = Gamma @ P
        worst_res = max(worst_res, res)
        worst_series = max(worst_series, float(np.linalg.norm(X - series, "fro")))
    worst_fp = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        d = int(rng.integers(1, 4))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, d))
        M, N = random_spd(rng, n), random_spd(rng, d)
        sys_i = LqSystem(A=A, B=B, M=M, N=N, W=np.eye(n))
        try:
            K_star, _ = optimal_controller(A, B, M, N)
        except ValueError:
            continue
        G, _, _ = policy_value(sys_i, K_star)
        worst_fp = max(worst_fp, float(np.max(np.abs(greedy_policy(G, n) - K_star))))
    ok = worst_res <= 1e-10 and worst_series <= 1e-8 and worst_fp <= 1e-6
    assert verdict(1, "Lyapunov/Riccati oracle suite", ok,
                   f"residual {worst_res:.2e}, series gap {worst_series:.2e}, greedy fixed point {worst_fp:.2e}")


def test_criterion_2_policy_evaluation_exactness(dean):
    system, _, K1, _, _ = dean
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(20):
        while True:
            K = K1 + 0.2 * rng.normal(size=K1.shape)
            if system.is_stable(K):
                break
        _, H, lam = policy_value(system, K)
        states = rng.normal(size=(1000, system.n)) * 5.0
        worst = max(worst, bellman_residual(system, K, H, lam, states))
    _, _, lam1 = policy_value(system, K1)
    rels = []
    for seed in range(10):
        traj = rollout(system, K1, 1_000_000, rng=np.random.default_rng(7000 + seed))
        rels.append(abs(float(traj.costs.mean()) - lam1) / lam1)
    med = float(np.median(rels))
    ok = worst <= 1e-8 and med <= 0.02
    assert verdict(2, "policy-evaluation exactness", ok,
                   f"max Bellman residual {worst:.2e}, median empirical-lambda gap {med:.3%}")


def test_criterion_3_lstd_consistency_and_rate(two_dim, dean):
    K = np.array([[0.2, 0.0], [0.1, 0.1]])
    _, H, _ = policy_value(two_dim, K)
    h_norm = np.linalg.norm(H, "fro")

    errs_at = {}
    for tau in (2**12, 2**14, 2**16, 100_000):
        errs = []
        for seed in range(20):
            traj = rollout(two_dim, K, tau, rng=np.random.default_rng(9000 + 31 * seed))
            rep = estimate_h(traj, two_dim.W, floor=two_dim.M)
            errs.append(float(np.linalg.norm(rep.estimate - H, "fro")))
        errs_at[tau] = float(np.median(errs))
    rel_err = errs_at[100_000] / h_norm
    ratio = errs_at[2**12] / errs_at[2**16]
    monotone = errs_at[2**12] > errs_at[2**14] > errs_at[2**16]

    system, Sigma_a, K1, _, _ = dean
    G, Hd, _ = policy_value(system, K1)
    g_errs = []
    for seed in range(20):
        rng = np.random.default_rng(11_000 + seed)
        data, _ = collect_data(system, K1, budget=10_000 * 5, T_s=5, Sigma_a=Sigma_a, noise_rng=rng)
        rep = estimate_g(data, Hd, system)
        g_errs.append(float(np.linalg.norm(rep.estimate - G, "fro") / np.linalg.norm(G, "fro")))
    g_med = float(np.median(g_errs))

    ok = rel_err <= 0.05 and 2.0 <= ratio <= 8.0 and monotone and g_med <= 0.1
    assert verdict(3, "LSTD consistency and rate", ok,
                   f"H rel err {rel_err:.3f} @ tau=1e5, err ratio 2^12/2^16 = {ratio:.2f}, "
                   f"monotone {monotone}, G rel err {g_med:.3f} @ 1e4 tuples")


def test_criterion_4_mflq_end_to_end(dean, scalar):
    system, Sigma_a, K1, _, lam_star = dean
    T = 200_000
    medians = {}
    for variant in ("v2", "v3"):
        sched = make_schedule(T, 0.0, variant)
        finals = []
        for seed in range(10):
            rec = run_mflq(system, K1, sched, Sigma_a, rng=seed)
            finals.append(rec.phase_true_lambda[-1] if not rec.diverged else math.inf)
        medians[variant] = float(np.median(finals)) / lam_star

    K1s = initial_policy(scalar, 200.0)
    K_star_s, _ = optimal_controller(scalar.A, scalar.B, scalar.M, scalar.N)
    rec = run_mflq(scalar, K1s, make_schedule(65536, 0.0, "v2"), np.eye(1), rng=0,
                   oracle_estimates=True)
    errs = [abs(float(K[0, 0] - K_star_s[0, 0])) for K in rec.phase_policies]
    phases_needed = next(i for i, e in enumerate(errs + [abs(float(rec.final_policy[0, 0] - K_star_s[0, 0]))], start=0) if e <= 1e-4)
    ok = medians["v2"] <= 1.10 and medians["v3"] <= 1.10 and phases_needed <= 10
    assert verdict(4, "MFLQ end-to-end", ok,
                   f"median final lambda/lambda*: v2 {medians['v2']:.3f}, v3 {medians['v3']:.3f}; "
                   f"oracle scalar within 1e-4 after {phases_needed} phases")


def test_criterion_5_regret_sublinearity(dean, tmp_path):
    system, Sigma_a, K1, _, lam_star = dean
    grid = [2**14, 2**15, 2**16, 2**17]
    medians = []
    rows = []
    for T in grid:
        sched = make_schedule(T, 0.0, "v2")
        regs = []
        stable = 0
        for seed in range(10):
            rec = run_mflq(system, K1, sched, Sigma_a, rng=seed)
            if rec.stable:
                stable += 1
                regs.append(float(np.sum(rec.per_step_costs) - rec.steps * lam_star))
        med = float(np.median(regs))
        medians.append(med)
        rows.append({"T": T, "seeds": 10, "stable_runs": stable,
                     "median_cumulative_regret": med})
    slope = float(np.polyfit(np.log(grid), np.log(medians), 1)[0])
    for row in rows:
        row["loglog_slope"] = slope
    _write_csv(ARTIFACTS / "regret_sweep.csv",
               ["T", "seeds", "stable_runs", "median_cumulative_regret", "loglog_slope"], rows)
    ok = all(m > 0 for m in medians) and slope < 0.95
    assert verdict(5, "regret sublinearity", ok,
                   f"median regrets {[f'{m:.0f}' for m in medians]}, log-log slope {slope:.3f}")


def test_criterion_6_stability_ordering(dean, stability_records):
    system, Sigma_a, K1, _, lam_star = dean
    T, recs = stability_records
    frac = {alg: float(np.mean([r.stable for r in rs])) for alg, rs in recs.items()}

    # artifacts for the plotting component: stability curve over a horizon grid
    # (criterion-6 runs supply the mid-range point) and per-phase costs
    curve_rows = []
    for alg, rs in recs.items():
        stable_rs = [r for r in rs if r.stable]
        curve_rows.append({
            "algorithm": alg, "T": T, "seeds": len(rs),
            "stability_fraction": frac[alg],
            "median_final_phase_cost": float(np.median([r.phase_avg_costs()[-1] for r in stable_rs])) if stable_rs else float("nan"),
            "median_final_lambda": float(np.median([r.phase_true_lambda[-1] for r in stable_rs])) if stable_rs else float("nan"),
            "lambda_opt": lam_star,
            "median_cumulative_regret": float("nan"),
        })
    for T_extra in (4096, 8192):
        for alg, runner, sched_variant in (
            ("mflq_v1", run_mflq, "v1"), ("mflq_v3", run_mflq, "v3"),
            ("lspi", run_lspi, "v2"), ("model_based", run_model_based, "v2"),
        ):
            sched = make_schedule(T_extra, 0.0, sched_variant)
            rs = [runner(system, K1, sched, Sigma_a, rng=s) for s in range(20)]
            stable_rs = [r for r in rs if r.stable]
            curve_rows.append({
                "algorithm": alg, "T": T_extra, "seeds": 20,
                "stability_fraction": float(np.mean([r.stable for r in rs])),
                "median_final_phase_cost": float(np.median([r.phase_avg_costs()[-1] for r in stable_rs])) if stable_rs else float("nan"),
                "median_final_lambda": float(np.median([r.phase_true_lambda[-1] for r in stable_rs])) if stable_rs else float("nan"),
                "lambda_opt": lam_star,
                "median_cumulative_regret": float("nan"),
            })
    curve_rows.sort(key=lambda r: (r["algorithm"], r["T"]))
    _write_csv(ARTIFACTS / "stability_curve.csv", SUMMARY_COLUMNS, curve_rows)

    cost_rows = []
    for alg, rs in recs.items():
        for rec in rs:
            if not rec.stable:
                continue
            costs = rec.phase_avg_costs()
            for i, c in enumerate(costs):
                cost_rows.append({
                    "seed": rec.seed, "algorithm": alg, "phase_index": i + 1,
                    "steps_elapsed": rec.phase_bounds[i][1], "phase_avg_cost": float(c),
                    "true_lambda": rec.phase_true_lambda[i],
                    "cumulative_cost": float("nan"), "cumulative_regret": float("nan"),
                    "stable": rec.stable,
                })
    _write_csv(ARTIFACTS / "cost_per_phase.csv",
               ["seed", "algorithm", "phase_index", "steps_elapsed", "phase_avg_cost",
                "true_lambda", "cumulative_cost", "cumulative_regret", "stable"], cost_rows)
    _write_csv(ARTIFACTS / "lambda_opt.csv", ["lambda_opt"], [{"lambda_opt": lam_star}])

    ok = (frac["mflq_v3"] >= frac["lspi"] - 0.1) and (frac["model_based"] >= frac["mflq_v1"] - 0.1)
    assert verdict(6, "stability ordering", ok,
                   f"fractions at T={T}: " + ", ".join(f"{a}={f:.2f}" for a, f in sorted(frac.items())))


def test_criterion_7_moment_suite():
    rng = np.random.default_rng(707)
    worst_m4 = 0.0
    worst_sb = 0.0
    for _ in range(10):
        k = int(rng.integers(1, 5))
        F = rng.normal(size=(k, k))
        F = 0.5 * (F + F.T)
        F2 = rng.normal(size=(k, k))
        F2 = 0.5 * (F2 + F2.T)
        g = rng.standard_normal((1_000_000, k))
        prod = np.einsum("ti,ij,tj->t", g, F, g) * np.einsum("ti,ij,tj->t", g, F2, g)
        se = prod.std() / 1000.0
        worst_m4 = max(worst_m4, abs(float(prod.mean()) - gaussian_fourth_moment(F, F2)) / (3 * se))
    for _ in range(10):
        dim = int(rng.integers(1, 4))
        Gamma = rng.normal(size=(dim, dim)) * 0.6
        S = rng.normal(size=(dim, dim))
        Sigma = S @ S.T
        U = rng.normal(size=(dim, dim))
        U = 0.5 * (U + U.T)
        v = (U / np.linalg.norm(U)).reshape(-1)
        f = small_ball_samples(Sigma, Gamma, v, 1_000_000, rng=rng)
        sq = f**2
        se = sq.std() / 1000.0
        worst_sb = max(worst_sb, abs(float(sq.mean()) - small_ball_second_moment(Sigma, Gamma, v)) / (3 * se))
    floor_ok = True
    for _ in range(1000):
        dim = int(rng.integers(1, 4))
        Gamma = rng.normal(size=(dim, dim))
        S = rng.normal(size=(dim, dim))
        U = rng.normal(size=(dim, dim))
        U = 0.5 * (U + U.T)
        v = (U / np.linalg.norm(U)).reshape(-1)
        floor_ok &= small_ball_second_moment(S @ S.T, Gamma, v) >= 2.0 - 1e-12
    worst_p = 1.0
    for _ in range(50):
        dim = int(rng.integers(1, 4))
        Gamma = rng.normal(size=(dim, dim)) * 0.5
        S = rng.normal(size=(dim, dim))
        U = rng.normal(size=(dim, dim))
        U = 0.5 * (U + U.T)
        v = (U / np.linalg.norm(U)).reshape(-1)
        worst_p = min(worst_p, small_ball_probability(S @ S.T, Gamma, v, 100_000, rng=rng))
    p_floor = SMALL_BALL_FLOOR - 3 * math.sqrt(SMALL_BALL_FLOOR * (1 - SMALL_BALL_FLOOR) / 100_000)
    ok = worst_m4 <= 1.0 and worst_sb <= 1.0 and floor_ok and worst_p >= p_floor
    assert verdict(7, "appendix moment suite", ok,
                   f"4th-moment worst |diff|/3SE {worst_m4:.2f}, small-ball 2nd worst {worst_sb:.2f}, "
                   f">=2 floor {floor_ok}, min exceedance prob {worst_p:.4f} (floor {p_floor:.4f})")


def test_criterion_8_mixing_blocks_suite():
    model = MixingModel(Gamma=np.array([[0.5]]), alpha=0.75)
    vals = [beta_mixing_bound(model, k) for k in range(12)]
    ratio_err = max(abs(vals[k] / vals[k + 1] - 1.0 / 0.75) for k in range(11))
    res = verify_block_bound(np.array([[0.5]]), n=10_000, delta=0.05, trials=2000, rng=808)
    slack = 3.0 * math.sqrt(4 * 0.05 / 2000)
    ok = ratio_err <= 1e-9 and res["violation_rate"] <= res["budget"] + slack
    assert verdict(8, "mixing/blocks suite", ok,
                   f"geometric ratio error {ratio_err:.1e}, violation rate {res['violation_rate']:.4f} "
                   f"(budget {res['budget']:.2f} + {slack:.3f})")


def test_criterion_9_boundedness_suite(dean):
    system, Sigma_a, K1, _, _ = dean
    _, H1, _ = policy_value(system, K1)
    C_H = 3.0 * float(np.linalg.norm(H1, 2))
    T = 8192
    C_X, _ = state_bounds(C_H, system.n, T, 0.05)
    sched = make_schedule(T, 0.0, "v3")
    exceed = 0
    h_ok = 0
    h_total = 0
    for seed in range(100):
        rec = run_mflq(system, K1, sched, Sigma_a, rng=1_000_000 + seed)
        if rec.max_state_norm > C_X:
            exceed += 1
        for H_i in rec.phase_true_H:
            if H_i is not None:
                h_total += 1
                h_ok += float(np.linalg.norm(H_i, 2)) <= C_H
    slack = 3.0 * math.sqrt(0.05 * 0.95 / 100)
    frac_exceed = exceed / 100
    frac_h = h_ok / max(1, h_total)
    ok = frac_exceed <= 0.05 + slack and frac_h >= 0.95
    assert verdict(9, "boundedness suite", ok,
                   f"P(max||x|| > C_X={C_X:.0f}) = {frac_exceed:.2f} (cap {0.05 + slack:.3f}); "
                   f"||H_i|| <= 3||H_1|| in {frac_h:.1%} of {h_total} healthy phases")


def test_criterion_10_determinism(dean, tmp_path):
    cfg_path = tmp_path / "det.toml"
    cfg_path.write_text("""
system = "dean2017"
algorithm = "mflq_v2"
T = 8192
seeds = [0, 1, 2]
""", encoding="utf-8")
    cfg = load_config(cfg_path)
    run_experiment(cfg, out_dir=tmp_path / "a")
    run_experiment(cfg, out_dir=tmp_path / "b", jobs=2)
    same_results = (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    same_summary = (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()
    sweep(cfg, [4096, 8192], out_dir=tmp_path / "s1")
    sweep(cfg, [4096, 8192], out_dir=tmp_path / "s2")
    same_sweep = (tmp_path / "s1" / "sweep.csv").read_bytes() == (tmp_path / "s2" / "sweep.csv").read_bytes()
    ok = same_results and same_summary and same_sweep
    assert verdict(10, "determinism", ok,
                   f"results {same_results}, summary {same_summary}, sweep {same_sweep}")


@pytest.mark.skipif(shutil.which("node") is None, reason="node not available")
def test_criterion_11_plot_smoke():
    frontend = Path(__file__).parent.parent / "frontend"
    if not (frontend / "dist" / "src" / "main.js").exists():
        pytest.skip("frontend not built (run npm --prefix frontend run build)")
    needed = ["stability_curve.csv", "cost_per_phase.csv", "regret_sweep.csv", "lambda_opt.csv"]
    if not all((ARTIFACTS / n).exists() for n in needed):
        pytest.skip("criterion 5/6 artifacts missing; run those tests first")
    out = ARTIFACTS / "figures"
    out.mkdir(exist_ok=True)
    cmds = [
        ["node", str(frontend / "dist" / "src" / "main.js"), "--kind", "stability",
         "--input", str(ARTIFACTS / "stability_curve.csv"), "--output", str(out / "stability.svg")],
        ["node", str(frontend / "dist" / "src" / "main.js"), "--kind", "cost-per-phase",
         "--input", str(ARTIFACTS / "cost_per_phase.csv"),
         "--reference", str(ARTIFACTS / "lambda_opt.csv"), "--output", str(out / "cost.svg")],
        ["node", str(frontend / "dist" / "src" / "main.js"), "--kind", "regret-sweep",
         "--input", str(ARTIFACTS / "regret_sweep.csv"), "--output", str(out / "regret.svg")],
    ]
    for cmd in cmds:
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    sizes = [(out / n).stat().st_size for n in ("stability.svg", "cost.svg", "regret.svg")]
    # slope annotation must match the sweep's reported slope to 1e-6
    import csv as _csv

    with open(ARTIFACTS / "regret_sweep.csv") as fh:
        sweep_slope = float(next(_csv.DictReader(fh))["loglog_slope"])
    svg = (out / "regret.svg").read_text()
    marker = "slope="
    annotated = float(svg.split(marker, 1)[1].split("<", 1)[0])
    ok = all(s > 0 for s in sizes) and abs(annotated - sweep_slope) <= 1e-6
    assert verdict(11, "plot smoke", ok,
                   f"figure sizes {sizes}, slope annotation {annotated:.6f} vs sweep {sweep_slope:.6f}")
