"""Named Monte-Carlo verification suites behind the `verify` CLI subcommand.

Each check compares a simulated statistic against its closed-form bound or
identity and reports statistic, bound, and verdict.  Checks use fixed seeds so
a suite is reproducible run to run; ``fast=True`` shrinks sample sizes for
smoke testing; ``inject_failure=True`` flips every verdict to exercise the
failure-reporting path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algorithm import make_schedule, run_mflq
from .baselines import initial_policy
from .bounds import (
    SMALL_BALL_FLOOR,
    MixingModel,
    beta_bar,
    beta_mixing_bound,
    block_partition,
    feature_increment_second_moment_mc,
    gaussian_fourth_moment,
    gram_floor_check,
    partial_sum_bound,
    small_ball_probability,
    small_ball_samples,
    small_ball_second_moment,
    state_bounds,
    sym_basis_coords,
    upper_moment_bound,
    upper_moment_bound_corrected,
    verify_block_bound,
)
from .env import LqSystem, policy_value
from .harness import load_builtin
from .linalg import solve_lyapunov, spectral_radius

SUITES = ("moments", "small-ball", "mixing", "blocks", "gram", "state-bounds", "all")


@dataclass
class CheckResult:
    suite: str
    name: str
    statistic: float
    bound: float
    comparison: str  # "<=", ">=", "=="
    passed: bool


def _check(suite: str, name: str, statistic: float, comparison: str, bound: float, tol: float = 0.0) -> CheckResult:
    if comparison == "<=":
        ok = statistic <= bound + tol
    elif comparison == ">=":
        ok = statistic >= bound - tol
    elif comparison == "==":
        ok = abs(statistic - bound) <= tol
    else:
        raise ValueError(f"bad comparison {comparison!r}")
    return CheckResult(suite, name, float(statistic), float(bound), comparison, bool(ok))


def _random_symmetric_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    U = rng.normal(size=(dim, dim))
    U = 0.5 * (U + U.T)
    return (U / np.linalg.norm(U)).reshape(-1)


def _random_instance(rng: np.random.Generator, max_dim: int = 4):
    dim = int(rng.integers(1, max_dim))
    Gamma = rng.normal(size=(dim, dim)) * 0.5
    S = rng.normal(size=(dim, dim))
    Sigma = S @ S.T
    v = _random_symmetric_direction(rng, dim)
    return Sigma, Gamma, v


def suite_moments(fast: bool = False, seed: int = 2024) -> list[CheckResult]:
    """Gaussian fourth-moment and small-ball second-moment closed forms vs MC."""
    rng = np.random.default_rng(seed)
    samples = 100_000 if fast else 1_000_000
    instances = 3 if fast else 10
    out = []
    for i in range(instances):
        k = int(rng.integers(1, 5))
        F = rng.normal(size=(k, k))
        F = 0.5 * (F + F.T)
        F2 = rng.normal(size=(k, k))
        F2 = 0.5 * (F2 + F2.T)
        g = rng.standard_normal((samples, k))
        prod = np.einsum("ti,ij,tj->t", g, F, g) * np.einsum("ti,ij,tj->t", g, F2, g)
        se = float(prod.std() / math.sqrt(samples))
        out.append(
            _check("moments", f"fourth-moment[{i}] |MC - closed| <= 3 SE",
                   abs(float(prod.mean()) - gaussian_fourth_moment(F, F2)), "<=", 3.0 * se)
        )
    for i in range(instances):
        Sigma, Gamma, v = _random_instance(rng)
        f = small_ball_samples(Sigma, Gamma, v, samples, rng=rng)
        sq = f**2
        se = float(sq.std() / math.sqrt(samples))
        out.append(
            _check("moments", f"small-ball-2nd[{i}] |MC - closed| <= 3 SE",
                   abs(float(sq.mean()) - small_ball_second_moment(Sigma, Gamma, v)), "<=", 3.0 * se)
        )
    draws = 100 if fast else 1000
    worst = min(small_ball_second_moment(*_random_instance(rng)) for _ in range(draws))
    out.append(_check("moments", f"small-ball-2nd >= 2 on {draws} draws", worst, ">=", 2.0))
    return out


def suite_small_ball(fast: bool = False, seed: int = 2025) -> list[CheckResult]:
    """Empirical exceedance probability against the universal 1/324 floor."""
    rng = np.random.default_rng(seed)
    samples = 20_000 if fast else 100_000
    instances = 10 if fast else 50
    out = []
    worst = 1.0
    for _ in range(instances):
        Sigma, Gamma, v = _random_instance(rng)
        p_hat = small_ball_probability(Sigma, Gamma, v, samples, rng=rng)
        worst = min(worst, p_hat)
    se = math.sqrt(SMALL_BALL_FLOOR * (1 - SMALL_BALL_FLOOR) / samples)
    out.append(
        _check("small-ball", f"min P(|f_v| >= 1) over {instances} instances",
               worst, ">=", SMALL_BALL_FLOOR - 3.0 * se)
    )
    Sigma, Gamma, v = _random_instance(rng)
    f = small_ball_samples(Sigma, Gamma, v, samples, rng=rng)
    f2 = small_ball_samples(Sigma, Gamma, 2.0 * v, samples, rng=np.random.default_rng(seed + 1))
    # homogeneity: scaling v scales f_v; exceedance at level c matches level 1
    p_scaled = float(np.mean(np.abs(f2) >= 2.0))
    p_base = small_ball_probability(Sigma, Gamma, v, samples, rng=np.random.default_rng(seed + 1))
    out.append(_check("small-ball", "homogeneity |P_c - P_1|", abs(p_scaled - p_base), "<=", 1e-12))
    return out


def suite_mixing(fast: bool = False, seed: int = 2026) -> list[CheckResult]:
    """Structure of the geometric mixing envelope."""
    rng = np.random.default_rng(seed)
    out = []
    model = MixingModel(Gamma=np.array([[0.5]]), alpha=0.75)
    vals = [beta_mixing_bound(model, k) for k in range(11)]
    ratio_err = max(abs(vals[k] / vals[k + 1] - 1.0 / model.alpha) for k in range(10))
    out.append(_check("mixing", "consecutive ratio == 1/alpha", ratio_err, "<=", 1e-9))
    # scalar oracle: Sigma = gamma^2/(1-gamma^2), resolvent = 1/(alpha^{-1} - ... ) at z=1
    Sigma = 0.25 / 0.75
    resolvent = 1.0 / (1.0 - 0.5 / 0.75)
    expected = 0.5 * resolvent * math.sqrt(Sigma + 1.0 / (1.0 - 0.75**2))
    out.append(_check("mixing", "scalar plug-in beta_bar", abs(beta_bar(model) - expected), "<=", 1e-9))
    dmodel = MixingModel(Gamma=np.zeros((3, 3)), alpha=0.6)
    expected0 = 0.5 * math.sqrt(3.0 / (1.0 - 0.36))
    out.append(_check("mixing", "Gamma=0 closed form", abs(beta_bar(dmodel) - expected0), "<=", 1e-9))
    for i in range(3):
        n = int(rng.integers(1, 5))
        G = rng.normal(size=(n, n))
        G *= rng.uniform(0.2, 0.9) / max(1e-12, spectral_radius(G))
        m = MixingModel(Gamma=G, alpha=0.5 * (1 + spectral_radius(G)))
        ks = [beta_mixing_bound(m, k) for k in (1, 2, 3)]
        out.append(_check("mixing", f"monotone decreasing[{i}]", ks[2], "<=", ks[0]))
    return out


def suite_blocks(fast: bool = False, seed: int = 2027) -> list[CheckResult]:
    """Partition structure and the empirical partial-sum excursion bound."""
    rng = np.random.default_rng(seed)
    out = []
    part = block_partition(10, 2)
    layout_ok = (
        part.m == 2
        and list(part.heads[0]) == [0, 1]
        and list(part.tails[0]) == [2, 3]
        and list(part.heads[1]) == [4, 5]
        and list(part.tails[1]) == [6, 7]
        and list(part.residual) == [8, 9]
    )
    out.append(_check("blocks", "partition layout n=10,b=2", 1.0 if layout_ok else 0.0, ">=", 1.0))
    for i in range(5):
        n = int(rng.integers(4, 200))
        b = int(rng.integers(1, n // 2 + 1))
        p = block_partition(n, b)
        idx = sorted([j for r in p.heads + p.tails for j in r] + list(p.residual))
        out.append(_check("blocks", f"partition covers [n] once[{i}]", 1.0 if idx == list(range(n)) else 0.0, ">=", 1.0))
    b, _ = partial_sum_bound(1000, 0.5, 1.0, 0.01)
    out.append(_check("blocks", "plug-in block length", float(b), "==", float(math.ceil(2 * math.log(2e5)))))
    trials = 200 if fast else 2000
    n = 2000 if fast else 10_000
    res = verify_block_bound(np.array([[0.5]]), n=n, delta=0.05, trials=trials, rng=seed)
    slack = 3.0 * math.sqrt(4 * 0.05 / trials)
    out.append(
        _check("blocks", f"violation rate <= 4 delta + 3 SE (n={n}, trials={trials})",
               res["violation_rate"], "<=", res["budget"] + slack)
    )
    return out


def suite_gram(fast: bool = False, seed: int = 2028) -> list[CheckResult]:
    """Empirical Gram eigenvalue floor for feature increments of a stable loop."""
    rng = np.random.default_rng(seed)
    steps = 20_000 if fast else 100_000
    Gamma = np.array([[0.5, 0.1], [0.0, 0.3]])
    X = np.zeros((steps + 1, 2))
    x = np.zeros(2)
    for t in range(steps):
        x = Gamma @ x + rng.standard_normal(2)
        X[t + 1] = x
    F = (X[1:, :, None] * X[1:, None, :] - X[:-1, :, None] * X[:-1, None, :]).reshape(-1, 4)
    lam_min, floor = gram_floor_check(sym_basis_coords(F, 2), omega=1.0, p_omega=SMALL_BALL_FLOOR)
    out = [_check("gram", f"lambda_min over {steps} steps >= omega^2 P / 8", lam_min, ">=", floor)]
    rep = np.tile(np.array([[1.0, 2.0, 2.0, 4.0]]), (50, 1))
    lam_rep, _ = gram_floor_check(rep, omega=1.0, p_omega=SMALL_BALL_FLOOR)
    out.append(_check("gram", "repeated feature -> singular Gram", abs(lam_rep), "<=", 1e-12))
    out.append(_check("gram", "floor arithmetic omega=2,P=1/2", gram_floor_check(rep, 2.0, 0.5)[1], "==", 0.25))
    return out


def suite_state_bounds(fast: bool = False, seed: int = 2029) -> list[CheckResult]:
    """High-probability state-norm radius against simulated adaptive runs."""
    out = []
    C_X, C_A = state_bounds(5.0, 3, 10_000, 0.05)
    out.append(_check("state-bounds", "C_A / C_X == sqrt(C_H)", abs(C_A / C_X - math.sqrt(5.0)), "<=", 1e-12))
    out.append(
        _check("state-bounds", "C_X decreasing in delta2",
               state_bounds(5.0, 3, 10_000, 0.2)[0], "<=", C_X)
    )
    out.append(
        _check("state-bounds", "C_X increasing in T",
               C_X, "<=", state_bounds(5.0, 3, 100_000, 0.05)[0])
    )
    system, sigma = load_builtin("dean2017")
    K1 = initial_policy(system, 200.0)
    _, H1, _ = policy_value(system, K1)
    C_H = 3.0 * float(np.linalg.norm(H1, 2))
    T = 16384
    runs = 25 if fast else 100
    C_X_emp, _ = state_bounds(C_H, system.n, T, 0.05)
    sched = make_schedule(T, 0.0, "v3")
    exceed = 0
    for s in range(runs):
        rec = run_mflq(system, K1, sched, sigma * np.eye(system.d), rng=seed * 100_000 + s)
        if rec.max_state_norm > C_X_emp:
            exceed += 1
    slack = 3.0 * math.sqrt(0.05 * 0.95 / runs)
    out.append(
        _check("state-bounds", f"P(max||x|| > C_X) over {runs} runs <= delta2 + 3 SE",
               exceed / runs, "<=", 0.05 + slack)
    )
    # companion: feature-increment second-moment envelopes on whitened
    # stationary loops.  The Sigma-reading is provable and asserted; the
    # as-printed Sigma^(1/2)-reading is reported so its counterexamples are
    # visible (negative margin = violated).
    rng = np.random.default_rng(seed)
    worst_corrected = math.inf
    worst_printed = math.inf
    for i in range(5 if fast else 20):
        dim = int(rng.integers(1, 4))
        G = rng.normal(size=(dim, dim))
        G *= 0.9 * rng.uniform(0.1, 1.0) / max(1e-12, spectral_radius(G))
        Sigma = solve_lyapunov(G, np.eye(dim))
        mc, se = feature_increment_second_moment_mc(G, 50_000 if fast else 200_000, rng=rng)
        worst_corrected = min(worst_corrected, upper_moment_bound_corrected(Sigma) - mc + 3 * se)
        worst_printed = min(worst_printed, upper_moment_bound(Sigma) - mc)
    out.append(_check("state-bounds", "feature-increment 2nd moment <= 12 tr(Sigma)^2",
                      -worst_corrected, "<=", 0.0))
    out.append(_check("state-bounds",
                      f"(report) as-printed 12 tr(Sigma^1/2)^2 worst margin {worst_printed:.1f}",
                      worst_printed, "<=", math.inf))
    return out


_SUITE_FUNCS = {
    "moments": suite_moments,
    "small-ball": suite_small_ball,
    "mixing": suite_mixing,
    "blocks": suite_blocks,
    "gram": suite_gram,
    "state-bounds": suite_state_bounds,
}


def run_suite(name: str, fast: bool = False, inject_failure: bool = False) -> list[CheckResult]:
    """Run one named suite (or "all"); optionally flip verdicts to test reporting."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    names = list(_SUITE_FUNCS) if name == "all" else [name]
    results: list[CheckResult] = []
    for n in names:
        results.extend(_SUITE_FUNCS[n](fast=fast))
    if inject_failure:
        for r in results:
            r.passed = not r.passed
    return results


def bounds_table(
    sys: LqSystem,
    K: np.ndarray,
    alpha: float,
    delta: float,
    T: int,
    delta2: float = 0.05,
) -> list[tuple[str, float]]:
    """All bound constants for one closed loop, as (name, value) rows."""
    Gamma = sys.closed_loop(K)
    rho = spectral_radius(Gamma)
    if not rho < alpha < 1.0:
        raise ValueError(f"alpha must lie in (rho, 1) = ({rho:.6g}, 1)")
    model = MixingModel(Gamma=Gamma, alpha=alpha)
    bbar = beta_bar(model)
    rate = math.log(1.0 / alpha)
    b, s_bound = partial_sum_bound(T, rate, bbar, delta)
    _, H, lam = policy_value(sys, K)
    C_H = 3.0 * float(np.linalg.norm(H, 2))
    C_X, C_A = state_bounds(C_H, sys.n, T, delta2)
    Sigma_pi = solve_lyapunov(Gamma, sys.W)
    trace_cap = float(np.linalg.norm(H, 2) * np.trace(sys.W) / np.linalg.eigvalsh(sys.M)[0])
    rows = [
        ("rho(Gamma)", rho),
        ("alpha", alpha),
        ("beta_bar", bbar),
        ("rate log(1/alpha)", rate),
        ("block_length_b", float(b)),
        ("s_bound", s_bound),
        ("lambda_pi", lam),
        ("C_H (3||H||)", C_H),
        ("C_X", C_X),
        ("C_A", C_A),
        ("tr(Sigma_pi)", float(np.trace(Sigma_pi))),
        ("tr bound ||H|| tr(W)/eig_min(M)", trace_cap),
    ]
    for k in (1, 2, 5, 10, 20):
        rows.append((f"beta_{k}", beta_mixing_bound(model, k)))
    return rows
