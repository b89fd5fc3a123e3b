"""Mixing, concentration, and moment bounds with Monte-Carlo validation.

Closed forms computed here: the geometric beta-mixing envelope of a stable
linear process, the independent-blocks partial-sum bound, Gaussian
fourth-moment identities, the small-ball second moment, Gram eigenvalue
floors, and high-probability state/action radii.  Each has a companion
simulation-based check used by the `verify` suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    check_symmetric,
    hinf_resolvent_norm,
    solve_lyapunov,
    spectral_radius,
    symmetrize,
)


# ---------------------------------------------------------------------------
# beta-mixing of stable linear processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixingModel:
    """Stable closed loop driven by identity-covariance Gaussian noise.

    ``alpha`` is the geometric decay factor of the mixing envelope and must lie
    strictly between the spectral radius and 1.
    """

    Gamma: np.ndarray
    alpha: float

    def __post_init__(self):
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        rho = spectral_radius(Gamma)
        if not rho < self.alpha < 1.0:
            raise ValueError(
                f"alpha must lie in (rho, 1) = ({rho:.6g}, 1), got {self.alpha}"
            )
        object.__setattr__(self, "Gamma", Gamma)

    @property
    def dim(self) -> int:
        return self.Gamma.shape[0]


def shifted_state_covariance(Gamma: np.ndarray) -> np.ndarray:
    """Sum over s >= 1 of Gamma^s (Gamma^s)^T, i.e. X = Gamma X Gamma^T + Gamma Gamma^T.

    This is the series appearing in the mixing envelope; it differs from the
    stationary covariance (whose series starts at s = 0) by the identity.
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    return solve_lyapunov(Gamma, Gamma @ Gamma.T)


def beta_mixing_bound(model: MixingModel, k: int) -> float:
    """Envelope on the k-th beta-mixing coefficient of x' = Gamma x + N(0, I).

    Value: (||R||_Hinf / 2) sqrt(trace(Sigma) + d / (1 - alpha^2)) alpha^k,
    where R is the resolvent of Gamma / alpha on the unit circle and Sigma the
    shifted state covariance.  Consecutive values have exact ratio 1 / alpha.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    Sigma = shifted_state_covariance(model.Gamma)
    resolvent = hinf_resolvent_norm(model.Gamma / model.alpha)
    d = model.dim
    amp = 0.5 * resolvent * math.sqrt(float(np.trace(Sigma)) + d / (1.0 - model.alpha**2))
    return amp * model.alpha**k


def beta_bar(model: MixingModel) -> float:
    """The k = 0 value of the mixing envelope."""
    return beta_mixing_bound(model, 0)


# ---------------------------------------------------------------------------
# independent blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockPartition:
    """Head/tail/residual index blocks of {0, ..., n-1} (half-open ranges)."""

    n: int
    b: int
    m: int
    heads: list[range]
    tails: list[range]
    residual: range


def block_partition(n: int, b: int) -> BlockPartition:
    """Alternating head/tail blocks of length b with a residual shorter than 2b."""
    if b < 1 or 2 * b > n:
        raise ValueError(f"need 1 <= b <= n/2, got b={b}, n={n}")
    m = n // (2 * b)
    heads = [range(2 * j * b, (2 * j + 1) * b) for j in range(m)]
    tails = [range((2 * j + 1) * b, (2 * j + 2) * b) for j in range(m)]
    residual = range(2 * m * b, n)
    return BlockPartition(n=n, b=b, m=m, heads=heads, tails=tails, residual=residual)


def partial_sum_bound(n: int, rate: float, beta_bar_: float, delta: float) -> tuple[int, float]:
    """Block length and excursion bound for partial sums of a mixing process.

    For a [-1, 1]-valued zero-mean process with beta_b <= beta_bar * exp(-rate b),
    choosing b = ceil(log(2 beta_bar n / delta) / rate) gives, outside
    probability 4 delta,

        S_n <= 2 log(2 beta_bar n / delta) (sqrt(n / rate) + 1 / rate).

    ``rate`` is the exponential rate; for a geometric envelope beta_bar alpha^k
    pass rate = log(1 / alpha).  Requires 2 beta_bar n >= 1.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if rate <= 0.0:
        raise ValueError("rate must be positive")
    if 2.0 * beta_bar_ * n < 1.0:
        raise ValueError("bound assumes 2 * beta_bar * n >= 1")
    log_term = math.log(2.0 * beta_bar_ * n / delta)
    b = max(1, math.ceil(log_term / rate))
    s_bound = 2.0 * log_term * (math.sqrt(n / rate) + 1.0 / rate)
    return b, s_bound


def verify_block_bound(
    Gamma: np.ndarray,
    n: int,
    delta: float,
    trials: int,
    rng: np.random.Generator | int | None = None,
    alpha: float | None = None,
    clip: float = 1.0,
    center_steps: int = 1_000_000,
) -> dict:
    """Empirical violation rate of the partial-sum bound on clipped states.

    Simulates ``trials`` independent length-n trajectories of
    x' = Gamma x + N(0, I), applies the observable clip(x_1, -1, 1) centered by
    a long pre-run mean estimate, and counts how often the partial sum exceeds
    the theoretical excursion bound.  The rate should stay below 4 delta (plus
    binomial noise).
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    rho = spectral_radius(Gamma)
    if alpha is None:
        alpha = 0.5 * (1.0 + rho)
    model = MixingModel(Gamma=Gamma, alpha=alpha)
    bbar = beta_bar(model)
    rate = math.log(1.0 / alpha)
    b, s_bound = partial_sum_bound(n, rate, bbar, delta)

    rng = np.random.default_rng(rng)
    d = Gamma.shape[0]

    # Pre-run to estimate the stationary mean of the clipped observable.
    batch = 100
    steps = max(1, center_steps // batch)
    X = np.zeros((batch, d))
    acc = 0.0
    for _ in range(steps):
        X = X @ Gamma.T + rng.standard_normal((batch, d))
        acc += float(np.mean(np.clip(X[:, 0], -clip, clip)))
    center = acc / steps

    X = np.zeros((trials, d))
    S = np.zeros(trials)
    for _ in range(n):
        X = X @ Gamma.T + rng.standard_normal((trials, d))
        S += np.clip(X[:, 0], -clip, clip) - center
    violations = int(np.sum(S > s_bound))
    return {
        "alpha": alpha,
        "rate": rate,
        "beta_bar": bbar,
        "block_length": b,
        "s_bound": s_bound,
        "violation_rate": violations / trials,
        "budget": 4.0 * delta,
        "trials": trials,
    }


# ---------------------------------------------------------------------------
# Gaussian quadratic-form moments and the small-ball bound
# ---------------------------------------------------------------------------

def gaussian_fourth_moment(F: np.ndarray, F2: np.ndarray) -> float:
    """E[(g'Fg)(g'F2g)] for g ~ N(0, I) and symmetric F, F2.

    Closed form 2 <F, F2> + trace(F) trace(F2).
    """
    F = check_symmetric(F, "F")
    F2 = check_symmetric(F2, "F2")
    if F.shape != F2.shape:
        raise ValueError("F and F2 must have equal dimensions")
    return 2.0 * float(np.sum(F * F2)) + float(np.trace(F)) * float(np.trace(F2))


def _small_ball_matrices(Sigma: np.ndarray, Gamma: np.ndarray, v: np.ndarray):
    Sigma = check_symmetric(Sigma, "Sigma")
    if np.linalg.eigvalsh(Sigma)[0] < -1e-10:
        raise ValueError("Sigma must be positive semidefinite")
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    v = np.asarray(v, dtype=float).reshape(-1)
    dim = Gamma.shape[0]
    if v.size != dim * dim:
        raise ValueError("v must have length dim(Gamma)^2")
    V = symmetrize(v.reshape(dim, dim))
    w, U = np.linalg.eigh(Sigma)
    S_half = (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T
    return S_half, Gamma, V


def small_ball_second_moment(Sigma: np.ndarray, Gamma: np.ndarray, v: np.ndarray) -> float:
    """Second moment of the feature-increment projection f_v.

    For x = Sigma^(1/2) g and x' = Gamma x + g' with independent standard
    normals, f_v = <v, vect(x'x'^T - xx^T)>.  With V = mat(v) (symmetric, unit
    Frobenius norm) the closed form is

        (tr(P) - tr(Q) + tr(V))^2 + 2 ||P - Q||_F^2 + 2 ||V||_F^2
        + 4 ||Sigma^(1/2) Gamma^T V||_F^2,

    with P = Sigma^(1/2) Gamma^T V Gamma Sigma^(1/2), Q = Sigma^(1/2) V
    Sigma^(1/2).  Always at least 2 ||V||_F^2 = 2.
    """
    S_half, Gamma, V = _small_ball_matrices(Sigma, Gamma, v)
    P = S_half @ Gamma.T @ V @ Gamma @ S_half
    Q = S_half @ V @ S_half
    t1 = (float(np.trace(P)) - float(np.trace(Q)) + float(np.trace(V))) ** 2
    t2 = 2.0 * float(np.linalg.norm(P - Q, "fro")) ** 2
    t3 = 2.0 * float(np.linalg.norm(V, "fro")) ** 2
    t4 = 4.0 * float(np.linalg.norm(S_half @ Gamma.T @ V, "fro")) ** 2
    return t1 + t2 + t3 + t4


def small_ball_samples(
    Sigma: np.ndarray,
    Gamma: np.ndarray,
    v: np.ndarray,
    samples: int,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Monte-Carlo draws of f_v(g, g'), the degree-two feature-increment polynomial."""
    S_half, Gamma, V = _small_ball_matrices(Sigma, Gamma, v)
    rng = np.random.default_rng(rng)
    dim = Gamma.shape[0]
    g = rng.standard_normal((samples, dim))
    gp = rng.standard_normal((samples, dim))
    x = g @ S_half.T
    xp = x @ Gamma.T + gp
    return np.einsum("ti,ij,tj->t", xp, V, xp) - np.einsum("ti,ij,tj->t", x, V, x)


def small_ball_probability(
    Sigma: np.ndarray,
    Gamma: np.ndarray,
    v: np.ndarray,
    samples: int,
    rng: np.random.Generator | int | None = None,
    threshold: float = 1.0,
) -> float:
    """Monte-Carlo estimate of P(|f_v| >= threshold); lower-bounded by 1/324 at 1."""
    f = small_ball_samples(Sigma, Gamma, v, samples, rng)
    return float(np.mean(np.abs(f) >= threshold))


SMALL_BALL_FLOOR = 1.0 / 324.0


def upper_moment_bound(Sigma: np.ndarray) -> float:
    """As-printed envelope 12 trace(Sigma^(1/2))^2 for E||phi(x') - phi(x)||^2.

    Stated for stationary whitened systems (noise covariance I, so Sigma >= I).
    Monte Carlo shows this form FAILS once Sigma's spectrum spreads (e.g. a
    3-dim loop with eigenvalues {1.5, 3.6, 9.4} exceeds it by ~6%): the square
    root looks like a slip for Sigma itself, since the chain
    E||phi' - phi||^2 <= 4 E||x||^4 = 8||Sigma||_F^2 + 4 tr(Sigma)^2
    <= 12 tr(Sigma)^2 is exact.  Use upper_moment_bound_corrected for the
    reading that provably holds; this one is kept for comparison.
    """
    Sigma = check_symmetric(Sigma, "Sigma")
    w = np.linalg.eigvalsh(Sigma)
    if w[0] < -1e-10:
        raise ValueError("Sigma must be positive semidefinite")
    return 12.0 * float(np.sum(np.sqrt(np.clip(w, 0.0, None)))) ** 2


def upper_moment_bound_corrected(Sigma: np.ndarray) -> float:
    """Envelope 12 trace(Sigma)^2, valid for all PSD Sigma.

    Follows from ||phi' - phi||^2 <= 2||phi'||^2 + 2||phi||^2, stationarity,
    the Gaussian identity E||x||^4 = 2||Sigma||_F^2 + tr(Sigma)^2, and
    ||Sigma||_F^2 <= tr(Sigma)^2.
    """
    Sigma = check_symmetric(Sigma, "Sigma")
    w = np.linalg.eigvalsh(Sigma)
    if w[0] < -1e-10:
        raise ValueError("Sigma must be positive semidefinite")
    return 12.0 * float(np.trace(Sigma)) ** 2


def feature_increment_second_moment_mc(
    Gamma: np.ndarray,
    samples: int,
    rng: np.random.Generator | int | None = None,
) -> tuple[float, float]:
    """Monte-Carlo (E||phi(x') - phi(x)||^2, standard error) for x' = Gamma x + N(0, I).

    x is drawn from the stationary distribution of the whitened closed loop.
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    Sigma = solve_lyapunov(Gamma, np.eye(Gamma.shape[0]))
    w, U = np.linalg.eigh(Sigma)
    S_half = (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T
    rng = np.random.default_rng(rng)
    dim = Gamma.shape[0]
    x = rng.standard_normal((samples, dim)) @ S_half.T
    xp = x @ Gamma.T + rng.standard_normal((samples, dim))
    diff = xp[:, :, None] * xp[:, None, :] - x[:, :, None] * x[:, None, :]
    vals = np.sum(diff.reshape(samples, -1) ** 2, axis=1)
    return float(np.mean(vals)), float(np.std(vals) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# Gram floors and boundedness radii
# ---------------------------------------------------------------------------

def sym_basis_coords(vecs: np.ndarray, dim: int) -> np.ndarray:
    """Coordinates of vectorized symmetric matrices in an orthonormal symmetric basis.

    Maps length-dim^2 images (duplicated off-diagonals) to dim(dim+1)/2
    coordinates, preserving inner products; use this before Gram-eigenvalue
    analysis so structurally antisymmetric null directions are excluded.
    """
    vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
    if vecs.shape[1] != dim * dim:
        raise ValueError(f"expected row length {dim * dim}, got {vecs.shape[1]}")
    mats = vecs.reshape(-1, dim, dim)
    cols = [mats[:, i, i] for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            cols.append((mats[:, i, j] + mats[:, j, i]) / math.sqrt(2.0))
    return np.stack(cols, axis=1)


def gram_floor_check(features: np.ndarray, omega: float, p_omega: float) -> tuple[float, float]:
    """(empirical lambda_min of the second-moment matrix, theoretical floor).

    The floor is omega^2 P(omega) / 8, valid once enough samples have been
    gathered for the small-ball argument to bite.
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty feature list")
    gram = (X.T @ X) / X.shape[0]
    lam_min = float(np.linalg.eigvalsh(symmetrize(gram))[0])
    floor = omega**2 * p_omega / 8.0
    return lam_min, floor


def state_bounds(C_H: float, n: int, T: int, delta2: float) -> tuple[float, float]:
    """High-probability radii for states and actions under bounded value matrices.

    C_X = sqrt(2 n log(T n / delta2)) / (1 - sqrt(1 - (2 C_H)^-2)) and
    C_A = sqrt(C_H) C_X.  Requires C_H > 1/2 so the inner root is real.
    """
    if C_H <= 0.5:
        raise ValueError("C_H must exceed 1/2")
    if not 0.0 < delta2 < 1.0:
        raise ValueError("delta2 must lie in (0, 1)")
    if n < 1 or T < 1:
        raise ValueError("n and T must be positive")
    num = math.sqrt(2.0 * n * math.log(T * n / delta2))
    den = 1.0 - math.sqrt(1.0 - (2.0 * C_H) ** -2)
    C_X = num / den
    return C_X, math.sqrt(C_H) * C_X
