"""Dense small-matrix primitives shared by the rest of the package.

Everything here operates on plain ``numpy`` arrays.  Symmetric matrices are
stored full (no packed format) and vectorized row-major with duplicated
off-diagonal entries, so that the inner product of two vectorized symmetric
matrices equals the trace of their product.
"""

from __future__ import annotations

import math

import numpy as np

# Kronecker-based Lyapunov solves are O(n^6); fine for desk-scale systems.
LYAPUNOV_DIM_CAP = 32

RICCATI_TOL = 1e-12
RICCATI_MAX_ITER = 100_000

PINV_TOL = 1e-10


class InstabilityError(RuntimeError):
    """Raised when an operation requires spectral radius < 1 and it is not."""


class RiccatiDivergenceError(RuntimeError):
    """Raised when Riccati value iteration fails to converge."""


def spectral_radius(A: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("spectral_radius requires a square matrix")
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def symmetrize(X: np.ndarray) -> np.ndarray:
    """Return (X + X^T) / 2."""
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + X.T)


def check_symmetric(X: np.ndarray, name: str = "matrix", tol: float = 1e-8) -> np.ndarray:
    """Validate that X is (numerically) symmetric and return it symmetrized exactly."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"{name} must be square, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(X))))
    if np.max(np.abs(X - X.T)) > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return symmetrize(X)


def sym_vec(X: np.ndarray) -> np.ndarray:
    """Row-major vectorization of a symmetric matrix.

    Off-diagonals are duplicated, not scaled, so
    ``sym_vec(X) @ sym_vec(Y) == trace(X @ Y)`` for symmetric X, Y.
    """
    X = check_symmetric(X, "sym_vec input")
    return X.reshape(-1).copy()


def sym_mat(v: np.ndarray) -> np.ndarray:
    """Inverse of sym_vec: reshape to square and symmetrize via (R + R^T)/2."""
    v = np.asarray(v, dtype=float).reshape(-1)
    n = math.isqrt(v.size)
    if n * n != v.size:
        raise ValueError(f"sym_mat needs a perfect-square length, got {v.size}")
    R = v.reshape(n, n)
    return symmetrize(R)


def solve_lyapunov(Gamma: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve X = Gamma X Gamma^T + Q for stable Gamma and symmetric Q.

    Direct Kronecker solve of (I - Gamma (x) Gamma) vec(X) = vec(Q); exact for
    the dimensions this package targets (n <= 32).
    """
    Gamma = np.asarray(Gamma, dtype=float)
    Q = check_symmetric(Q, "Q")
    n = Q.shape[0]
    if Gamma.shape != (n, n):
        raise ValueError(f"Gamma shape {Gamma.shape} does not match Q shape {Q.shape}")
    if n > LYAPUNOV_DIM_CAP:
        raise ValueError(f"solve_lyapunov supports n <= {LYAPUNOV_DIM_CAP}, got n = {n}")
    rho = spectral_radius(Gamma)
    if rho >= 1.0:
        raise InstabilityError(f"solve_lyapunov needs spectral radius < 1, got {rho:.6g}")
    lhs = np.eye(n * n) - np.kron(Gamma, Gamma)
    x = np.linalg.solve(lhs, Q.reshape(-1))
    return symmetrize(x.reshape(n, n))


def psd_project(X: np.ndarray, floor: np.ndarray) -> np.ndarray:
    """Frobenius-nearest Y >= floor (in the PSD order) to symmetric X.

    Eigendecompose X - floor, clip negative eigenvalues at zero, add floor back.
    Idempotent and non-expansive.
    """
    X = check_symmetric(X, "X")
    floor = check_symmetric(floor, "floor")
    if floor.shape != X.shape:
        raise ValueError("X and floor must have the same shape")
    w, V = np.linalg.eigh(X - floor)
    w = np.maximum(w, 0.0)
    return symmetrize(floor + (V * w) @ V.T)


def pinv_solve(A: np.ndarray, b: np.ndarray, tol: float = PINV_TOL) -> np.ndarray:
    """Minimum-norm least-squares solution of A x = b via SVD.

    Singular values below ``tol * sigma_max`` are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x, _, _, _ = np.linalg.lstsq(A, b, rcond=tol)
    return x


def smallest_retained_singular_value(A: np.ndarray, tol: float = PINV_TOL) -> float:
    """Smallest singular value of A above the pseudo-inverse cutoff (0 if none)."""
    s = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    kept = s[s > tol * s[0]]
    return float(kept[-1]) if kept.size else 0.0


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """[B, AB, ..., A^(n-1) B]."""
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def _check_pd(X: np.ndarray, name: str) -> None:
    w = np.linalg.eigvalsh(check_symmetric(X, name))
    if w[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite (min eigenvalue {w[0]:.3g})")


def optimal_controller(
    A: np.ndarray,
    B: np.ndarray,
    M: np.ndarray,
    N: np.ndarray,
    tol: float = RICCATI_TOL,
    max_iter: int = RICCATI_MAX_ITER,
) -> tuple[np.ndarray, np.ndarray]:
    """Optimal average-cost gain and Riccati fixed point for x' = Ax + Ba.

    Returns (K, P) with K = (N + B^T P B)^{-1} B^T P A and P the fixed point of
    the discrete Riccati value update, iterated to relative tolerance ``tol``.
    Requires (A, B) controllable and M, N positive definite.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if B.ndim != 2 or B.shape[0] != n:
        raise ValueError(f"B shape {B.shape} incompatible with A shape {A.shape}")
    _check_pd(M, "M")
    _check_pd(N, "N")
    if np.linalg.matrix_rank(controllability_matrix(A, B)) < n:
        raise ValueError("(A, B) is not controllable")

    M = symmetrize(np.asarray(M, dtype=float))
    N = symmetrize(np.asarray(N, dtype=float))
    P = M.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        K = np.linalg.solve(N + BtP @ B, BtP @ A)
        P_next = symmetrize(M + A.T @ P @ A - A.T @ P @ B @ K)
        delta = np.linalg.norm(P_next - P, "fro")
        P = P_next
        if delta <= tol * max(1.0, np.linalg.norm(P, "fro")):
            break
    else:
        raise RiccatiDivergenceError(
            f"Riccati iteration did not converge in {max_iter} iterations"
        )
    BtP = B.T @ P
    K = np.linalg.solve(N + BtP @ B, BtP @ A)
    rho = spectral_radius(A - B @ K)
    if rho >= 1.0:
        raise RiccatiDivergenceError(
            f"Riccati solution gives unstable closed loop (rho = {rho:.6g})"
        )
    return K, P


def hinf_resolvent_norm(A: np.ndarray, grid_points: int = 4096) -> float:
    """sup over |z| = 1 of the 2-norm of (zI - A)^{-1}, for stable A.

    Evaluated on a uniform grid of the unit circle (which contains z = 1 and
    z = -1) followed by golden-section refinement around the grid maximum.
    The result is a lower-biased approximation of the true supremum.
    """
    A = np.asarray(A, dtype=float)
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise InstabilityError(f"resolvent norm needs spectral radius < 1, got {rho:.6g}")
    n = A.shape[0]
    I = np.eye(n)

    def resolvent_norm_at(theta: float) -> float:
        z = complex(math.cos(theta), math.sin(theta))
        s = np.linalg.svd(z * I - A, compute_uv=False)
        return 1.0 / float(s[-1])

    thetas = 2.0 * np.pi * np.arange(grid_points) / grid_points
    vals = np.array([resolvent_norm_at(t) for t in thetas])
    k = int(np.argmax(vals))
    best = float(vals[k])

    # Golden-section refinement on the bracket around the grid maximum.
    span = 2.0 * np.pi / grid_points
    lo, hi = thetas[k] - span, thetas[k] + span
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = resolvent_norm_at(c), resolvent_norm_at(d)
    for _ in range(60):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = resolvent_norm_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = resolvent_norm_at(d)
    return max(best, fc, fd)
