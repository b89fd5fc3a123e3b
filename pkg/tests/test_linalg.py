import numpy as np
import pytest
from numpy.testing import assert_allclose

from mflq.linalg import (
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
from mflq.env import greedy_policy, policy_value

from conftest import random_stable_matrix, random_spd


class TestSymVec:
    def test_identity(self):
        v = sym_vec(np.eye(2))
        assert_allclose(v, [1, 0, 0, 1])
        assert v @ v == 2.0  # = tr(I I)

    def test_inner_product_is_trace(self):
        X = np.array([[1.0, 2.0], [2.0, 3.0]])
        Y = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert sym_vec(X) @ sym_vec(Y) == pytest.approx(np.trace(X @ Y)) == pytest.approx(4.0)

    def test_zero(self):
        assert_allclose(sym_vec(np.zeros((3, 3))), np.zeros(9))

    def test_trace_identity_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            X, Y = random_spd(rng, n), random_spd(rng, n)
            assert sym_vec(X) @ sym_vec(Y) == pytest.approx(np.trace(X @ Y), rel=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            sym_vec(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSymMat:
    def test_identity_image(self):
        assert_allclose(sym_mat([1, 0, 0, 1]), np.eye(2))

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            X = random_spd(rng, n) - random_spd(rng, n)
            assert_allclose(sym_mat(sym_vec(X)), X)

    def test_symmetrizes_asymmetric_image(self):
        assert_allclose(sym_mat([0, 1, 0, 0]), [[0, 0.5], [0.5, 0]])

    def test_non_square_length(self):
        with pytest.raises(ValueError):
            sym_mat(np.arange(5.0))


class TestSolveLyapunov:
    def test_zero_dynamics(self):
        W = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert_allclose(solve_lyapunov(np.zeros((2, 2)), W), W)

    def test_scalar_geometric_series(self):
        X = solve_lyapunov(np.array([[0.5]]), np.array([[1.0]]))
        assert_allclose(X, [[4.0 / 3.0]])

    def test_matches_truncated_series(self):
        rng = np.random.default_rng(2)
        Gamma = random_stable_matrix(rng, 4, rho_max=0.9)
        Q = random_spd(rng, 4)
        X = solve_lyapunov(Gamma, Q)
        series = np.zeros((4, 4))
        P = np.eye(4)
        for _ in range(200):
            series += P @ Q @ P.T
            P = Gamma @ P
        assert np.linalg.norm(X - series, "fro") <= 1e-8

    def test_residual_on_random_stable_systems(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            Gamma = random_stable_matrix(rng, n)
            Q = random_spd(rng, n)
            X = solve_lyapunov(Gamma, Q)
            res = np.linalg.norm(X - Gamma @ X @ Gamma.T - Q, "fro")
            assert res <= 1e-10 * max(1.0, np.linalg.norm(Q, "fro"))

    def test_unstable_rejected(self):
        with pytest.raises(InstabilityError):
            solve_lyapunov(np.eye(2), np.eye(2))

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            solve_lyapunov(np.zeros((33, 33)), np.eye(33))


class TestOptimalController:
    def test_uncontrollable_rejected(self):
        with pytest.raises(ValueError):
            optimal_controller(np.eye(2) * 0.5, np.zeros((2, 1)), np.eye(2), np.eye(1))

    def test_scalar_no_dynamics(self):
        K, P = optimal_controller(np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]))
        assert_allclose(K, [[0.0]], atol=1e-12)
        assert_allclose(P, [[1.0]], atol=1e-12)

    def test_greedy_fixed_point(self, scalar_system, two_dim_system, dean_system):
        for sys in (scalar_system, two_dim_system, dean_system[0]):
            K_star, _ = optimal_controller(sys.A, sys.B, sys.M, sys.N)
            G, _, _ = policy_value(sys, K_star)
            assert np.max(np.abs(greedy_policy(G, sys.n) - K_star)) <= 1e-6
            assert spectral_radius(sys.closed_loop(K_star)) < 1.0

    def test_matches_scipy_dare(self):
        from scipy.linalg import solve_discrete_are

        rng = np.random.default_rng(4)
        for _ in range(10):
            n, d = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            A = rng.normal(size=(n, n))
            B = rng.normal(size=(n, d))
            M, N = random_spd(rng, n), random_spd(rng, d)
            try:
                K, P = optimal_controller(A, B, M, N)
            except ValueError:
                continue  # uncontrollable draw
            P_ref = solve_discrete_are(A, B, M, N)
            assert_allclose(P, P_ref, rtol=1e-8, atol=1e-8)


class TestPsdProject:
    def test_already_feasible_unchanged(self):
        X = np.diag([3.0, 2.0])
        assert_allclose(psd_project(X, np.eye(2)), X)

    def test_zero_to_floor(self):
        assert_allclose(psd_project(np.zeros((2, 2)), np.eye(2)), np.eye(2))

    def test_eigen_clip(self):
        assert_allclose(psd_project(np.diag([2.0, -1.0]), np.zeros((2, 2))), np.diag([2.0, 0.0]))

    def test_idempotent_and_floor_respected(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(1, 6))
            X = rng.normal(size=(n, n))
            X = 0.5 * (X + X.T)
            F = random_spd(rng, n, scale=0.5)
            Y = psd_project(X, F)
            assert np.linalg.eigvalsh(Y - F)[0] >= -1e-10
            assert_allclose(psd_project(Y, F), Y, atol=1e-10)

    def test_non_expansive_toward_feasible_points(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            n = int(rng.integers(1, 5))
            F = random_spd(rng, n, scale=0.3)
            G = F + random_spd(rng, n)  # satisfies G >= F
            X = rng.normal(size=(n, n))
            X = 0.5 * (X + X.T)
            Y = psd_project(X, F)
            assert np.linalg.norm(Y - G, "fro") <= np.linalg.norm(X - G, "fro") + 1e-12


class TestPinvSolve:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        assert_allclose(pinv_solve(np.eye(3), b), b)

    def test_zero_matrix_min_norm(self):
        assert_allclose(pinv_solve(np.zeros((2, 2)), np.array([1.0, 1.0])), np.zeros(2))

    def test_rank_one(self):
        A = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert_allclose(pinv_solve(A, np.array([2.0, 3.0])), [2.0, 0.0])


class TestSpectralRadius:
    def test_examples(self):
        assert spectral_radius(np.eye(3)) == pytest.approx(1.0)
        assert spectral_radius(np.zeros((2, 2))) == pytest.approx(0.0)
        # char poly z^2 + 0.25 -> |z| = 0.5
        assert spectral_radius(np.array([[0.0, 1.0], [-0.25, 0.0]])) == pytest.approx(0.5)


class TestHinfResolventNorm:
    def test_zero_matrix(self):
        assert hinf_resolvent_norm(np.zeros((2, 2))) == pytest.approx(1.0)

    def test_scalar(self):
        assert hinf_resolvent_norm(np.array([[0.5]])) == pytest.approx(2.0, rel=1e-9)

    def test_blockwise_scalar(self):
        assert hinf_resolvent_norm(np.diag([0.5, -0.5])) == pytest.approx(2.0, rel=1e-9)

    def test_at_least_endpoint_values(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(1, 5))
            A = random_stable_matrix(rng, n)
            val = hinf_resolvent_norm(A)
            for z in (1.0, -1.0):
                s = np.linalg.svd(z * np.eye(n) - A, compute_uv=False)
                assert val >= 1.0 / s[-1] - 1e-9

    def test_unstable_rejected(self):
        with pytest.raises(InstabilityError):
            hinf_resolvent_norm(np.eye(2) * 1.1)
