import numpy as np
import pytest

from mflq import LqSystem
from mflq.harness import load_builtin


@pytest.fixture(scope="session")
def scalar_system():
    """1-d benchmark: a=0.9, b=1, m=1, n=0.1, w=1 (unstable-ish open loop is not
    needed; the 200x initial policy is visibly suboptimal here)."""
    return LqSystem(A=[[0.9]], B=[[1.0]], M=[[1.0]], N=[[0.1]], W=[[1.0]])


@pytest.fixture(scope="session")
def two_dim_system():
    """2-d stable benchmark used for the LSTD consistency suite."""
    return LqSystem(
        A=[[0.8, 0.1], [0.0, 0.7]],
        B=[[1.0, 0.0], [0.0, 1.0]],
        M=[[1.0, 0.0], [0.0, 1.0]],
        N=[[0.5, 0.0], [0.0, 0.5]],
        W=[[1.0, 0.0], [0.0, 1.0]],
    )


@pytest.fixture(scope="session")
def dean_system():
    system, sigma = load_builtin("dean2017")
    return system, sigma * np.eye(system.d)


@pytest.fixture(scope="session")
def lewis_system():
    system, sigma = load_builtin("lewis-power")
    return system, sigma * np.eye(system.d)


def random_stable_matrix(rng, n, rho_max=0.95):
    G = rng.normal(size=(n, n))
    target = rng.uniform(0.1, rho_max)
    return G * (target / max(1e-12, np.max(np.abs(np.linalg.eigvals(G)))))


def random_spd(rng, n, scale=1.0):
    S = rng.normal(size=(n, n))
    return scale * (S @ S.T + 0.1 * np.eye(n))
