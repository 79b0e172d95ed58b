import numpy as np
import pytest

from monosplit import matrix_projector


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_subspace_matrix(rng, dim, rank):
    """Dense orthogonal-projector matrix onto a random rank-dimensional subspace."""
    G = rng.standard_normal((dim, rank))
    Q, _ = np.linalg.qr(G)
    return Q @ Q.T


def random_subspace_projector(rng, dim, rank=None):
    if rank is None:
        rank = int(rng.integers(1, dim))
    return matrix_projector(random_subspace_matrix(rng, dim, rank))


def random_spd(rng, dim, lo=0.5, hi=3.0):
    """Symmetric positive definite matrix with eigenvalues in [lo, hi]."""
    G = rng.standard_normal((dim, dim))
    Q, _ = np.linalg.qr(G)
    eigs = rng.uniform(lo, hi, size=dim)
    return (Q * eigs) @ Q.T


def kkt_solution(Q, b, P):
    """Closed-form minimizer of x'Qx/2 - b'x over range(P), via a linear
    KKT solve on an orthonormal basis of the subspace (independent of the
    iterative solvers; the basis comes from the projector's spectrum)."""
    Q = np.asarray(Q, float)
    b = np.asarray(b, float)
    M = np.array([P(e) for e in np.eye(P.dim)]).T
    w, U = np.linalg.eigh(M)
    Z = U[:, w > 0.5]
    t = np.linalg.solve(Z.T @ Q @ Z, Z.T @ b)
    return Z @ t
