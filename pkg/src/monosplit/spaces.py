"""Finite-dimensional real Hilbert space primitives.

Vectors are plain 1-d numpy arrays.  The ambient geometry is carried by
:class:`InnerProduct` (uniform or diagonally weighted), and closed subspaces
are represented by their orthogonal projectors.  Everything here is a pure
function of its inputs; all objects are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InnerProduct",
    "SubspaceProjector",
    "ProjectorAudit",
    "as_vector",
    "identity_projector",
    "zero_projector",
    "zero_mean_projector",
    "span_projector",
    "matrix_projector",
    "project",
    "project_complement",
    "reflect_subspace",
    "audit_projector",
]


def as_vector(x, dim=None):
    """Coerce ``x`` to a finite 1-d float array, optionally checking its length.

    Scalars are promoted to vectors of length 1.  Non-finite coordinates are
    rejected: points handed to the solvers must be honest elements of R^n.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected length {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


class InnerProduct:
    """Diagonal inner product ``<x, y> = sum_k w_k x_k y_k``.

    With no weight vector the product is the uniform Euclidean one.  Weights
    must be strictly positive, which makes the form symmetric, bilinear and
    positive definite.
    """

    __slots__ = ("dim", "weights")

    def __init__(self, dim, weights=None):
        dim = int(dim)
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        if weights is None:
            self.weights = None
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (dim,):
                raise ValueError(f"weights must have shape ({dim},), got {w.shape}")
            if not np.all(w > 0):
                raise ValueError("inner product weights must be strictly positive")
            self.weights = w

    @property
    def is_uniform(self):
        return self.weights is None

    def dot(self, x, y):
        if self.weights is None:
            return float(np.dot(x, y))
        return float(np.dot(self.weights * x, y))

    def norm(self, x):
        return math.sqrt(max(self.dot(x, x), 0.0))

    def __repr__(self):
        kind = "uniform" if self.is_uniform else "weighted"
        return f"InnerProduct(dim={self.dim}, {kind})"


class SubspaceProjector:
    """Orthogonal projector onto a closed subspace of R^dim.

    ``apply`` must be linear, idempotent and self-adjoint with respect to
    ``inner``; :func:`audit_projector` samples those properties.  Projectors
    are supplied (as structured callables or dense matrices), never derived
    from spanning sets.
    """

    __slots__ = ("_apply", "dim", "inner", "label")

    def __init__(self, apply, dim, inner=None, label=""):
        self._apply = apply
        self.dim = int(dim)
        self.inner = InnerProduct(dim) if inner is None else inner
        if self.inner.dim != self.dim:
            raise ValueError("inner product dimension does not match the projector")
        self.label = label

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"dimension mismatch: projector acts on R^{self.dim}, got shape {x.shape}"
            )
        return self._apply(x)

    def complement(self, x):
        """Projection onto the orthogonal complement: ``x - P x``."""
        x = np.asarray(x, dtype=float)
        return x - self(x)

    def reflect(self, x):
        """Reflection through the subspace: ``2 P x - x``."""
        x = np.asarray(x, dtype=float)
        return 2.0 * self(x) - x

    def __repr__(self):
        tag = f" '{self.label}'" if self.label else ""
        return f"SubspaceProjector(dim={self.dim}{tag})"


def project(P, x):
    """Nearest point of the subspace of ``P`` to ``x``."""
    return P(x)


def project_complement(P, x):
    """Component of ``x`` orthogonal to the subspace of ``P``."""
    return P.complement(x)


def reflect_subspace(P, x):
    """Reflection of ``x`` through the subspace of ``P`` (an involution)."""
    return P.reflect(x)


def identity_projector(dim, inner=None):
    """Projector onto the whole space."""
    return SubspaceProjector(lambda x: x.copy(), dim, inner, label="identity")


def zero_projector(dim, inner=None):
    """Projector onto the trivial subspace {0}."""
    return SubspaceProjector(lambda x: np.zeros_like(x), dim, inner, label="zero")


def zero_mean_projector(dim):
    """Projector onto {x : sum_k x_k = 0} under the uniform inner product."""
    return SubspaceProjector(lambda x: x - x.mean(), dim, label="zero-mean")


def span_projector(v, inner=None):
    """Rank-one projector onto the line spanned by ``v``."""
    v = as_vector(v)
    inner = InnerProduct(v.shape[0]) if inner is None else inner
    vv = inner.dot(v, v)
    if vv <= 0.0:
        raise ValueError("span vector must be nonzero")

    def apply(x):
        return v * (inner.dot(v, x) / vv)

    return SubspaceProjector(apply, v.shape[0], inner, label="span")


def matrix_projector(M, inner=None, validate=True, tol=1e-8):
    """Projector given by a dense matrix.

    When ``validate`` is set the matrix is audited for idempotence,
    self-adjointness (w.r.t. ``inner``) and linearity on random samples and
    rejected if it fails.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"projector matrix must be square, got shape {M.shape}")
    P = SubspaceProjector(lambda x: M @ x, M.shape[0], inner, label="matrix")
    if validate:
        audit = audit_projector(P, samples=8, tol=tol)
        if not audit.passed:
            raise ValueError(f"matrix is not an orthogonal projector: {audit}")
    return P


@dataclass(frozen=True)
class ProjectorAudit:
    passed: bool
    worst_idempotency: float
    worst_self_adjointness: float
    worst_linearity: float


def audit_projector(P, samples=32, tol=1e-8, seed=0):
    """Sample the projector invariants on unit-scale points.

    Checks ``P(Px) = Px``, ``<Px, y> = <x, Py>`` and linearity, each within
    ``tol`` (absolute, default 1e-8), and reports the worst violations.
    """
    rng = np.random.default_rng(seed)
    worst_idem = worst_sym = worst_lin = 0.0
    for _ in range(samples):
        x = rng.standard_normal(P.dim)
        y = rng.standard_normal(P.dim)
        a = rng.standard_normal()
        Px = P(x)
        worst_idem = max(worst_idem, P.inner.norm(P(Px) - Px))
        worst_sym = max(worst_sym, abs(P.inner.dot(Px, y) - P.inner.dot(x, P(y))))
        worst_lin = max(worst_lin, P.inner.norm(P(a * x + y) - a * Px - P(y)))
    passed = max(worst_idem, worst_sym, worst_lin) <= tol
    return ProjectorAudit(passed, worst_idem, worst_sym, worst_lin)
