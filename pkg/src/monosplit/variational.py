"""Convex minimization over a subspace.

Minimizes ``f(x) + g(x)`` subject to ``x in V`` for a proper lsc convex
``f`` reached through its proximity operator and a differentiable convex
``g`` with Lipschitz gradient, by handing ``A = subdifferential of f`` and
``B = gradient of g`` to the subspace splitting solver.  A solution exists
whenever the optimality system ``0 in  df(x) + grad g(x) + N_V x`` has a
zero; establishing that (e.g. through interiority of ``dom f - V`` or shared
minimizers) is a user obligation which the library only probes heuristically.
"""

from __future__ import annotations

import warnings

import numpy as np

from .fdr import InclusionProblem, fdr_solve
from .km import DEFAULT_MAX_ITERS, DEFAULT_TOL
from .operators import CocoerciveMap, ResolventFamily, _CachedAffineSolve
from .spaces import as_vector

__all__ = [
    "ProxFunction",
    "SmoothFunction",
    "prox_l1",
    "prox_indicator_box",
    "l1_function",
    "box_function",
    "quadratic_function",
    "zero_function",
    "quadratic_smooth",
    "zero_smooth",
    "min_over_subspace",
    "advisory_existence_probe",
]


class ProxFunction:
    """Convex function accessed through ``prox_{gamma f}``.

    ``prox(gamma, x)`` must return the unique minimizer of
    ``f(.) + ||. - x||^2 / (2 gamma)``; the associated resolvent family is
    firmly nonexpansive.  ``value`` is optional and used only for diagnostics
    (the solvers never evaluate the function).
    """

    __slots__ = ("_prox", "dim", "value", "label")

    def __init__(self, prox, dim, value=None, label=""):
        self._prox = prox
        self.dim = int(dim)
        self.value = value
        self.label = label

    def prox(self, gamma, x):
        if not gamma > 0:
            raise ValueError(f"prox parameter must be positive, got {gamma}")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: expected ({self.dim},), got {x.shape}")
        return self._prox(gamma, x)

    def as_resolvent(self):
        """The subdifferential of ``f`` as a resolvent family (prox = resolvent)."""
        return ResolventFamily(self._prox, self.dim,
                               label=f"subdifferential({self.label or 'f'})")


class SmoothFunction:
    """Differentiable convex function with an L-Lipschitz gradient.

    The gradient is then cocoercive with constant ``1/L``, which is the
    certificate passed to the splitting solvers.
    """

    __slots__ = ("_grad", "lipschitz", "dim", "value", "label")

    def __init__(self, grad, lipschitz, dim, value=None, label=""):
        if not (np.isfinite(lipschitz) and lipschitz > 0):
            raise ValueError(f"lipschitz must be a positive finite number, got {lipschitz}")
        self._grad = grad
        self.lipschitz = float(lipschitz)
        self.dim = int(dim)
        self.value = value
        self.label = label

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: expected ({self.dim},), got {x.shape}")
        return self._grad(x)

    def as_cocoercive(self):
        return CocoerciveMap(self._grad, 1.0 / self.lipschitz, self.dim,
                             label=f"gradient({self.label or 'g'})")


def prox_l1(gamma, x):
    """Soft threshold: coordinatewise shrink toward zero by ``gamma``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)


def prox_indicator_box(lo, hi, gamma, x):
    """Clamp onto the box ``[lo, hi]``; independent of ``gamma``."""
    if not gamma > 0:
        raise ValueError(f"prox parameter must be positive, got {gamma}")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def l1_function(dim):
    """``f(x) = ||x||_1``."""
    return ProxFunction(lambda gamma, x: prox_l1(gamma, x), dim,
                        value=lambda x: float(np.abs(x).sum()), label="l1")


def box_function(lo, hi):
    """Indicator of the box ``[lo, hi]``; infinite bounds are allowed."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.ndim != 1 or hi.shape != lo.shape:
        raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise ValueError("box bounds must not be NaN")
    if np.any(lo > hi):
        raise ValueError("empty box: lo > hi in some coordinate")

    def value(x):
        return 0.0 if np.all((x >= lo - 1e-12) & (x <= hi + 1e-12)) else float("inf")

    return ProxFunction(lambda gamma, x: np.clip(x, lo, hi), lo.shape[0],
                        value=value, label="box-indicator")


def quadratic_function(Q, b=None, tol=1e-10):
    """``f(x) = x'Qx/2 - b'x`` for symmetric PSD ``Q``; prox solves
    ``(Id + gamma Q) z = x + gamma b`` with a factorization cached per gamma."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    dim = Q.shape[0]
    scale = max(1.0, float(np.abs(Q).max()))
    if float(np.abs(Q - Q.T).max()) > tol * scale:
        raise ValueError("Q must be symmetric")
    if float(np.linalg.eigvalsh(Q).min()) < -tol * scale:
        raise ValueError("Q must be positive semidefinite")
    b = np.zeros(dim) if b is None else as_vector(b, dim)
    cache = _CachedAffineSolve(Q)

    def value(x):
        return float(0.5 * x @ Q @ x - b @ x)

    return ProxFunction(lambda gamma, x: cache.solve(gamma, x + gamma * b), dim,
                        value=value, label="quadratic")


def zero_function(dim):
    """``f = 0``; the prox is the identity."""
    return ProxFunction(lambda gamma, x: x.copy(), dim,
                        value=lambda x: 0.0, label="zero")


def quadratic_smooth(Q, b=None, tol=1e-10):
    """``g(x) = x'Qx/2 - b'x`` with gradient ``Qx - b`` and ``L = lambda_max(Q)``."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    dim = Q.shape[0]
    scale = max(1.0, float(np.abs(Q).max()))
    if float(np.abs(Q - Q.T).max()) > tol * scale:
        raise ValueError("Q must be symmetric")
    eigs = np.linalg.eigvalsh(Q)
    if float(eigs.min()) < -tol * scale:
        raise ValueError("Q must be positive semidefinite")
    lam_max = float(eigs.max())
    if lam_max <= 0.0:
        raise ValueError("Q must have a positive largest eigenvalue; "
                         "use zero_smooth for a vanishing gradient")
    b = np.zeros(dim) if b is None else as_vector(b, dim)

    def value(x):
        return float(0.5 * x @ Q @ x - b @ x)

    return SmoothFunction(lambda x: Q @ x - b, lam_max, dim, value=value,
                          label="quadratic")


def zero_smooth(dim, lipschitz=1.0):
    """``g = 0``; the declared Lipschitz constant only sets the step range."""
    return SmoothFunction(lambda x: np.zeros_like(x), lipschitz, dim,
                          value=lambda x: 0.0, label="zero")


def min_over_subspace(f, g, V, gamma=None, relaxation=1.0, a_errors=None,
                      b_errors=None, z0=None, tol=DEFAULT_TOL,
                      max_iters=DEFAULT_MAX_ITERS, log_every=1, trace=False,
                      probe_existence=False):
    """Minimize ``f + g`` over the subspace of ``V``.

    Runs the forward-Douglas-Rachford solver with ``A`` the subdifferential
    of ``f`` (through its prox) and ``B`` the gradient of ``g``:

        x_n = P_V z_n
        y_n = (x_n - z_n) / gamma
        s_n = x_n - gamma P_V(grad g(x_n) + a_n) + gamma y_n
        p_n = prox_{gamma f} s_n + b_n
        z_{n+1} = z_n + lambda_n (p_n - x_n)

    ``gamma`` ranges over ``]0, 2/L[`` for the gradient's Lipschitz constant
    ``L``.  When both functions are evaluable the objective is recorded on
    logged rows.  Existence of a solution to the optimality system is a user
    obligation; ``probe_existence`` runs a non-blocking heuristic that warns
    if the problem looks unbounded below on the subspace.

    Returns the ``PrimalDualResult`` of the underlying run: on convergence
    ``x`` minimizes ``f + g`` over the subspace (fixed-point residual
    certificate at ``tol``).
    """
    if probe_existence:
        advisory_existence_probe(f, g, V)
    prob = InclusionProblem(f.as_resolvent(), g.as_cocoercive(), V)
    objective = None
    if f.value is not None and g.value is not None:
        objective = lambda x: float(f.value(x)) + float(g.value(x))
    return fdr_solve(prob, gamma=gamma, relaxation=relaxation,
                     a_errors=a_errors, b_errors=b_errors, z0=z0, tol=tol,
                     max_iters=max_iters, log_every=log_every, trace=trace,
                     objective=objective)


def advisory_existence_probe(f, g, V, seed=0, directions=8, radius=1e3):
    """Coarse unboundedness probe along subspace directions (advisory only).

    Samples directions in the subspace and compares objective values at the
    origin and at ``radius``; a marked decrease triggers a warning, nothing
    is ever raised.  Requires both functions to be evaluable; silently skips
    otherwise.  Returns True when no decrease was seen.
    """
    if f.value is None or g.value is None:
        return True
    rng = np.random.default_rng(seed)
    obj = lambda x: float(f.value(x)) + float(g.value(x))
    origin = obj(np.zeros(V.dim))
    ok = True
    for _ in range(directions):
        d = V(rng.standard_normal(V.dim))
        nd = np.linalg.norm(d)
        if nd == 0.0:
            continue
        d = d / nd
        for t in (radius, -radius):
            if obj(t * d) < origin - 1e-6 * (1.0 + abs(origin)):
                warnings.warn(
                    "objective decreases along a subspace direction at scale "
                    f"{radius:g}; the constrained problem may be unbounded below",
                    RuntimeWarning,
                )
                ok = False
                break
        if not ok:
            break
    return ok
