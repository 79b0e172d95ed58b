"""Product-space reduction for sums of finitely many monotone operators.

``0 in sum_i A_i x + B x`` is rewritten over the m-fold product of the base
space, weighted blockwise, as an inclusion against the diagonal (consensus)
subspace: the lifted operator resolves blockwise with per-block parameters
``gamma / w_i``, the lifted forward map applies ``B`` to every block, and the
consensus projector replaces each block by the weighted mean.  The module
runs both the thin lifted adapters onto the base solvers and the direct
parallel loops; the two paths are cross-checked by the test surface.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fdr import InclusionProblem, fdr_solve
from .fpi import DEFAULT_EPSILON, fpi_explicit_solve
from .km import (CONVERGED, DIVERGED, MAX_ITERS, DEFAULT_MAX_ITERS,
                 DEFAULT_TOL, ErrorSchedule, IterationRow, as_relaxation)
from .operators import CocoerciveMap, ResolventFamily, zero_cocoercive
from .spaces import InnerProduct, SubspaceProjector, as_vector

__all__ = [
    "ProductSpace",
    "ProductProblem",
    "ProductSolveResult",
    "lift",
    "unlift",
    "consensus_projector",
    "sum_splitting_solve",
    "sum_splitting_via_fdr",
    "sum_splitting_pi",
    "sum_splitting_pi_via_fpi",
    "parallel_dr2",
]

DEFAULT_SCALED_GAMMA_CAP = 1e12


def _warn_scaled_gamma(gamma, weights, cap=DEFAULT_SCALED_GAMMA_CAP):
    worst = float(gamma / np.min(weights))
    if worst > cap:
        warnings.warn(
            f"scaled resolvent parameter gamma/w_i reaches {worst:.3e}, beyond "
            f"the cap {cap:.3e}; results may be inaccurate",
            RuntimeWarning,
        )


def _check_weights(weights, m):
    if weights is None:
        return np.full(m, 1.0 / m)
    w = np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise ValueError(f"expected {m} weights, got shape {w.shape}")
    if np.any(w <= 0.0) or (m > 1 and np.any(w >= 1.0)):
        raise ValueError("each weight must lie in ]0, 1[")
    if abs(float(w.sum()) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1 within 1e-12, got {w.sum()!r}")
    return w


class ProductSpace:
    """m-fold product of R^base_dim with block weights summing to one.

    Lifted vectors are stored flat (length ``m * base_dim``); the ambient
    inner product weights every block, so ``lift`` is an isometry of the base
    space onto the diagonal.
    """

    __slots__ = ("m", "base_dim", "weights", "inner")

    def __init__(self, m, base_dim, weights=None):
        self.m = int(m)
        self.base_dim = int(base_dim)
        if self.m < 1 or self.base_dim < 1:
            raise ValueError("m and base_dim must be positive")
        self.weights = _check_weights(weights, self.m)
        self.inner = InnerProduct(self.m * self.base_dim,
                                  np.repeat(self.weights, self.base_dim))

    @property
    def dim(self):
        return self.m * self.base_dim

    def split(self, X):
        return np.asarray(X, dtype=float).reshape(self.m, self.base_dim)

    def lift(self, x):
        x = as_vector(x, self.base_dim)
        return np.tile(x, self.m)

    def weighted_mean(self, X):
        return self.weights @ self.split(X)

    def diagonal_spread(self, X):
        """Largest deviation of any block from the weighted mean (0 on the diagonal)."""
        blocks = self.split(X)
        mean = self.weights @ blocks
        return float(np.max(np.abs(blocks - mean)))

    def unlift(self, X, tol=1e-9):
        """Base-space point of a diagonal lifted vector; rejects off-diagonal input."""
        blocks = self.split(X)
        mean = self.weights @ blocks
        spread = float(np.max(np.abs(blocks - mean)))
        if spread > tol * (1.0 + float(np.max(np.abs(mean), initial=0.0))):
            raise ValueError(
                f"lifted vector is not diagonal: block spread {spread:.3e} exceeds tolerance"
            )
        return mean

    def consensus_projector(self):
        """Projector onto the diagonal: every block becomes the weighted mean."""
        def apply(X):
            return np.tile(self.weights @ X.reshape(self.m, self.base_dim), self.m)

        return SubspaceProjector(apply, self.dim, self.inner, label="consensus")

    def lift_resolvent(self, blocks, cap=DEFAULT_SCALED_GAMMA_CAP):
        """Blockwise resolvent of the weighted product operator.

        Block i resolves with parameter ``gamma / w_i``; parameters beyond
        ``cap`` (tiny weights) trigger a warning since the scaled solve may
        lose accuracy.
        """
        blocks = list(blocks)
        w = self.weights

        def res(gamma, X):
            _warn_scaled_gamma(gamma, w, cap)
            parts = np.empty((self.m, self.base_dim))
            rows = X.reshape(self.m, self.base_dim)
            for i in range(self.m):
                parts[i] = blocks[i].resolve(gamma / w[i], rows[i])
            return parts.reshape(-1)

        return ResolventFamily(res, self.dim, label="product")

    def lift_cocoercive(self, B):
        """Apply ``B`` to every block; the cocoercivity constant is preserved."""
        def func(X):
            parts = np.empty((self.m, self.base_dim))
            blocks = X.reshape(self.m, self.base_dim)
            for i in range(self.m):
                parts[i] = B(blocks[i])
            return parts.reshape(-1)

        return CocoerciveMap(func, B.beta, self.dim, label=f"lifted({B.label})")

    def lift_error_schedule(self, sched):
        """Lift a base-space error sequence onto the diagonal."""
        if sched is None:
            return None
        return ErrorSchedule(lambda n: np.tile(sched(n), self.m), sched.bound,
                             sched.summable, self.dim,
                             label=f"lifted({sched.label})", zero=sched.is_zero)

    def stack_error_schedules(self, scheds):
        """Stack per-block error sequences into one lifted sequence."""
        if scheds is None or all(s is None for s in scheds):
            return None
        scheds = list(scheds)
        if len(scheds) != self.m:
            raise ValueError(f"expected {self.m} per-block schedules, got {len(scheds)}")
        w = self.weights
        zeros = np.zeros(self.base_dim)

        def gen(n):
            return np.concatenate([zeros if s is None else s(n) for s in scheds])

        def bound(n):
            return float(np.sqrt(sum(
                w[i] * (0.0 if s is None else s.bound(n)) ** 2
                for i, s in enumerate(scheds)
            )))

        summable = all(s is None or s.summable for s in scheds)
        zero = all(s is None or s.is_zero for s in scheds)
        return ErrorSchedule(gen, bound, summable, self.dim, label="stacked", zero=zero)


def lift(x, m):
    """Copy a base point into every block of the product space."""
    x = as_vector(x)
    return np.tile(x, int(m))


def unlift(X, m, weights=None, tol=1e-9):
    """Inverse of :func:`lift` on diagonal vectors; off-diagonal input is rejected."""
    X = np.asarray(X, dtype=float)
    m = int(m)
    if X.ndim != 1 or X.shape[0] % m != 0:
        raise ValueError(f"cannot split shape {X.shape} into {m} blocks")
    space = ProductSpace(m, X.shape[0] // m, weights)
    return space.unlift(X, tol=tol)


def consensus_projector(weights, m, base_dim):
    """Weighted consensus projector on the flat product space."""
    return ProductSpace(m, base_dim, weights).consensus_projector()


class ProductProblem:
    """Data for ``0 in sum_i A_i x + B x`` with block weights.

    ``B`` defaults to the zero map with ``beta = 1``; weights default to the
    uniform ``1/m``.
    """

    __slots__ = ("blocks", "B", "space")

    def __init__(self, blocks, B=None, weights=None):
        self.blocks = list(blocks)
        if not self.blocks:
            raise ValueError("at least one operator block is required")
        base_dim = self.blocks[0].dim
        for A in self.blocks:
            if A.dim != base_dim:
                raise ValueError("all operator blocks must share the base dimension")
        self.B = zero_cocoercive(base_dim) if B is None else B
        if self.B.dim != base_dim:
            raise ValueError("forward map dimension mismatch")
        self.space = ProductSpace(len(self.blocks), base_dim, weights)

    @property
    def m(self):
        return self.space.m

    @property
    def base_dim(self):
        return self.space.base_dim

    @property
    def weights(self):
        return self.space.weights

    @property
    def beta(self):
        return self.B.beta

    def lifted(self):
        """The equivalent subspace inclusion on the weighted product space."""
        space = self.space
        return InclusionProblem(space.lift_resolvent(self.blocks),
                                space.lift_cocoercive(self.B),
                                space.consensus_projector())


@dataclass
class ProductSolveResult:
    """Base-space outcome of a product-space run.

    ``certificate_residual`` combines the per-block resolvent residuals of
    the final inclusion decomposition with the residual of the assembled sum.
    """
    final: np.ndarray
    status: str
    iterations: int
    history: list = field(default_factory=list)
    certificate_residual: float = float("inf")
    block_residuals: np.ndarray | None = None
    sum_residual: float | None = None
    spread: float | None = None
    duals: np.ndarray | None = None
    trace: list | None = None


def _certificate_from_blocks(prob, x, U):
    """Certificate pieces from block elements ``U[i] in A_i(p_i ~ x)``:
    per-block resolvent residuals ``||x - J_{A_i}(x + U_i)||`` and the sum
    residual ``||sum_i U_i + B x||``."""
    block_res = np.array([
        float(np.linalg.norm(x - A.resolve(1.0, x + U[i])))
        for i, A in enumerate(prob.blocks)
    ])
    sum_res = float(np.linalg.norm(U.sum(axis=0) + prob.B(x)))
    return block_res, sum_res


def sum_splitting_solve(prob, gamma=None, relaxation=1.0, a_errors=None,
                        b_errors=None, z0=None, tol=DEFAULT_TOL,
                        max_iters=DEFAULT_MAX_ITERS, log_every=1, trace=False,
                        objective=None):
    """Direct parallel loop for ``0 in sum_i A_i x + B x``.

    Per iteration, with ``x_n`` the weighted mean of the blocks,

        s_{i,n} = 2 x_n - z_{i,n} - gamma (B x_n + a_n)
        p_{i,n} = J_{(gamma/w_i) A_i} s_{i,n} + b_{i,n}
        z_{i,n+1} = z_{i,n} + lambda_n (p_{i,n} - x_n)

    Parameters mirror ``fdr_solve``; ``b_errors`` is a per-block list.  The
    run is the lifted Douglas-Rachford iteration written blockwise, and
    ``sum_splitting_via_fdr`` executes the same reduction through the lifted
    adapter for cross-checking.

    Returns a base-space :class:`ProductSolveResult`; on convergence the
    certificate assembles the block inclusions ``w_i q_i in A_i x`` and their
    sum against ``-B x``.
    """
    space = prob.space
    m, d, w = prob.m, prob.base_dim, prob.weights
    beta = prob.beta
    gamma = beta if gamma is None else float(gamma)
    if not 0.0 < gamma < 2.0 * beta:
        raise ValueError(
            f"gamma must lie in ]0, 2*beta[ = ]0, {2.0 * beta}[; got {gamma}"
        )
    alpha = max(2.0 / 3.0, 2.0 * gamma / (gamma + 2.0 * beta))
    relax = as_relaxation(relaxation)
    relax.validate_open(alpha)
    if a_errors is not None:
        if a_errors.dim != d:
            raise ValueError("a_errors must live in the base space")
        a_errors.validate()
    if b_errors is not None:
        b_errors = list(b_errors)
        if len(b_errors) != m:
            raise ValueError(f"expected {m} per-block error schedules, got {len(b_errors)}")
        for e in b_errors:
            if e is not None:
                if e.dim != d:
                    raise ValueError("b_errors must live in the base space")
                e.validate()
    else:
        b_errors = [None] * m
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if log_every < 1:
        raise ValueError("log_every must be at least 1")

    if z0 is None:
        Z = np.zeros((m, d))
    else:
        Z = np.asarray(z0, dtype=float).reshape(m, d).copy()
    _warn_scaled_gamma(gamma, w)

    rows = []
    zt = [] if trace else None
    status = MAX_ITERS
    iterations = 0
    residual = float("inf")
    x = w @ Z
    prev_x = None

    for n in range(max_iters + 1):
        if not np.all(np.isfinite(Z)):
            status = DIVERGED
            iterations = n
            break
        x = w @ Z
        Bx = prob.B(x)
        a_active = a_errors is not None and a_errors.active(n)
        forward = Bx + a_errors(n) if a_active else Bx
        base = 2.0 * x - gamma * forward
        P = np.empty((m, d))
        for i in range(m):
            P[i] = prob.blocks[i].resolve(gamma / w[i], base - Z[i])
        b_active = any(e is not None and e.active(n) for e in b_errors)
        if a_active or b_active:
            base_clean = 2.0 * x - gamma * Bx
            P_clean = np.empty((m, d))
            for i in range(m):
                P_clean[i] = prob.blocks[i].resolve(gamma / w[i], base_clean - Z[i])
        else:
            P_clean = P
        P_err = P.copy() if b_active else P
        if b_active:
            for i, e in enumerate(b_errors):
                if e is not None and e.active(n):
                    P_err[i] = P_err[i] + e(n)

        residual = float(np.sqrt(np.sum(w * np.sum((P_clean - x) ** 2, axis=1))))
        lam = relax(n)
        converged = np.isfinite(residual) and residual <= tol
        terminal = converged or n == max_iters or not np.isfinite(residual)
        if trace:
            zt.append((x.copy(), Z.copy()))
        if n % log_every == 0 or terminal:
            dx = float(np.linalg.norm(x - prev_x)) if prev_x is not None else 0.0
            obj = float(objective(x)) if objective is not None else None
            rows.append(IterationRow(n, lam, residual, dx, None, obj))
        if not np.isfinite(residual):
            status = DIVERGED
            iterations = n
            break
        if converged:
            status = CONVERGED
            iterations = n
            break
        if n == max_iters:
            iterations = n
            break
        prev_x = x
        Z = Z + lam * (P_err - x)

    # assemble the final certificate from an exact (error-free) block step
    Bx = prob.B(x)
    base_clean = 2.0 * x - gamma * Bx
    U = np.empty((m, d))
    spread = 0.0
    for i in range(m):
        s_i = base_clean - Z[i]
        p_i = prob.blocks[i].resolve(gamma / w[i], s_i)
        U[i] = w[i] * (s_i - p_i) / gamma
        spread = max(spread, float(np.linalg.norm(p_i - x)))
    block_res, sum_res = _certificate_from_blocks(prob, x, U)
    cert = max(float(block_res.max()) if m else 0.0, sum_res)
    return ProductSolveResult(final=x, status=status, iterations=iterations,
                              history=rows, certificate_residual=cert,
                              block_residuals=block_res, sum_residual=sum_res,
                              spread=spread, trace=zt)


def sum_splitting_via_fdr(prob, gamma=None, relaxation=1.0, a_errors=None,
                          b_errors=None, z0=None, tol=DEFAULT_TOL,
                          max_iters=DEFAULT_MAX_ITERS, log_every=1,
                          trace=False, objective=None):
    """Lifted-adapter path: run ``fdr_solve`` on the product-space reduction.

    Produces the same iterates as :func:`sum_splitting_solve` (verified by
    the test surface to 1e-12); kept as an independent route through the
    generic solver.
    """
    space = prob.space
    lifted = prob.lifted()
    a_lift = space.lift_error_schedule(a_errors)
    b_lift = space.stack_error_schedules(b_errors)
    if z0 is None:
        z0_flat = None
    else:
        z0_flat = np.asarray(z0, dtype=float).reshape(space.m, space.base_dim).reshape(-1)
    obj_lift = None
    if objective is not None:
        obj_lift = lambda X: objective(space.weighted_mean(X))
    res = fdr_solve(lifted, gamma=gamma, relaxation=relaxation,
                    a_errors=a_lift, b_errors=b_lift, z0=z0_flat, tol=tol,
                    max_iters=max_iters, log_every=log_every, trace=trace,
                    objective=obj_lift)
    x = space.weighted_mean(res.x)
    zt = None
    if res.trace is not None:
        g = prob.beta if gamma is None else float(gamma)
        zt = [(space.weighted_mean(xl), space.split(xl - g * yl).copy())
              for xl, yl in res.trace]
    # final blocks of the lifted run: z = x_l - gamma*y_l
    g = prob.beta if gamma is None else float(gamma)
    Z = space.split(res.x - g * res.y)
    Bx = prob.B(x)
    base_clean = 2.0 * x - g * Bx
    U = np.empty((space.m, space.base_dim))
    spread = 0.0
    for i in range(space.m):
        s_i = base_clean - Z[i]
        p_i = prob.blocks[i].resolve(g / prob.weights[i], s_i)
        U[i] = prob.weights[i] * (s_i - p_i) / g
        spread = max(spread, float(np.linalg.norm(p_i - x)))
    block_res, sum_res = _certificate_from_blocks(prob, x, U)
    cert = max(float(block_res.max()), sum_res)
    return ProductSolveResult(final=x, status=res.status,
                              iterations=res.iterations, history=res.history,
                              certificate_residual=cert,
                              block_residuals=block_res, sum_residual=sum_res,
                              spread=spread, trace=zt)


def parallel_dr2(A1, A2, gamma=1.0, relaxation=1.0, b1_errors=None,
                 b2_errors=None, z0=None, tol=DEFAULT_TOL,
                 max_iters=DEFAULT_MAX_ITERS, log_every=1, trace=False):
    """Parallel two-operator resolvent splitting for ``0 in A_1 x + A_2 x``.

    Both resolvents are evaluated simultaneously (each on the other block):

        x_n = (z_{1,n} + z_{2,n}) / 2
        p_{1,n} = J_{2 gamma A_1}(z_{2,n}) + b_{1,n}
        p_{2,n} = J_{2 gamma A_2}(z_{1,n}) + b_{2,n}
        z_{i,n+1} = z_{i,n} + lambda_n (p_{i,n} - x_n)

    Any ``gamma > 0`` is admissible and the relaxations range over
    ``]0, 3/2[`` with ``sum_n lambda_n (3 - 2 lambda_n) = +inf``.
    """
    if A1.dim != A2.dim:
        raise ValueError("operator dimensions differ")
    d = A1.dim
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    relax = as_relaxation(relaxation)
    # alpha = 2/3 here, so the open range ]0, 1/alpha[ is exactly ]0, 3/2[
    try:
        relax.validate_open(2.0 / 3.0)
    except ValueError as e:
        raise ValueError(f"{e} (two-operator parallel splitting requires "
                         f"relaxations in ]0, 3/2[)") from None
    for e in (b1_errors, b2_errors):
        if e is not None:
            if e.dim != d:
                raise ValueError("error schedule dimension mismatch")
            e.validate()
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if log_every < 1:
        raise ValueError("log_every must be at least 1")

    if z0 is None:
        z1 = np.zeros(d)
        z2 = np.zeros(d)
    else:
        z1 = as_vector(z0[0], d).copy()
        z2 = as_vector(z0[1], d).copy()

    rows = []
    zt = [] if trace else None
    status = MAX_ITERS
    iterations = 0
    residual = float("inf")
    x = 0.5 * (z1 + z2)
    prev_x = None

    for n in range(max_iters + 1):
        if not (np.all(np.isfinite(z1)) and np.all(np.isfinite(z2))):
            status = DIVERGED
            iterations = n
            break
        x = 0.5 * (z1 + z2)
        p1 = A1.resolve(2.0 * gamma, z2)
        p2 = A2.resolve(2.0 * gamma, z1)
        b1_active = b1_errors is not None and b1_errors.active(n)
        b2_active = b2_errors is not None and b2_errors.active(n)
        p1_err = p1 + b1_errors(n) if b1_active else p1
        p2_err = p2 + b2_errors(n) if b2_active else p2

        residual = float(np.sqrt(0.5 * np.dot(p1 - x, p1 - x)
                                 + 0.5 * np.dot(p2 - x, p2 - x)))
        lam = relax(n)
        converged = np.isfinite(residual) and residual <= tol
        terminal = converged or n == max_iters or not np.isfinite(residual)
        if trace:
            zt.append((x.copy(), np.stack([z1, z2]).copy()))
        if n % log_every == 0 or terminal:
            dx = float(np.linalg.norm(x - prev_x)) if prev_x is not None else 0.0
            rows.append(IterationRow(n, lam, residual, dx, None, None))
        if not np.isfinite(residual):
            status = DIVERGED
            iterations = n
            break
        if converged:
            status = CONVERGED
            iterations = n
            break
        if n == max_iters:
            iterations = n
            break
        prev_x = x
        z1 = z1 + lam * (p1_err - x)
        z2 = z2 + lam * (p2_err - x)

    # certificate: u_i = (s_i - p_i)/(2 gamma) lies in A_i p_i with s_1 = z_2,
    # s_2 = z_1; at a solution the u_i sum to zero
    p1 = A1.resolve(2.0 * gamma, z2)
    p2 = A2.resolve(2.0 * gamma, z1)
    u1 = (z2 - p1) / (2.0 * gamma)
    u2 = (z1 - p2) / (2.0 * gamma)
    block_res = np.array([
        float(np.linalg.norm(x - A1.resolve(1.0, x + u1))),
        float(np.linalg.norm(x - A2.resolve(1.0, x + u2))),
    ])
    sum_res = float(np.linalg.norm(u1 + u2))
    spread = max(float(np.linalg.norm(p1 - x)), float(np.linalg.norm(p2 - x)))
    cert = max(float(block_res.max()), sum_res)
    return ProductSolveResult(final=x, status=status, iterations=iterations,
                              history=rows, certificate_residual=cert,
                              block_residuals=block_res, sum_residual=sum_res,
                              spread=spread, trace=zt)


def sum_splitting_pi(prob, gamma=None, relaxation=1.0, x0=None, y0=None,
                     tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
                     epsilon=DEFAULT_EPSILON, log_every=1, trace=False,
                     objective=None):
    """Partial-inverse form of the parallel sum splitting.

    Maintains a base primal ``x_n`` and per-block duals ``y_{i,n}`` with
    ``sum_i w_i y_{i,n} = 0``:

        s_{i,n} = x_n - gamma B x_n + gamma y_{i,n}
        p_{i,n} = J_{(gamma/w_i) A_i} s_{i,n}
        y_{i,n+1} = y_{i,n} + (lambda_n/gamma)(pbar_n - p_{i,n})
        x_{n+1} = x_n + lambda_n (pbar_n - x_n)

    with ``pbar_n`` the weighted mean of the ``p_{i,n}``.  Relaxations range
    over ``[epsilon, 1]``; with matching initialization the iterates coincide
    with :func:`sum_splitting_solve`.
    """
    m, d, w = prob.m, prob.base_dim, prob.weights
    beta = prob.beta
    gamma = beta if gamma is None else float(gamma)
    if not 0.0 < gamma < 2.0 * beta:
        raise ValueError(
            f"gamma must lie in ]0, 2*beta[ = ]0, {2.0 * beta}[; got {gamma}"
        )
    relax = as_relaxation(relaxation)
    relax.validate_closed(epsilon, 1.0)
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if log_every < 1:
        raise ValueError("log_every must be at least 1")

    x = np.zeros(d) if x0 is None else as_vector(x0, d).copy()
    if y0 is None:
        Y = np.zeros((m, d))
    else:
        Y = np.asarray(y0, dtype=float).reshape(m, d).copy()
        drift = float(np.linalg.norm(w @ Y))
        if drift > 1e-9 * (1.0 + float(np.abs(Y).max())):
            raise ValueError(
                f"dual initialization must satisfy sum_i w_i y_i = 0 "
                f"(violation {drift:.3e})"
            )
    _warn_scaled_gamma(gamma, w)

    rows = []
    zt = [] if trace else None
    status = MAX_ITERS
    iterations = 0
    residual = float("inf")
    prev_x = None

    for n in range(max_iters + 1):
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(Y))):
            status = DIVERGED
            iterations = n
            break
        Bx = prob.B(x)
        drive = x - gamma * Bx
        P = np.empty((m, d))
        for i in range(m):
            P[i] = prob.blocks[i].resolve(gamma / w[i], drive + gamma * Y[i])
        pbar = w @ P
        residual = float(np.sqrt(np.dot(pbar - x, pbar - x)
                                 + np.sum(w * np.sum((pbar - P) ** 2, axis=1))))
        lam = relax(n)
        converged = np.isfinite(residual) and residual <= tol
        terminal = converged or n == max_iters or not np.isfinite(residual)
        if trace:
            zt.append((x.copy(), Y.copy()))
        if n % log_every == 0 or terminal:
            dx = float(np.linalg.norm(x - prev_x)) if prev_x is not None else 0.0
            obj = float(objective(x)) if objective is not None else None
            rows.append(IterationRow(n, lam, residual, dx, None, obj))
        if not np.isfinite(residual):
            status = DIVERGED
            iterations = n
            break
        if converged:
            status = CONVERGED
            iterations = n
            break
        if n == max_iters:
            iterations = n
            break
        prev_x = x
        Y = Y + (lam / gamma) * (pbar - P)
        x = x + lam * (pbar - x)

    # certificate from the final block decomposition
    Bx = prob.B(x)
    drive = x - gamma * Bx
    U = np.empty((m, d))
    spread = 0.0
    for i in range(m):
        s_i = drive + gamma * Y[i]
        p_i = prob.blocks[i].resolve(gamma / w[i], s_i)
        U[i] = w[i] * (s_i - p_i) / gamma
        spread = max(spread, float(np.linalg.norm(p_i - x)))
    block_res, sum_res = _certificate_from_blocks(prob, x, U)
    cert = max(float(block_res.max()), sum_res)
    return ProductSolveResult(final=x, status=status, iterations=iterations,
                              history=rows, certificate_residual=cert,
                              block_residuals=block_res, sum_residual=sum_res,
                              spread=spread, duals=Y, trace=zt)


def sum_splitting_pi_via_fpi(prob, gamma=None, relaxation=1.0, x0=None,
                             y0=None, tol=DEFAULT_TOL,
                             max_iters=DEFAULT_MAX_ITERS,
                             epsilon=DEFAULT_EPSILON, log_every=1,
                             trace=False, objective=None):
    """Lifted-adapter path for :func:`sum_splitting_pi` through the explicit
    partial-inverse solver on the product space."""
    space = prob.space
    lifted = prob.lifted()
    x0_l = None if x0 is None else space.lift(x0)
    y0_l = None
    if y0 is not None:
        y0_l = np.asarray(y0, dtype=float).reshape(space.m, space.base_dim).reshape(-1)
    obj_lift = None
    if objective is not None:
        obj_lift = lambda X: objective(space.weighted_mean(X))
    res = fpi_explicit_solve(lifted, gamma=gamma, relaxation=relaxation,
                             x0=x0_l, y0=y0_l, tol=tol, max_iters=max_iters,
                             epsilon=epsilon, log_every=log_every, trace=trace,
                             objective=obj_lift)
    x = space.weighted_mean(res.x)
    Y = space.split(res.y)
    zt = None
    if res.trace is not None:
        zt = [(space.weighted_mean(xl), space.split(yl).copy())
              for xl, yl in res.trace]
    g = prob.beta if gamma is None else float(gamma)
    Bx = prob.B(x)
    drive = x - g * Bx
    U = np.empty((space.m, space.base_dim))
    spread = 0.0
    for i in range(space.m):
        s_i = drive + g * Y[i]
        p_i = prob.blocks[i].resolve(g / prob.weights[i], s_i)
        U[i] = prob.weights[i] * (s_i - p_i) / g
        spread = max(spread, float(np.linalg.norm(p_i - x)))
    block_res, sum_res = _certificate_from_blocks(prob, x, U)
    cert = max(float(block_res.max()), sum_res)
    return ProductSolveResult(final=x, status=res.status,
                              iterations=res.iterations, history=res.history,
                              certificate_residual=cert,
                              block_residuals=block_res, sum_residual=sum_res,
                              spread=spread, duals=Y, trace=zt)
