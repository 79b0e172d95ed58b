"""Forward-partial-inverse splitting.

Solves ``0 in A x + B x + N_V x`` by an explicit step on ``B`` followed by a
proximal step on the partial inverse of ``gamma A`` with respect to ``V``.
The general routine finds, per iteration, a pair ``(p_n, q_n)`` with

    x_n - delta_n gamma P_V B x_n + gamma y_n = p_n + gamma q_n
    P_V q_n / delta_n + (Id-P_V) q_n  in  A(P_V p_n + (Id-P_V) p_n / delta_n)

and then relaxes ``x_{n+1} = x_n + lambda_n (P_V p_n - x_n)``,
``y_{n+1} = y_n + lambda_n ((Id-P_V) q_n - y_n)``.  Solving that subproblem
is not explicit in general; a user oracle covers varying ``delta_n``, and the
library ships the closed form for ``delta_n = 1`` where the pair is produced
by the resolvent of ``A`` itself.  On the auxiliary variable
``r_n = x_n + gamma y_n`` the routine is exactly a forward-backward step on
the partial inverse, which the implementation asserts per iteration on the
closed-form path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .km import (CONVERGED, DIVERGED, MAX_ITERS, DEFAULT_MAX_ITERS,
                 DEFAULT_TOL, IterationRow, as_relaxation)
from .fdr import PrimalDualResult, fdr_solve
from .spaces import as_vector

__all__ = [
    "DEFAULT_EPSILON",
    "StepSchedule",
    "ScaledResolventOracle",
    "OracleError",
    "EquivalenceReport",
    "constant_steps",
    "as_steps",
    "closed_form_oracle",
    "fpi_solve",
    "fpi_explicit_solve",
    "equivalence_harness",
]

DEFAULT_EPSILON = 1e-3


class OracleError(RuntimeError):
    """A user Step-1 oracle returned a pair violating its defining conditions."""


class StepSchedule:
    """Sequence of proximal scalings ``delta_n`` for the partial-inverse step.

    Admissible values lie in ``[epsilon, 2*beta/gamma - epsilon]`` for some
    ``epsilon in ]0, max(1, beta/gamma)[``; the bounds are audited on a prefix
    once ``gamma`` and ``beta`` are known.
    """

    __slots__ = ("generator", "epsilon", "constant_value", "label")

    def __init__(self, generator, epsilon=DEFAULT_EPSILON, constant_value=None, label=""):
        self.generator = generator
        self.epsilon = float(epsilon)
        self.constant_value = constant_value
        self.label = label

    def __call__(self, n):
        return float(self.generator(n))

    def validate(self, gamma, beta, prefix=64):
        eps = self.epsilon
        if not 0.0 < eps < max(1.0, beta / gamma):
            raise ValueError(
                f"epsilon must lie in ]0, max(1, beta/gamma)[ = "
                f"]0, {max(1.0, beta / gamma)}[; got {eps}"
            )
        hi = 2.0 * beta / gamma - eps
        if eps > hi:
            raise ValueError(
                f"empty step range: [epsilon, 2*beta/gamma - epsilon] = [{eps}, {hi}]"
            )
        for n in range(prefix):
            d = self(n)
            if not eps <= d <= hi:
                raise ValueError(
                    f"step value {d} at n={n} outside admissible range "
                    f"[epsilon, 2*beta/gamma - epsilon] = [{eps}, {hi}]"
                )


def constant_steps(value, epsilon=DEFAULT_EPSILON):
    """Constant schedule ``delta_n = value``."""
    value = float(value)
    return StepSchedule(lambda n: value, epsilon=epsilon, constant_value=value,
                        label=f"constant({value})")


def as_steps(value, epsilon=DEFAULT_EPSILON):
    if isinstance(value, StepSchedule):
        return value
    return constant_steps(value, epsilon)


@dataclass(frozen=True)
class ScaledResolventOracle:
    """Step-1 solver: ``solve_step1(x, y, delta, gamma) -> (p, q)``.

    The pair must satisfy the sum identity
    ``x - delta*gamma*P_V B x + gamma*y = p + gamma*q`` and the scaled
    inclusion of the partial-inverse step; both are verified per iteration
    through the resolvent of ``A`` whenever a user oracle is in play.
    """
    solve_step1: object


def closed_form_oracle(prob):
    """Built-in Step-1 solver for ``delta = 1``: with
    ``s = x - gamma P_V B x + gamma y``, take ``p = J_{gamma A} s`` and
    ``q = (s - p)/gamma``."""
    A, B, V = prob.A, prob.B, prob.V

    def solve_step1(x, y, delta, gamma):
        if abs(delta - 1.0) > 1e-12:
            raise ValueError(
                "the built-in Step 1 closed form only covers delta = 1; "
                "supply a ScaledResolventOracle for varying steps"
            )
        s = x - gamma * V(B(x)) + gamma * y
        p = A.resolve(gamma, s)
        q = (s - p) / gamma
        return p, q

    return ScaledResolventOracle(solve_step1)


def _check_memberships(V, x0, y0, tol=1e-9):
    inner = V.inner
    vx = inner.norm(x0 - V(x0))
    if vx > tol * (1.0 + inner.norm(x0)):
        raise ValueError(f"x0 must lie in the subspace (violation {vx:.3e})")
    vy = inner.norm(V(y0))
    if vy > tol * (1.0 + inner.norm(y0)):
        raise ValueError(f"y0 must lie in the orthogonal complement (violation {vy:.3e})")


def fpi_solve(prob, gamma=None, steps=1.0, relaxation=1.0, oracle=None,
              x0=None, y0=None, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
              epsilon=DEFAULT_EPSILON, oracle_tol=1e-9, log_every=1,
              trace=False, objective=None, check_fb_identity=True):
    """Solve the inclusion by the forward-partial-inverse routine.

    Parameters
    ----------
    prob : InclusionProblem
    gamma : float, optional
        Any positive proximal parameter (defaults to ``beta``); the step
        schedule must fit inside ``[epsilon, 2*beta/gamma - epsilon]``.
    steps : float or StepSchedule
        Scalings ``delta_n``.  The built-in Step-1 closed form requires
        ``delta_n = 1``; any other schedule needs a user ``oracle``.
    relaxation : float or RelaxationSchedule
        Relaxations ``lambda_n`` in ``[epsilon, 1]``.
    oracle : ScaledResolventOracle, optional
        User Step-1 solver.  Its output is verified each iteration (sum
        identity plus the scaled inclusion, via the resolvent residual of
        ``A``); violations above ``oracle_tol`` abort with
        :class:`OracleError`.
    x0, y0 : array_like, optional
        Starting points; ``x0`` must lie in the subspace and ``y0`` in its
        orthogonal complement (both default to the origin).
    tol, max_iters, log_every, trace, objective : see ``fdr_solve``.
    check_fb_identity : bool
        On the closed-form path, assert per iteration that
        ``r_n = x_n + gamma y_n`` follows the forward-backward recursion on
        the partial inverse (a bookkeeping identity of the routine, used as
        a cross-check, not as an alternative code path).

    Returns
    -------
    PrimalDualResult
    """
    A, B, V = prob.A, prob.B, prob.V
    dim = prob.dim
    inner = V.inner
    beta = prob.beta
    gamma = beta if gamma is None else float(gamma)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    step_sched = as_steps(steps, epsilon)
    step_sched.validate(gamma, beta)
    relax = as_relaxation(relaxation)
    relax.validate_closed(step_sched.epsilon, 1.0)
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if log_every < 1:
        raise ValueError("log_every must be at least 1")

    user_oracle = oracle is not None
    if not user_oracle:
        if step_sched.constant_value is None or step_sched.constant_value != 1.0:
            raise ValueError(
                "varying or non-unit step schedules require a user "
                "ScaledResolventOracle; the built-in closed form covers delta = 1 only"
            )
        oracle = closed_form_oracle(prob)

    x = np.zeros(dim) if x0 is None else as_vector(x0, dim).copy()
    y = np.zeros(dim) if y0 is None else as_vector(y0, dim).copy()
    _check_memberships(V, x, y)

    rows = []
    fw_vectors = []
    xy_trace = [] if trace else None
    membership = 0.0
    status = MAX_ITERS
    iterations = 0
    residual = float("inf")
    prev_x = None
    prev_y = None

    for n in range(max_iters + 1):
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            status = DIVERGED
            iterations = n
            if prev_x is not None:
                x, y = prev_x, prev_y
            break
        delta = step_sched(n)
        Bx = B(x)
        PBx = V(Bx)
        target = x - delta * gamma * PBx + gamma * y
        if user_oracle:
            p, q = oracle.solve_step1(x, y, delta, gamma)
            sum_gap = inner.norm(target - (p + gamma * q))
            u = V(p) + V.complement(p) / delta
            w = V(q) / delta + V.complement(q)
            inclusion_gap = inner.norm(u - A.resolve(1.0, u + w))
            if (sum_gap > oracle_tol * (1.0 + inner.norm(target))
                    or inclusion_gap > oracle_tol * (1.0 + inner.norm(u))):
                raise OracleError(
                    f"Step 1 oracle residuals too large at iteration {n}: "
                    f"sum identity {sum_gap:.3e}, scaled inclusion {inclusion_gap:.3e}"
                )
        else:
            # delta = 1 here; target is exactly the closed form's argument
            p = A.resolve(gamma, target)
            q = (target - p) / gamma
        Pp = V(p)
        q_perp = q - V(q)
        rx = Pp - x
        ry = q_perp - y
        residual = float(np.sqrt(inner.norm(rx) ** 2 + (gamma * inner.norm(ry)) ** 2))

        lam = relax(n)
        converged = np.isfinite(residual) and residual <= tol
        terminal = converged or n == max_iters or not np.isfinite(residual)
        if trace:
            xy_trace.append((x.copy(), y.copy()))
        if n % log_every == 0 or terminal:
            dx = inner.norm(x - prev_x) if prev_x is not None else 0.0
            dy = inner.norm(y - prev_y) if prev_y is not None else 0.0
            obj = float(objective(x)) if objective is not None else None
            rows.append(IterationRow(n, lam, residual, dx, dy, obj))
            fw_vectors.append(PBx.copy())
            vx = inner.norm(x - V(x)) / (1.0 + inner.norm(x))
            vy = inner.norm(V(y)) / (1.0 + inner.norm(y))
            membership = max(membership, vx, vy)
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
        prev_x, prev_y = x, y
        x_next = x + lam * rx
        y_next = y + lam * ry
        if check_fb_identity and not user_oracle:
            # forward-backward view on r = x + gamma*y; p is J_{gamma A}(target)
            r = x + gamma * y
            fb_point = Pp + V.complement(target - p)
            r_next = r + lam * (fb_point - r)
            drift = inner.norm((x_next + gamma * y_next) - r_next)
            if drift > 1e-9 * (1.0 + inner.norm(r)):
                raise RuntimeError(
                    f"internal forward-backward identity violated at n={n}: "
                    f"drift {drift:.3e}"
                )
        x, y = x_next, y_next

    fw_final = V(B(x))
    forward_gap = [inner.norm(v - fw_final) for v in fw_vectors]
    return PrimalDualResult(x=x, y=y, status=status, iterations=iterations,
                            history=rows, inclusion_residual=residual,
                            forward_gap=forward_gap,
                            membership_violation=membership, trace=xy_trace)


def fpi_explicit_solve(prob, gamma=None, relaxation=1.0, x0=None, y0=None,
                       tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
                       epsilon=DEFAULT_EPSILON, log_every=1, trace=False,
                       objective=None):
    """Explicit unit-step forward-partial-inverse routine.

    Implements literally

        s_n = x_n - gamma P_V B x_n + gamma y_n
        p_n = J_{gamma A} s_n
        y_{n+1} = y_n + (lambda_n / gamma)(P_V p_n - p_n)
        x_{n+1} = x_n + lambda_n (P_V p_n - x_n)

    for ``gamma in ]0, 2*beta[`` and relaxations in ``[epsilon, 1]``.  With
    ``V`` the whole space this collapses to the forward-backward iteration
    ``x_{n+1} = x_n + lambda_n (J_{gamma A}(x_n - gamma B x_n) - x_n)``.
    """
    A, B, V = prob.A, prob.B, prob.V
    dim = prob.dim
    inner = V.inner
    gamma = prob.beta if gamma is None else float(gamma)
    prob.check_gamma(gamma)
    relax = as_relaxation(relaxation)
    relax.validate_closed(epsilon, 1.0)
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if log_every < 1:
        raise ValueError("log_every must be at least 1")

    x = np.zeros(dim) if x0 is None else as_vector(x0, dim).copy()
    y = np.zeros(dim) if y0 is None else as_vector(y0, dim).copy()
    _check_memberships(V, x, y)

    rows = []
    fw_vectors = []
    xy_trace = [] if trace else None
    membership = 0.0
    status = MAX_ITERS
    iterations = 0
    residual = float("inf")
    prev_x = None
    prev_y = None

    for n in range(max_iters + 1):
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            status = DIVERGED
            iterations = n
            if prev_x is not None:
                x, y = prev_x, prev_y
            break
        Bx = B(x)
        PBx = V(Bx)
        s = x - gamma * PBx + gamma * y
        p = A.resolve(gamma, s)
        Pp = V(p)
        rx = Pp - x
        rp = Pp - p
        residual = float(np.sqrt(inner.norm(rx) ** 2 + inner.norm(rp) ** 2))

        lam = relax(n)
        converged = np.isfinite(residual) and residual <= tol
        terminal = converged or n == max_iters or not np.isfinite(residual)
        if trace:
            xy_trace.append((x.copy(), y.copy()))
        if n % log_every == 0 or terminal:
            dx = inner.norm(x - prev_x) if prev_x is not None else 0.0
            dy = inner.norm(y - prev_y) if prev_y is not None else 0.0
            obj = float(objective(x)) if objective is not None else None
            rows.append(IterationRow(n, lam, residual, dx, dy, obj))
            fw_vectors.append(PBx.copy())
            vx = inner.norm(x - V(x)) / (1.0 + inner.norm(x))
            vy = inner.norm(V(y)) / (1.0 + inner.norm(y))
            membership = max(membership, vx, vy)
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
        prev_x, prev_y = x, y
        y = y + (lam / gamma) * rp
        x = x + lam * rx

    fw_final = V(B(x))
    forward_gap = [inner.norm(v - fw_final) for v in fw_vectors]
    return PrimalDualResult(x=x, y=y, status=status, iterations=iterations,
                            history=rows, inclusion_residual=residual,
                            forward_gap=forward_gap,
                            membership_violation=membership, trace=xy_trace)


@dataclass(frozen=True)
class EquivalenceReport:
    max_deviation: float
    deviations: list
    iterations: int


def equivalence_harness(prob, gamma=None, relaxation=1.0, x0=None, y0=None,
                        n_iters=200, fdr_y0=None):
    """Run the Douglas-Rachford and partial-inverse forms side by side.

    Error-free, unit step, matched initialization (the DR form starts from
    ``z0 = x0 - gamma*y0``): the two iterate sequences coincide; the report
    carries ``max_n ||x_n^1 - x_n^2|| + ||y_n^1 - y_n^2||`` over
    ``n <= n_iters``.  Passing a different ``fdr_y0`` deliberately mismatches
    the initializations (negative control).
    """
    dim = prob.dim
    inner = prob.V.inner
    gamma = prob.beta if gamma is None else float(gamma)
    x0 = np.zeros(dim) if x0 is None else as_vector(x0, dim)
    y0 = np.zeros(dim) if y0 is None else as_vector(y0, dim)
    y0_dr = y0 if fdr_y0 is None else as_vector(fdr_y0, dim)
    z0 = x0 - gamma * y0_dr

    r1 = fdr_solve(prob, gamma=gamma, relaxation=relaxation, z0=z0,
                   tol=-1.0, max_iters=n_iters, trace=True)
    r2 = fpi_explicit_solve(prob, gamma=gamma, relaxation=relaxation,
                            x0=x0, y0=y0, tol=-1.0, max_iters=n_iters,
                            trace=True)
    deviations = [
        inner.norm(x1 - x2) + inner.norm(y1 - y2)
        for (x1, y1), (x2, y2) in zip(r1.trace, r2.trace)
    ]
    return EquivalenceReport(max(deviations), deviations, n_iters)
