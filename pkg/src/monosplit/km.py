"""Relaxed fixed-point engine for compositions of averaged operators.

Iterates ``z_{n+1} = z_n + lambda_n (T_1(T_2(... T_m z_n + e_{m,n} ...)
+ e_{2,n}) + e_{1,n} - z_n)`` with per-operator error injection.  The
relaxation parameters may range over ``]0, 1/alpha[`` where ``alpha`` is the
averagedness constant of the composition, provided the relaxation sum
diverges and the errors are summable against the relaxations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spaces import InnerProduct, as_vector

__all__ = [
    "CONVERGED",
    "MAX_ITERS",
    "DIVERGED",
    "IterationRow",
    "SolveResult",
    "RelaxationSchedule",
    "ErrorSchedule",
    "composed_alpha",
    "constant_relaxation",
    "polynomial_relaxation",
    "as_relaxation",
    "no_errors",
    "geometric_errors",
    "harmonic_errors",
    "km_solve",
    "per_operator_decay_diagnostic",
]

CONVERGED = "converged"
MAX_ITERS = "max-iters"
DIVERGED = "diverged"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 100_000
VALIDATION_PREFIX = 64


def composed_alpha(alphas):
    """Averagedness constant of a composition of averaged operators.

    For operators with constants ``a_1, ..., a_m`` in (0, 1) the composition
    is ``alpha``-averaged with

        alpha = m * max(a_i) / (1 + (m - 1) * max(a_i)),

    which again lies in (0, 1).
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alphas must be a nonempty list")
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ValueError(f"every averagedness constant must lie in ]0, 1[, got {a}")
    m = len(alphas)
    amax = max(alphas)
    return m * amax / (1.0 + (m - 1) * amax)


class RelaxationSchedule:
    """Sequence of relaxation parameters ``lambda_n``.

    ``divergent_sum`` certifies ``sum_n lambda_n (1 - alpha lambda_n) = +inf``
    for every admissible ``alpha``; the built-in constructors set it from the
    closed form of the schedule.  Prefix admissibility is audited against the
    concrete ``alpha`` bound before a solver iterates.
    """

    __slots__ = ("generator", "alpha_bound", "divergent_sum", "label")

    def __init__(self, generator, alpha_bound=None, divergent_sum=True, label=""):
        self.generator = generator
        self.alpha_bound = alpha_bound
        self.divergent_sum = bool(divergent_sum)
        self.label = label

    def __call__(self, n):
        return float(self.generator(n))

    def validate_open(self, alpha, prefix=VALIDATION_PREFIX):
        """Reject unless ``lambda_n in ]0, 1/alpha[`` on the prefix and the
        divergence certificate holds; audits that the partial sums of
        ``lambda_n (1 - alpha lambda_n)`` are nondecreasing."""
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in ]0, 1[, got {alpha}")
        hi = 1.0 / alpha
        if not self.divergent_sum:
            raise ValueError(
                f"relaxation schedule '{self.label or 'custom'}' declares a convergent "
                "sum; sum_n lambda_n*(1 - alpha*lambda_n) must diverge"
            )
        partial = 0.0
        for n in range(prefix):
            lam = self(n)
            if not 0.0 < lam < hi:
                raise ValueError(
                    f"relaxation value {lam} at n={n} outside admissible range "
                    f"]0, 1/alpha[ = ]0, {hi}["
                )
            term = lam * (1.0 - alpha * lam)
            if term < 0.0:
                raise ValueError(f"negative divergence term at n={n}")
            partial += term

    def validate_closed(self, lo, hi, prefix=VALIDATION_PREFIX):
        """Reject unless ``lambda_n in [lo, hi]`` on the prefix."""
        for n in range(prefix):
            lam = self(n)
            if not lo <= lam <= hi:
                raise ValueError(
                    f"relaxation value {lam} at n={n} outside admissible range "
                    f"[{lo}, {hi}]"
                )


def constant_relaxation(value):
    """Constant schedule ``lambda_n = value``."""
    value = float(value)
    return RelaxationSchedule(lambda n: value, divergent_sum=True,
                              label=f"constant({value})")


def polynomial_relaxation(c, p):
    """Schedule ``lambda_n = c / (n + 1)^p``; the relaxation sum diverges iff p <= 1."""
    c = float(c)
    p = float(p)
    return RelaxationSchedule(lambda n: c / (n + 1) ** p, divergent_sum=(p <= 1.0),
                              label=f"polynomial(c={c}, p={p})")


def as_relaxation(value):
    """Coerce a float into a constant schedule; pass schedules through."""
    if isinstance(value, RelaxationSchedule):
        return value
    return constant_relaxation(value)


class ErrorSchedule:
    """Error sequence ``e_n`` with a declared norm bound and summability certificate.

    ``bound(n)`` must dominate ``||e_n||``; ``summable`` certifies that
    ``sum_n lambda_n * bound(n)`` is finite for the relaxations the schedule
    will be paired with.  The certificate is declared, and the bound is
    audited on a prefix before any iteration.
    """

    __slots__ = ("generator", "bound", "summable", "dim", "label", "_zero")

    def __init__(self, generator, bound, summable, dim, label="", zero=False):
        self.generator = generator
        self.bound = bound
        self.summable = bool(summable)
        self.dim = int(dim)
        self.label = label
        self._zero = bool(zero)

    def __call__(self, n):
        return np.asarray(self.generator(n), dtype=float)

    @property
    def is_zero(self):
        return self._zero

    def active(self, n):
        """Whether the error at iteration ``n`` can be nonzero."""
        return not self._zero and self.bound(n) != 0.0

    def validate(self, prefix=VALIDATION_PREFIX, norm=None):
        if norm is None:
            norm = np.linalg.norm
        if not self.summable:
            raise ValueError(
                f"error schedule '{self.label or 'custom'}' declares a non-summable "
                "pairing; sum_n lambda_n*||e_n|| must be finite"
            )
        for n in range(prefix):
            e = self(n)
            if e.shape != (self.dim,):
                raise ValueError(
                    f"error term at n={n} has shape {e.shape}, expected ({self.dim},)"
                )
            if norm(e) > self.bound(n) * (1.0 + 1e-9) + 1e-15:
                raise ValueError(
                    f"error norm {norm(e):.3e} at n={n} exceeds the declared bound "
                    f"{self.bound(n):.3e}"
                )


def no_errors(dim):
    """Error-free schedule."""
    z = np.zeros(dim)
    return ErrorSchedule(lambda n: z, lambda n: 0.0, True, dim, label="zero", zero=True)


def geometric_errors(dim, magnitude, rate, direction=None):
    """Errors ``e_n = magnitude * rate^n * u`` with ``||u|| = 1``.

    Summable against bounded relaxations iff ``0 <= rate < 1``.
    """
    magnitude = float(magnitude)
    rate = float(rate)
    if magnitude < 0.0 or rate < 0.0:
        raise ValueError("magnitude and rate must be nonnegative")
    if direction is None:
        u = np.ones(dim) / np.sqrt(dim)
    else:
        u = as_vector(direction, dim)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            raise ValueError("direction must be nonzero")
        u = u / nu
    return ErrorSchedule(lambda n: magnitude * rate ** n * u,
                         lambda n: magnitude * rate ** n,
                         summable=rate < 1.0, dim=dim,
                         label=f"geometric(r={rate})", zero=magnitude == 0.0)


def harmonic_errors(dim, magnitude, direction=None):
    """Errors ``e_n = magnitude / (n + 1) * u``: not summable against
    relaxations bounded away from zero, so the audit rejects the pairing."""
    magnitude = float(magnitude)
    if direction is None:
        u = np.ones(dim) / np.sqrt(dim)
    else:
        u = as_vector(direction, dim)
        u = u / np.linalg.norm(u)
    return ErrorSchedule(lambda n: magnitude / (n + 1) * u,
                         lambda n: magnitude / (n + 1),
                         summable=False, dim=dim, label="harmonic")


@dataclass(frozen=True)
class IterationRow:
    """One logged iteration.

    ``residual`` is the error-free fixed-point gap at iterate n; ``dx`` and
    ``dy`` measure the change from the previous iterate (0.0 at n = 0, and
    ``dy`` is None for single-variable runs).
    """
    n: int
    lam: float
    residual: float
    dx: float
    dy: float | None = None
    objective: float | None = None


@dataclass
class SolveResult:
    final: np.ndarray
    status: str
    iterations: int
    history: list = field(default_factory=list)
    trace: list | None = None


def km_solve(ops, relaxation=1.0, errors=None, z0=None, tol=DEFAULT_TOL,
             max_iters=DEFAULT_MAX_ITERS, log_every=1, trace=False, inner=None):
    """Run the errored relaxed fixed-point iteration on a composition.

    Parameters
    ----------
    ops : sequence of AveragedOperator
        Operators ``T_1, ..., T_m``; the iteration applies ``T_m`` first.
        All must share the same dimension.
    relaxation : float or RelaxationSchedule
        Relaxations ``lambda_n``; validated against ``]0, 1/alpha[`` where
        ``alpha`` is the composed averagedness constant.
    errors : sequence of (ErrorSchedule or None), optional
        Per-operator error sequences ``e_{i,n}``, outermost operator first.
        Every schedule must certify summability against the relaxations.
    z0 : array_like, optional
        Starting point (defaults to the origin).
    tol : float
        Stop when the error-free residual ``||T_1 ... T_m z_n - z_n||`` drops
        to ``tol``; a negative value disables the convergence test.
    max_iters : int
        Iteration budget; the history then holds at most ``max_iters + 1`` rows.
    log_every : int
        Thin the history to every k-th iteration (terminal rows always kept).
    trace : bool
        Record every iterate in ``result.trace``.
    inner : InnerProduct, optional
        Ambient inner product for all norms (uniform by default).

    Returns
    -------
    SolveResult
        Final point, status (converged / max-iters / diverged), and the
        logged history of (n, lambda_n, residual, step) rows.
    """
    ops = list(ops)
    if not ops:
        raise ValueError("ops must be a nonempty list of averaged operators")
    dim = ops[0].dim
    for T in ops:
        if T.dim != dim:
            raise ValueError("all operators must share the same dimension")
    m = len(ops)
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if log_every < 1:
        raise ValueError("log_every must be at least 1")

    alpha = composed_alpha([T.alpha for T in ops])
    relax = as_relaxation(relaxation)
    relax.validate_open(alpha)

    if errors is None:
        errors = [None] * m
    else:
        errors = list(errors)
        if len(errors) != m:
            raise ValueError(f"expected {m} error schedules, got {len(errors)}")
    inner = InnerProduct(dim) if inner is None else inner
    for e in errors:
        if e is not None:
            if e.dim != dim:
                raise ValueError("error schedule dimension mismatch")
            e.validate(norm=inner.norm)

    z = np.zeros(dim) if z0 is None else as_vector(z0, dim).copy()
    rows = []
    zs = [] if trace else None
    status = MAX_ITERS
    iterations = 0
    prev_z = z

    for n in range(max_iters + 1):
        if not np.all(np.isfinite(z)):
            status = DIVERGED
            z = prev_z
            iterations = n
            break
        if trace:
            zs.append(z.copy())

        active = any(e is not None and e.active(n) for e in errors)
        u = z
        for i in range(m - 1, -1, -1):
            u = ops[i](u)
            e = errors[i]
            if e is not None and e.active(n):
                u = u + e(n)
        if active:
            v = z
            for i in range(m - 1, -1, -1):
                v = ops[i](v)
        else:
            v = u

        residual = inner.norm(v - z)
        lam = relax(n)
        step = inner.norm(z - prev_z) if n > 0 else 0.0
        converged = np.isfinite(residual) and residual <= tol
        terminal = converged or n == max_iters or not np.isfinite(residual)
        if n % log_every == 0 or terminal:
            rows.append(IterationRow(n, lam, residual, step))
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
        prev_z = z
        z = z + lam * (u - z)

    return SolveResult(final=z, status=status, iterations=iterations,
                       history=rows, trace=zs)


def per_operator_decay_diagnostic(ops, result, relaxation=1.0, reference=None):
    """Diagnostic-only proxy for the per-operator decay sums.

    Accumulates ``sum_n lambda_n ||(Id - T_i) C_i z_n - (Id - T_i) C_i zbar||^2``
    with ``C_i = T_{i+1} ... T_m``, substituting the final iterate for the
    unknown limit ``zbar`` (or an explicit ``reference``).  Values are only
    meaningful on converged runs with a recorded trace.
    """
    if result.trace is None:
        raise ValueError("diagnostic requires a run with trace=True")
    ops = list(ops)
    m = len(ops)
    relax = as_relaxation(relaxation)
    zbar = result.trace[-1] if reference is None else np.asarray(reference, float)

    def chain_tail(i, z):
        u = z
        for j in range(m - 1, i, -1):
            u = ops[j](u)
        return u

    ref_tail = [chain_tail(i, zbar) for i in range(m)]
    ref_gap = [ref_tail[i] - ops[i](ref_tail[i]) for i in range(m)]
    totals = [0.0] * m
    for n, z in enumerate(result.trace):
        lam = relax(n)
        for i in range(m):
            t = chain_tail(i, z)
            gap = (t - ops[i](t)) - ref_gap[i]
            totals[i] += lam * float(np.dot(gap, gap))
    return totals
