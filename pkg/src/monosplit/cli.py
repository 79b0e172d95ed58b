"""Batch harness: parse a JSON problem spec, run a solver, emit CSV.

The input is a JSON document with ``schema_version: 1`` selecting one of the
algorithms {fdr, fpi, fpi-explicit, km, product, dr2, variational, pi-sum}
and describing the operators, schedules, initialization and stopping rule
from the built-in constructors (field-by-field schema in the README).  All
validation errors are collected and reported together, each citing the
admissible range it violates, before any iteration runs.

Output: a CSV with the fixed columns ``n,lambda,residual,dx,dy,objective``
(one row per logged iteration) and a summary line on stdout.  Sequential
runs of the same spec and seed produce byte-identical CSV.

Exit codes: 0 converged, 2 iteration budget exhausted, 3 diverged,
64 invalid spec, 1 internal error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fdr, fpi, km, operators, productspace, spaces, variational

__all__ = [
    "SCHEMA_VERSION",
    "EXIT_CONVERGED",
    "EXIT_MAX_ITERS",
    "EXIT_DIVERGED",
    "EXIT_INVALID",
    "SpecValidationError",
    "ProblemSpec",
    "RunRecord",
    "parse_spec",
    "run",
    "emit_csv",
    "main",
]

SCHEMA_VERSION = 1
EXIT_CONVERGED = 0
EXIT_MAX_ITERS = 2
EXIT_DIVERGED = 3
EXIT_INVALID = 64
EXIT_ERROR = 1

_STATUS_CODES = {km.CONVERGED: EXIT_CONVERGED,
                 km.MAX_ITERS: EXIT_MAX_ITERS,
                 km.DIVERGED: EXIT_DIVERGED}

ALGORITHMS = ("fdr", "fpi", "fpi-explicit", "km", "product", "dr2",
              "variational", "pi-sum")


class SpecValidationError(ValueError):
    """Carries every validation error found in a problem spec."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ProblemSpec:
    """A fully validated problem description ready to run."""
    algorithm: str
    tol: float
    max_iters: int
    seed: int
    log_every: int
    launch: object
    raw: dict = field(repr=False, default_factory=dict)


@dataclass
class RunRecord:
    rows: list
    summary: dict


# ---------------------------------------------------------------------------
# descriptor readers (collect all errors, never raise until the end)
# ---------------------------------------------------------------------------

def _num(data, key, errors, path, default=None, required=False):
    if key not in data:
        if required:
            errors.append(f"{path}{key}: required field is missing")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{path}{key}: expected a number, got {v!r}")
        return default
    return float(v)


def _intval(data, key, errors, path, default=None, required=False, minimum=None):
    if key not in data:
        if required:
            errors.append(f"{path}{key}: required field is missing")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int):
        errors.append(f"{path}{key}: expected an integer, got {v!r}")
        return default
    if minimum is not None and v < minimum:
        errors.append(f"{path}{key}: must be >= {minimum}, got {v}")
        return default
    return v


def _vec(value, dim, errors, path):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{path}: expected a numeric vector")
        return None
    if dim is not None:
        v = np.broadcast_to(v, (dim,)).astype(float) if v.ndim == 0 else v
    if v.ndim != 1 or (dim is not None and v.shape[0] != dim):
        errors.append(f"{path}: expected a vector of length {dim}, got shape {v.shape}")
        return None
    if not np.all(np.isfinite(v)):
        errors.append(f"{path}: vector has non-finite entries")
        return None
    return v


def _mat(value, dim, errors, path):
    try:
        M = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{path}: expected a numeric matrix")
        return None
    if M.ndim != 2 or M.shape != (dim, dim):
        errors.append(f"{path}: expected a {dim}x{dim} matrix, got shape {M.shape}")
        return None
    return M


def _desc(data, key, errors, path, default=None, required=False):
    if key not in data:
        if required:
            errors.append(f"{path}{key}: required field is missing")
        return default
    v = data[key]
    if not isinstance(v, dict):
        errors.append(f"{path}{key}: expected an object with a 'kind' field")
        return default
    return v


_SUBSPACE_KINDS = ("identity", "zero", "zero_mean", "span", "matrix")


def _build_subspace(desc, dim, errors, path):
    kind = desc.get("kind")
    if kind == "identity":
        return spaces.identity_projector(dim)
    if kind == "zero":
        return spaces.zero_projector(dim)
    if kind == "zero_mean":
        return spaces.zero_mean_projector(dim)
    if kind == "span":
        v = _vec(desc.get("vector"), dim, errors, f"{path}.vector")
        if v is None:
            return None
        try:
            return spaces.span_projector(v)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "matrix":
        M = _mat(desc.get("rows"), dim, errors, f"{path}.rows")
        if M is None:
            return None
        try:
            return spaces.matrix_projector(M)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    errors.append(f"{path}.kind: unknown subspace kind {kind!r}; "
                  f"known kinds: {', '.join(_SUBSPACE_KINDS)}")
    return None


_RESOLVENT_KINDS = ("zero", "abs", "box", "linear", "normal_cone", "unstable")


def _build_resolvent(desc, dim, errors, path):
    kind = desc.get("kind")
    if kind == "zero":
        return operators.zero_operator(dim)
    if kind == "abs":
        center = None
        if "center" in desc:
            center = _vec(desc["center"], dim, errors, f"{path}.center")
            if center is None:
                return None
        return operators.subdifferential_abs(dim, center=center)
    if kind == "box":
        lo = _vec(desc.get("lo"), dim, errors, f"{path}.lo")
        hi = _vec(desc.get("hi"), dim, errors, f"{path}.hi")
        if lo is None or hi is None:
            return None
        try:
            return operators.normal_cone_box(lo, hi)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "linear":
        M = _mat(desc.get("M"), dim, errors, f"{path}.M")
        if M is None:
            return None
        b = None
        if "b" in desc:
            b = _vec(desc["b"], dim, errors, f"{path}.b")
            if b is None:
                return None
        try:
            return operators.linear_monotone(M, b)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "normal_cone":
        sub = _desc(desc, "subspace", errors, f"{path}.", required=True)
        if sub is None:
            return None
        P = _build_subspace(sub, dim, errors, f"{path}.subspace")
        if P is None:
            return None
        return operators.normal_cone_of_subspace(P)
    if kind == "unstable":
        # fault-injection hook: an expansive pseudo-resolvent that violates
        # nonexpansiveness so runs blow up and exercise divergence handling
        factor = _num(desc, "factor", errors, f"{path}.", default=1e6)
        return operators.ResolventFamily(lambda gamma, x: factor * x, dim,
                                         label="unstable")
    errors.append(f"{path}.kind: unknown operator kind {kind!r}; "
                  f"known kinds: {', '.join(_RESOLVENT_KINDS)}")
    return None


_COCOERCIVE_KINDS = ("zero", "identity", "affine_gradient")


def _build_cocoercive(desc, dim, errors, path):
    kind = desc.get("kind")
    if kind == "zero":
        beta = _num(desc, "beta", errors, f"{path}.", default=1.0)
        if beta is None or beta <= 0:
            errors.append(f"{path}.beta: must be positive")
            return None
        return operators.zero_cocoercive(dim, beta=beta)
    if kind == "identity":
        return operators.CocoerciveMap(lambda x: x.copy(), 1.0, dim, label="identity")
    if kind == "affine_gradient":
        Q = _mat(desc.get("Q"), dim, errors, f"{path}.Q")
        if Q is None:
            return None
        b = None
        if "b" in desc:
            b = _vec(desc["b"], dim, errors, f"{path}.b")
            if b is None:
                return None
        try:
            return operators.affine_gradient(Q, b)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    errors.append(f"{path}.kind: unknown forward-map kind {kind!r}; "
                  f"known kinds: {', '.join(_COCOERCIVE_KINDS)}")
    return None


_PROX_KINDS = ("l1", "box", "quadratic", "zero")


def _build_prox(desc, dim, errors, path):
    kind = desc.get("kind")
    if kind == "l1":
        return variational.l1_function(dim)
    if kind == "box":
        lo = _vec(desc.get("lo"), dim, errors, f"{path}.lo")
        hi = _vec(desc.get("hi"), dim, errors, f"{path}.hi")
        if lo is None or hi is None:
            return None
        try:
            return variational.box_function(lo, hi)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "quadratic":
        Q = _mat(desc.get("Q"), dim, errors, f"{path}.Q")
        if Q is None:
            return None
        b = None
        if "b" in desc:
            b = _vec(desc["b"], dim, errors, f"{path}.b")
            if b is None:
                return None
        try:
            return variational.quadratic_function(Q, b)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "zero":
        return variational.zero_function(dim)
    errors.append(f"{path}.kind: unknown prox kind {kind!r}; "
                  f"known kinds: {', '.join(_PROX_KINDS)}")
    return None


_SMOOTH_KINDS = ("quadratic", "zero")


def _build_smooth(desc, dim, errors, path):
    kind = desc.get("kind")
    if kind == "quadratic":
        Q = _mat(desc.get("Q"), dim, errors, f"{path}.Q")
        if Q is None:
            return None
        b = None
        if "b" in desc:
            b = _vec(desc["b"], dim, errors, f"{path}.b")
            if b is None:
                return None
        try:
            return variational.quadratic_smooth(Q, b)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "zero":
        lip = _num(desc, "lipschitz", errors, f"{path}.", default=1.0)
        try:
            return variational.zero_smooth(dim, lipschitz=lip)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    errors.append(f"{path}.kind: unknown smooth kind {kind!r}; "
                  f"known kinds: {', '.join(_SMOOTH_KINDS)}")
    return None


def _build_relaxation(desc, errors, path):
    if desc is None:
        return km.constant_relaxation(1.0)
    kind = desc.get("kind")
    if kind == "constant":
        value = _num(desc, "value", errors, f"{path}.", required=True)
        if value is None:
            return None
        return km.constant_relaxation(value)
    if kind == "polynomial":
        c = _num(desc, "c", errors, f"{path}.", required=True)
        p = _num(desc, "p", errors, f"{path}.", required=True)
        if c is None or p is None:
            return None
        return km.polynomial_relaxation(c, p)
    errors.append(f"{path}.kind: unknown relaxation kind {kind!r}; "
                  "known kinds: constant, polynomial")
    return None


def _build_steps(desc, errors, path):
    if desc is None:
        return fpi.constant_steps(1.0)
    kind = desc.get("kind")
    if kind == "constant":
        value = _num(desc, "value", errors, f"{path}.", required=True)
        if value is None:
            return None
        return fpi.constant_steps(value)
    errors.append(f"{path}.kind: unknown step kind {kind!r}; known kinds: constant")
    return None


def _build_error_schedule(desc, dim, errors, path):
    if desc is None:
        return None
    kind = desc.get("kind")
    if kind == "zero":
        return km.no_errors(dim)
    if kind == "geometric":
        magnitude = _num(desc, "magnitude", errors, f"{path}.", required=True)
        rate = _num(desc, "rate", errors, f"{path}.", required=True)
        direction = None
        if "direction" in desc:
            direction = _vec(desc["direction"], dim, errors, f"{path}.direction")
        if magnitude is None or rate is None:
            return None
        try:
            return km.geometric_errors(dim, magnitude, rate, direction)
        except ValueError as e:
            errors.append(f"{path}: {e}")
            return None
    if kind == "harmonic":
        magnitude = _num(desc, "magnitude", errors, f"{path}.", required=True)
        direction = None
        if "direction" in desc:
            direction = _vec(desc["direction"], dim, errors, f"{path}.direction")
        if magnitude is None:
            return None
        return km.harmonic_errors(dim, magnitude, direction)
    errors.append(f"{path}.kind: unknown error-schedule kind {kind!r}; "
                  "known kinds: zero, geometric, harmonic")
    return None


def _check_schedule(callable_, errors, what):
    """Run a library schedule validator, downgrading its exception to a
    collected message."""
    try:
        callable_()
    except ValueError as e:
        errors.append(f"{what}: {e}")


def _init_vector(desc, dim, errors, path, key="z"):
    """Returns a closure rng -> ndarray for a single-vector initialization."""
    if desc is None:
        return lambda rng: np.zeros(dim)
    kind = desc.get("kind")
    if kind == "zeros":
        return lambda rng: np.zeros(dim)
    if kind == "random":
        scale = _num(desc, "scale", errors, f"{path}.", default=1.0)
        return lambda rng: scale * rng.standard_normal(dim)
    if kind == "value":
        v = _vec(desc.get(key), dim, errors, f"{path}.{key}")
        if v is None:
            return None
        return lambda rng: v.copy()
    errors.append(f"{path}.kind: unknown init kind {kind!r}; "
                  "known kinds: zeros, random, value")
    return None


# ---------------------------------------------------------------------------
# per-algorithm builders: validate everything, return a launcher closure
# ---------------------------------------------------------------------------

def _build_fdr(data, errors, variational_mode=False):
    dim = _intval(data, "dim", errors, "", required=True, minimum=1)
    if dim is None:
        return None
    sub = _desc(data, "subspace", errors, "", required=True)
    V = _build_subspace(sub, dim, errors, "subspace") if sub else None

    if variational_mode:
        fdesc = _desc(data, "f", errors, "", required=True)
        gdesc = _desc(data, "g", errors, "", required=True)
        fobj = _build_prox(fdesc, dim, errors, "f") if fdesc else None
        gobj = _build_smooth(gdesc, dim, errors, "g") if gdesc else None
        A = fobj.as_resolvent() if fobj else None
        B = gobj.as_cocoercive() if gobj else None
        objective = None
        if fobj is not None and gobj is not None and fobj.value and gobj.value:
            objective = lambda x: float(fobj.value(x)) + float(gobj.value(x))
    else:
        adesc = _desc(data, "A", errors, "", required=True)
        bdesc = _desc(data, "B", errors, "", default={"kind": "zero", "beta": 1.0})
        A = _build_resolvent(adesc, dim, errors, "A") if adesc else None
        B = _build_cocoercive(bdesc, dim, errors, "B") if bdesc else None
        objective = None

    gamma = _num(data, "gamma", errors, "")
    relax = _build_relaxation(data.get("lambda"), errors, "lambda")
    errs = data.get("errors") or {}
    a_errors = _build_error_schedule(errs.get("a"), dim, errors, "errors.a")
    b_errors = _build_error_schedule(errs.get("b"), dim, errors, "errors.b")
    init = _init_vector(data.get("init"), dim, errors, "init", key="z")

    if B is not None:
        beta = B.beta
        if gamma is not None and not 0.0 < gamma < 2.0 * beta:
            errors.append(f"gamma: must lie in ]0, 2*beta[ = ]0, {2.0 * beta}[; "
                          f"got {gamma}")
        elif relax is not None:
            g = beta if gamma is None else gamma
            alpha = max(2.0 / 3.0, 2.0 * g / (g + 2.0 * beta))
            _check_schedule(lambda: relax.validate_open(alpha), errors, "lambda")
    for name, e in (("errors.a", a_errors), ("errors.b", b_errors)):
        if e is not None:
            _check_schedule(e.validate, errors, name)
    if errors or A is None or B is None or V is None or relax is None or init is None:
        return None

    prob = fdr.InclusionProblem(A, B, V)

    def launch(rng, tol, max_iters, log_every):
        return fdr.fdr_solve(prob, gamma=gamma, relaxation=relax,
                             a_errors=a_errors, b_errors=b_errors,
                             z0=init(rng), tol=tol, max_iters=max_iters,
                             log_every=log_every, objective=objective)

    return launch


def _build_fpi(data, errors, explicit=False):
    dim = _intval(data, "dim", errors, "", required=True, minimum=1)
    if dim is None:
        return None
    sub = _desc(data, "subspace", errors, "", required=True)
    V = _build_subspace(sub, dim, errors, "subspace") if sub else None
    adesc = _desc(data, "A", errors, "", required=True)
    bdesc = _desc(data, "B", errors, "", default={"kind": "zero", "beta": 1.0})
    A = _build_resolvent(adesc, dim, errors, "A") if adesc else None
    B = _build_cocoercive(bdesc, dim, errors, "B") if bdesc else None
    gamma = _num(data, "gamma", errors, "")
    relax = _build_relaxation(data.get("lambda"), errors, "lambda")
    steps = _build_steps(data.get("delta"), errors, "delta") if not explicit else None
    init = data.get("init") or {}
    x_init = _init_vector(init or None, dim, errors, "init", key="x")
    if x_init is not None and V is not None and init.get("kind") == "random":
        # a random start must still lie in the subspace
        raw_init = x_init
        x_init = lambda rng: V(raw_init(rng))
    y_init = lambda rng: np.zeros(dim)
    if init.get("kind") == "value" and "y" in init:
        yv = _vec(init.get("y"), dim, errors, "init.y")
        if yv is not None:
            y_init = lambda rng: yv.copy()
    if init.get("kind") == "value" and V is not None:
        xv = init.get("x")
        if xv is not None:
            xv = np.asarray(xv, dtype=float)
            if xv.shape == (dim,) and \
                    np.linalg.norm(xv - V(xv)) > 1e-9 * (1 + np.linalg.norm(xv)):
                errors.append("init.x: must lie in the subspace")
        yv = init.get("y")
        if yv is not None:
            yv = np.asarray(yv, dtype=float)
            if yv.shape == (dim,) and \
                    np.linalg.norm(V(yv)) > 1e-9 * (1 + np.linalg.norm(yv)):
                errors.append("init.y: must lie in the orthogonal complement "
                              "of the subspace")

    gamma_ok = True
    if B is not None and gamma is not None:
        beta = B.beta
        if explicit and not 0.0 < gamma < 2.0 * beta:
            errors.append(f"gamma: must lie in ]0, 2*beta[ = ]0, {2.0 * beta}[; "
                          f"got {gamma}")
            gamma_ok = False
        if not explicit and gamma <= 0:
            errors.append(f"gamma: must be positive, got {gamma}")
            gamma_ok = False
    eps = fpi.DEFAULT_EPSILON
    if relax is not None:
        _check_schedule(lambda: relax.validate_closed(eps, 1.0), errors, "lambda")
    if not explicit and steps is not None and B is not None and gamma_ok:
        g = B.beta if gamma is None else gamma
        _check_schedule(lambda: steps.validate(g, B.beta), errors, "delta")
        if steps.constant_value != 1.0:
            errors.append("delta: the harness only runs the built-in delta = 1 "
                          "closed form; varying steps need the library oracle API")
    if errors or A is None or B is None or V is None or relax is None or x_init is None:
        return None

    prob = fdr.InclusionProblem(A, B, V)

    if explicit:
        def launch(rng, tol, max_iters, log_every):
            return fpi.fpi_explicit_solve(prob, gamma=gamma, relaxation=relax,
                                          x0=x_init(rng), y0=y_init(rng),
                                          tol=tol, max_iters=max_iters,
                                          log_every=log_every)
    else:
        def launch(rng, tol, max_iters, log_every):
            return fpi.fpi_solve(prob, gamma=gamma, steps=steps, relaxation=relax,
                                 x0=x_init(rng), y0=y_init(rng), tol=tol,
                                 max_iters=max_iters, log_every=log_every)

    return launch


def _build_km(data, errors):
    dim = _intval(data, "dim", errors, "", required=True, minimum=1)
    if dim is None:
        return None
    ops_desc = data.get("ops")
    if not isinstance(ops_desc, list) or not ops_desc:
        errors.append("ops: expected a nonempty list of operator descriptors")
        return None
    ops = []
    for i, desc in enumerate(ops_desc):
        if not isinstance(desc, dict):
            errors.append(f"ops[{i}]: expected an object")
            continue
        ref = desc.get("type")
        if ref == "projector":
            P = _build_subspace(desc, dim, errors, f"ops[{i}]")
            if P is not None:
                ops.append(operators.AveragedOperator(P, 0.5, dim, label="projection"))
        elif ref == "resolvent":
            g = _num(desc, "gamma", errors, f"ops[{i}].", default=1.0)
            A = _build_resolvent(desc, dim, errors, f"ops[{i}]")
            if A is not None and g is not None:
                if g <= 0:
                    errors.append(f"ops[{i}].gamma: must be positive, got {g}")
                else:
                    ops.append(operators.AveragedOperator(
                        lambda x, A=A, g=g: A.resolve(g, x), 0.5, dim,
                        label="resolvent"))
        else:
            errors.append(f"ops[{i}].type: unknown operator type {ref!r}; "
                          "known types: projector, resolvent")
    relax = _build_relaxation(data.get("lambda"), errors, "lambda")
    err_descs = data.get("errors")
    err_schedules = None
    if err_descs is not None:
        if not isinstance(err_descs, list) or len(err_descs) != len(ops_desc):
            errors.append(f"errors: expected a list of {len(ops_desc)} schedules")
        else:
            err_schedules = [
                _build_error_schedule(d, dim, errors, f"errors[{i}]")
                for i, d in enumerate(err_descs)
            ]
    init = _init_vector(data.get("init"), dim, errors, "init", key="z")
    if len(ops) == len(ops_desc) and relax is not None:
        alpha = km.composed_alpha([T.alpha for T in ops])
        _check_schedule(lambda: relax.validate_open(alpha), errors, "lambda")
    if err_schedules:
        for i, e in enumerate(err_schedules):
            if e is not None:
                _check_schedule(e.validate, errors, f"errors[{i}]")
    if errors or len(ops) != len(ops_desc) or relax is None or init is None:
        return None

    def launch(rng, tol, max_iters, log_every):
        return km.km_solve(ops, relaxation=relax, errors=err_schedules,
                           z0=init(rng), tol=tol, max_iters=max_iters,
                           log_every=log_every)

    return launch


def _build_product(data, errors, pi_form=False):
    dim = _intval(data, "dim", errors, "", required=True, minimum=1)
    if dim is None:
        return None
    blocks_desc = data.get("blocks")
    if not isinstance(blocks_desc, list) or not blocks_desc:
        errors.append("blocks: expected a nonempty list of operator descriptors")
        return None
    blocks = []
    for i, desc in enumerate(blocks_desc):
        if not isinstance(desc, dict):
            errors.append(f"blocks[{i}]: expected an object")
            continue
        A = _build_resolvent(desc, dim, errors, f"blocks[{i}]")
        if A is not None:
            blocks.append(A)
    bdesc = _desc(data, "B", errors, "", default={"kind": "zero", "beta": 1.0})
    B = _build_cocoercive(bdesc, dim, errors, "B") if bdesc else None
    weights = None
    if "weights" in data:
        weights = _vec(data["weights"], len(blocks_desc), errors, "weights")
    gamma = _num(data, "gamma", errors, "")
    relax = _build_relaxation(data.get("lambda"), errors, "lambda")
    m = len(blocks_desc)

    errs = data.get("errors") or {}
    a_errors = _build_error_schedule(errs.get("a"), dim, errors, "errors.a")
    b_list = None
    if "b" in errs and errs["b"] is not None:
        if not isinstance(errs["b"], list) or len(errs["b"]) != m:
            errors.append(f"errors.b: expected a list of {m} schedules")
        else:
            b_list = [_build_error_schedule(d, dim, errors, f"errors.b[{i}]")
                      for i, d in enumerate(errs["b"])]

    if B is not None:
        beta = B.beta
        if gamma is not None and not 0.0 < gamma < 2.0 * beta:
            errors.append(f"gamma: must lie in ]0, 2*beta[ = ]0, {2.0 * beta}[; "
                          f"got {gamma}")
        elif relax is not None:
            g = beta if gamma is None else gamma
            if pi_form:
                _check_schedule(lambda: relax.validate_closed(fpi.DEFAULT_EPSILON, 1.0),
                                errors, "lambda")
            else:
                alpha = max(2.0 / 3.0, 2.0 * g / (g + 2.0 * beta))
                _check_schedule(lambda: relax.validate_open(alpha), errors, "lambda")
    if a_errors is not None:
        _check_schedule(a_errors.validate, errors, "errors.a")
    if b_list:
        for i, e in enumerate(b_list):
            if e is not None:
                _check_schedule(e.validate, errors, f"errors.b[{i}]")
    if errors or len(blocks) != m or B is None or relax is None:
        return None
    try:
        prob = productspace.ProductProblem(blocks, B, weights)
    except ValueError as e:
        errors.append(f"weights: {e}")
        return None

    init = data.get("init") or {}
    if pi_form:
        x_init = _init_vector(init or None, dim, errors, "init", key="x")
        if errors or x_init is None:
            return None

        def launch(rng, tol, max_iters, log_every):
            return productspace.sum_splitting_pi(prob, gamma=gamma,
                                                 relaxation=relax,
                                                 x0=x_init(rng), tol=tol,
                                                 max_iters=max_iters,
                                                 log_every=log_every)
    else:
        kind = init.get("kind", "zeros") if init else "zeros"
        if kind == "zeros":
            z_init = lambda rng: np.zeros((m, dim))
        elif kind == "random":
            scale = _num(init, "scale", errors, "init.", default=1.0)
            z_init = lambda rng: scale * rng.standard_normal((m, dim))
        elif kind == "value":
            zval = init.get("z")
            try:
                Z = np.asarray(zval, dtype=float).reshape(m, dim)
            except (TypeError, ValueError):
                errors.append(f"init.z: expected {m} vectors of length {dim}")
                return None
            z_init = lambda rng: Z.copy()
        else:
            errors.append(f"init.kind: unknown init kind {kind!r}")
            return None
        if errors:
            return None

        def launch(rng, tol, max_iters, log_every):
            return productspace.sum_splitting_solve(prob, gamma=gamma,
                                                    relaxation=relax,
                                                    a_errors=a_errors,
                                                    b_errors=b_list,
                                                    z0=z_init(rng), tol=tol,
                                                    max_iters=max_iters,
                                                    log_every=log_every)

    return launch


def _build_dr2(data, errors):
    dim = _intval(data, "dim", errors, "", required=True, minimum=1)
    if dim is None:
        return None
    a1 = _desc(data, "A1", errors, "", required=True)
    a2 = _desc(data, "A2", errors, "", required=True)
    A1 = _build_resolvent(a1, dim, errors, "A1") if a1 else None
    A2 = _build_resolvent(a2, dim, errors, "A2") if a2 else None
    gamma = _num(data, "gamma", errors, "", default=1.0)
    relax = _build_relaxation(data.get("lambda"), errors, "lambda")
    errs = data.get("errors") or {}
    b1 = _build_error_schedule(errs.get("b1"), dim, errors, "errors.b1")
    b2 = _build_error_schedule(errs.get("b2"), dim, errors, "errors.b2")
    if gamma is not None and gamma <= 0:
        errors.append(f"gamma: must be positive, got {gamma}")
    # relaxations for the two-operator parallel splitting live in ]0, 3/2[
    if relax is not None:
        try:
            relax.validate_open(2.0 / 3.0)
        except ValueError as e:
            errors.append(f"lambda: must lie in ]0, 3/2[ for the two-operator "
                          f"parallel splitting ({e})")
    for name, e in (("errors.b1", b1), ("errors.b2", b2)):
        if e is not None:
            _check_schedule(e.validate, errors, name)
    if errors or A1 is None or A2 is None or relax is None:
        return None

    init = data.get("init") or {}
    if init.get("kind") == "value":
        z1 = _vec(init.get("z1"), dim, errors, "init.z1")
        z2 = _vec(init.get("z2"), dim, errors, "init.z2")
        if errors or z1 is None or z2 is None:
            return None
        z_init = lambda rng: (z1.copy(), z2.copy())
    elif init.get("kind") == "random":
        scale = _num(init, "scale", errors, "init.", default=1.0)
        z_init = lambda rng: (scale * rng.standard_normal(dim),
                              scale * rng.standard_normal(dim))
    else:
        z_init = lambda rng: (np.zeros(dim), np.zeros(dim))

    def launch(rng, tol, max_iters, log_every):
        return productspace.parallel_dr2(A1, A2, gamma=gamma, relaxation=relax,
                                         b1_errors=b1, b2_errors=b2,
                                         z0=z_init(rng), tol=tol,
                                         max_iters=max_iters,
                                         log_every=log_every)

    return launch


_BUILDERS = {
    "fdr": lambda d, e: _build_fdr(d, e),
    "variational": lambda d, e: _build_fdr(d, e, variational_mode=True),
    "fpi": lambda d, e: _build_fpi(d, e),
    "fpi-explicit": lambda d, e: _build_fpi(d, e, explicit=True),
    "km": _build_km,
    "product": lambda d, e: _build_product(d, e),
    "pi-sum": lambda d, e: _build_product(d, e, pi_form=True),
    "dr2": _build_dr2,
}


def parse_spec(text, overrides=None):
    """Parse and fully validate a JSON problem spec.

    Returns a :class:`ProblemSpec` or raises :class:`SpecValidationError`
    carrying the complete list of validation errors (not just the first).
    ``overrides`` may replace the algorithm, tolerance, iteration budget,
    seed or logging stride before validation.
    """
    errors = []
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecValidationError([f"invalid JSON: {e}"]) from None
    if not isinstance(data, dict):
        raise SpecValidationError(["spec must be a JSON object"])
    data = dict(data)
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("tol", "max_iters"):
                stop = dict(data.get("stop") or {})
                stop[key] = value
                data["stop"] = stop
            else:
                data[key] = value

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    algorithm = data.get("algorithm")
    if algorithm not in ALGORITHMS:
        errors.append(f"algorithm: unknown algorithm {algorithm!r}; "
                      f"known algorithms: {', '.join(ALGORITHMS)}")
        raise SpecValidationError(errors)

    stop = data.get("stop") or {}
    tol = _num(stop, "tol", errors, "stop.", default=km.DEFAULT_TOL)
    max_iters = _intval(stop, "max_iters", errors, "stop.",
                        default=km.DEFAULT_MAX_ITERS, minimum=0)
    seed = _intval(data, "seed", errors, "", default=0)
    log_every = _intval(data, "log_every", errors, "", default=1, minimum=1)

    launch = _BUILDERS[algorithm](data, errors)
    if errors or launch is None:
        if not errors:
            errors.append("spec could not be validated")
        raise SpecValidationError(errors)
    return ProblemSpec(algorithm=algorithm, tol=tol, max_iters=max_iters,
                       seed=seed, log_every=log_every, launch=launch, raw=data)


def run(spec):
    """Execute a validated spec and return its :class:`RunRecord`."""
    rng = np.random.default_rng(spec.seed)
    start = time.perf_counter()
    result = spec.launch(rng, spec.tol, spec.max_iters, spec.log_every)
    wall = time.perf_counter() - start
    summary = {
        "algorithm": spec.algorithm,
        "status": result.status,
        "iterations": result.iterations,
        "residual": result.history[-1].residual if result.history else float("nan"),
        "wall_time": wall,
    }
    for attr in ("inclusion_residual", "certificate_residual",
                 "membership_violation"):
        if hasattr(result, attr):
            summary[attr] = getattr(result, attr)
    return RunRecord(rows=list(result.history), summary=summary)


def _fmt(value):
    return "" if value is None else repr(float(value))


def emit_csv(record, path):
    """Write the run history: header plus one row per logged iteration."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "lambda", "residual", "dx", "dy", "objective"])
            for row in record.rows:
                writer.writerow([str(row.n), _fmt(row.lam), _fmt(row.residual),
                                 _fmt(row.dx), _fmt(row.dy), _fmt(row.objective)])
    except OSError as e:
        raise OSError(f"cannot write CSV to {path}: {e}") from e


def _output_path(spec_path, output, multiple):
    if output is None:
        return Path(spec_path).with_suffix(".csv")
    out = Path(output)
    if multiple or out.is_dir():
        return out / (Path(spec_path).stem + ".csv")
    return out


def _process(spec_path, args, multiple):
    try:
        text = Path(spec_path).read_text()
    except OSError as e:
        print(f"{spec_path}: cannot read spec: {e}", file=sys.stderr)
        return EXIT_INVALID
    overrides = {"algorithm": args.algorithm, "tol": args.tol,
                 "max_iters": args.max_iters, "seed": args.seed,
                 "log_every": args.log_every}
    try:
        spec = parse_spec(text, overrides)
    except SpecValidationError as e:
        for msg in e.errors:
            print(f"{spec_path}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    try:
        record = run(spec)
        out = _output_path(spec_path, args.output, multiple)
        emit_csv(record, out)
    except Exception as e:  # noqa: BLE001 - surfaced as a clean exit code
        print(f"{spec_path}: run failed: {e}", file=sys.stderr)
        return EXIT_ERROR
    s = record.summary
    print(f"{spec_path}: status={s['status']} iterations={s['iterations']} "
          f"residual={s['residual']:.6e} csv={out} time={s['wall_time']:.3f}s")
    return _STATUS_CODES.get(s["status"], EXIT_ERROR)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="monosplit",
        description="Run a splitting solver from a JSON problem spec and "
                    "emit the residual history as CSV.")
    parser.add_argument("specs", nargs="+", help="problem spec files (JSON)")
    parser.add_argument("--algorithm", choices=ALGORITHMS,
                        help="override the spec's algorithm")
    parser.add_argument("--tol", type=float, help="override stop.tol")
    parser.add_argument("--max-iters", dest="max_iters", type=int,
                        help="override stop.max_iters")
    parser.add_argument("--seed", type=int, help="override the spec seed")
    parser.add_argument("--log-every", dest="log_every", type=int,
                        help="log every k-th iteration (default 1)")
    parser.add_argument("-o", "--output",
                        help="CSV output file (directory when several specs "
                             "are given); defaults to the spec path with a "
                             ".csv suffix")
    parser.add_argument("--jobs", type=int, default=1,
                        help="run independent specs concurrently")
    args = parser.parse_args(argv)

    multiple = len(args.specs) > 1
    if multiple and args.output:
        Path(args.output).mkdir(parents=True, exist_ok=True)
    if args.jobs > 1 and multiple:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(lambda p: _process(p, args, multiple), args.specs))
    else:
        codes = [_process(p, args, multiple) for p in args.specs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
