import numpy as np
import pytest

import monosplit as ms
from monosplit import (InclusionProblem, ProductProblem, ProductSpace,
                       affine_gradient, audit_projector, consensus_projector,
                       fdr_solve, identity_projector, lift, linear_monotone,
                       normal_cone_box, parallel_dr2, subdifferential_abs,
                       sum_splitting_pi, sum_splitting_pi_via_fpi,
                       sum_splitting_solve, sum_splitting_via_fdr,
                       translate_operator, unlift, zero_cocoercive,
                       zero_operator)


def test_lift_unlift_roundtrip():
    X = lift([1.0, 2.0], 3)
    np.testing.assert_allclose(X, [1, 2, 1, 2, 1, 2])
    np.testing.assert_allclose(unlift(X, 3), [1.0, 2.0])


def test_unlift_rejects_nondiagonal():
    with pytest.raises(ValueError, match="not diagonal"):
        unlift(np.array([1.0, 2.0, 1.0, 2.5]), 2)
    space = ProductSpace(2, 2)
    assert space.diagonal_spread(np.array([1.0, 2.0, 1.0, 2.5])) > 0.2
    assert space.diagonal_spread(lift([1.0, 2.0], 2)) == 0.0


def test_lift_isometry_weighted(rng):
    space = ProductSpace(3, 2, weights=[0.2, 0.3, 0.5])
    for _ in range(20):
        x = rng.standard_normal(2)
        y = rng.standard_normal(2)
        assert space.inner.norm(space.lift(x)) == pytest.approx(
            np.linalg.norm(x), abs=1e-12)
        assert space.inner.norm(space.lift(x) - space.lift(y)) == pytest.approx(
            np.linalg.norm(x - y), abs=1e-12)


def test_consensus_projector_uniform_mean():
    P = consensus_projector([0.5, 0.5], 2, 2)
    out = P(np.array([2.0, 0.0, 0.0, 2.0]))
    np.testing.assert_allclose(out, [1.0, 1.0, 1.0, 1.0])


def test_consensus_projector_degenerate_weights_rejected():
    with pytest.raises(ValueError, match="]0, 1\\["):
        consensus_projector([1.0, 0.0], 2, 1)
    with pytest.raises(ValueError, match="sum to 1"):
        consensus_projector([0.5, 0.4], 2, 1)


def test_consensus_projector_weighted_average():
    P = consensus_projector([0.25, 0.75], 2, 1)
    np.testing.assert_allclose(P(np.array([4.0, 0.0])), [1.0, 1.0])


def test_consensus_projector_invariants_weighted():
    P = consensus_projector([0.2, 0.3, 0.5], 3, 2)
    audit = audit_projector(P, samples=64, tol=1e-10)
    assert audit.passed, audit


def test_block_resolvent_rule(rng):
    # the lifted resolvent applies each block with parameter gamma / w_i
    blocks = [subdifferential_abs(2),
              normal_cone_box([-1.0, -1.0], [1.0, 1.0]),
              linear_monotone(np.diag([1.0, 2.0]))]
    w = np.array([0.2, 0.3, 0.5])
    space = ProductSpace(3, 2, weights=w)
    lifted = space.lift_resolvent(blocks)
    for _ in range(10):
        X = rng.standard_normal(6)
        gamma = rng.uniform(0.1, 2.0)
        got = space.split(lifted.resolve(gamma, X))
        for i in range(3):
            np.testing.assert_allclose(
                got[i], blocks[i].resolve(gamma / w[i], space.split(X)[i]),
                atol=1e-14)


def test_lifted_forward_map_preserves_diagonal(rng):
    # applying the lifted map to a lifted point lifts the base image, so the
    # diagonal is invariant and the cocoercivity constant carries over
    space = ProductSpace(3, 2, weights=[0.2, 0.3, 0.5])
    B = affine_gradient(np.diag([1.0, 2.0]), np.array([0.5, -0.5]))
    lifted = space.lift_cocoercive(B)
    assert lifted.beta == B.beta
    for _ in range(10):
        x = rng.standard_normal(2)
        np.testing.assert_allclose(lifted(space.lift(x)), space.lift(B(x)),
                                   atol=1e-14)
    from monosplit import audit_cocoercivity
    assert audit_cocoercivity(lifted, samples=200, inner=space.inner).passed


def test_single_block_collapses_to_fdr(rng):
    A = subdifferential_abs(2)
    B = affine_gradient(np.eye(2), np.array([1.0, -2.0]))
    prob = ProductProblem([A], B, weights=[1.0])
    z0 = rng.standard_normal(2)
    direct = sum_splitting_solve(prob, gamma=0.7, relaxation=0.9, z0=[z0],
                                 tol=-1.0, max_iters=80, trace=True)
    base = fdr_solve(InclusionProblem(A, B, identity_projector(2)), gamma=0.7,
                     relaxation=0.9, z0=z0, tol=-1.0, max_iters=80, trace=True)
    for (x_d, _), (x_f, _) in zip(direct.trace, base.trace):
        np.testing.assert_allclose(x_d, x_f, atol=1e-12)


def test_adapter_matches_direct_loop(rng):
    blocks = [subdifferential_abs(2),
              translate_operator(normal_cone_box([-2.0, -2.0], [2.0, 2.0]), [0.5, 0.5]),
              linear_monotone(np.diag([1.0, 3.0]), b=[0.5, -0.5])]
    B = affine_gradient(np.diag([1.0, 2.0]), np.array([1.0, 1.0]))
    prob = ProductProblem(blocks, B, weights=[0.25, 0.25, 0.5])
    Z0 = rng.standard_normal((3, 2))
    kw = dict(gamma=0.4, relaxation=0.8, z0=Z0, tol=-1.0, max_iters=200,
              trace=True)
    direct = sum_splitting_solve(prob, **kw)
    adapter = sum_splitting_via_fdr(prob, **kw)
    assert len(direct.trace) == len(adapter.trace)
    for (x_d, Z_d), (x_a, Z_a) in zip(direct.trace, adapter.trace):
        np.testing.assert_allclose(x_d, x_a, atol=1e-12)
        np.testing.assert_allclose(Z_d, Z_a, atol=1e-12)


def test_adapter_matches_direct_with_errors(rng):
    blocks = [subdifferential_abs(1), subdifferential_abs(1, center=[1.0])]
    prob = ProductProblem(blocks, affine_gradient(np.eye(1)))
    a = ms.geometric_errors(1, 0.3, 0.5)
    bs = [ms.geometric_errors(1, 0.2, 0.4), ms.geometric_errors(1, 0.1, 0.6)]
    kw = dict(gamma=0.5, a_errors=a, b_errors=bs, tol=-1.0, max_iters=100,
              trace=True)
    direct = sum_splitting_solve(prob, **kw)
    adapter = sum_splitting_via_fdr(prob, **kw)
    for (x_d, Z_d), (x_a, Z_a) in zip(direct.trace, adapter.trace):
        np.testing.assert_allclose(x_d, x_a, atol=1e-12)
        np.testing.assert_allclose(Z_d, Z_a, atol=1e-12)


def _two_box_oracle():
    """Brute-force solutions of 0 in N_[1,2] x + N_[0,1.5] x + x on a grid."""
    sols = []
    for t in np.linspace(1.0, 1.5, 51):
        # need -t in N_[1,2](t) + N_[0,1.5](t)
        n1_lo, n1_hi = ((-np.inf, 0.0) if t <= 1.0 else
                        (0.0, np.inf) if t >= 2.0 else (0.0, 0.0))
        n2_lo, n2_hi = ((-np.inf, 0.0) if t <= 0.0 else
                        (0.0, np.inf) if t >= 1.5 else (0.0, 0.0))
        if n1_lo + n2_lo <= -t <= n1_hi + n2_hi:
            sols.append(t)
    return sols


def test_two_box_oracle_unique_solution():
    assert _two_box_oracle() == [1.0]


def test_sum_splitting_two_boxes_identity():
    blocks = [normal_cone_box([1.0], [2.0]), normal_cone_box([0.0], [1.5])]
    prob = ProductProblem(blocks, affine_gradient(np.eye(1)))
    res = sum_splitting_solve(prob, gamma=1.0, tol=1e-10)
    assert res.status == ms.CONVERGED
    np.testing.assert_allclose(res.final, [1.0], atol=1e-7)
    assert res.certificate_residual <= 1e-7


def test_sum_splitting_median():
    blocks = [subdifferential_abs(1, center=[c]) for c in (0.0, 1.0, 2.0)]
    prob = ProductProblem(blocks)
    res = sum_splitting_solve(prob, gamma=1.0, tol=1e-10)
    assert res.status == ms.CONVERGED
    np.testing.assert_allclose(res.final, [1.0], atol=1e-6)


def test_sum_splitting_weight_validation():
    blocks = [zero_operator(1), zero_operator(1)]
    with pytest.raises(ValueError, match="]0, 1\\["):
        ProductProblem(blocks, weights=[1.0, 0.0])


def test_parallel_dr2_trivial_stationary():
    A = zero_operator(1)
    res = parallel_dr2(A, A, gamma=1.0, z0=([3.0], [1.0]), tol=-1.0,
                       max_iters=200, trace=True)
    xs = [x for x, _ in res.trace]
    for x in xs:
        np.testing.assert_allclose(x, xs[0], atol=1e-12)


def test_parallel_dr2_interval_subgradients():
    # any point of [-1, 1] solves 0 in d|x-1| + d|x+1|
    A1 = subdifferential_abs(1, center=[1.0])
    A2 = subdifferential_abs(1, center=[-1.0])
    res = parallel_dr2(A1, A2, gamma=1.0, z0=([4.0], [-6.0]), tol=1e-10)
    assert res.status == ms.CONVERGED
    assert -1.0 - 1e-6 <= res.final[0] <= 1.0 + 1e-6
    assert res.certificate_residual <= 1e-7


def test_parallel_dr2_shifted_linear_pair():
    A1 = linear_monotone(np.eye(1), b=[-4.0])  # x - 4
    A2 = linear_monotone(np.eye(1), b=[2.0])   # x + 2
    res = parallel_dr2(A1, A2, gamma=1.0, tol=1e-12)
    assert res.status == ms.CONVERGED
    np.testing.assert_allclose(res.final, [1.0], atol=1e-8)


def test_parallel_dr2_relaxation_range():
    A = zero_operator(1)
    with pytest.raises(ValueError, match="]0, 3/2\\["):
        parallel_dr2(A, A, relaxation=1.6)
    # 1.4 < 3/2 is admissible
    parallel_dr2(A, A, relaxation=1.4, max_iters=1)


def test_parallel_dr2_with_errors():
    A1 = linear_monotone(np.eye(1), b=[-4.0])
    A2 = linear_monotone(np.eye(1), b=[2.0])
    res = parallel_dr2(A1, A2, gamma=1.0,
                       b1_errors=ms.geometric_errors(1, 0.5, 0.5),
                       b2_errors=ms.geometric_errors(1, 0.5, 0.5),
                       tol=1e-11)
    assert res.status == ms.CONVERGED
    np.testing.assert_allclose(res.final, [1.0], atol=1e-6)


def test_pi_sum_dual_feasibility():
    blocks = [zero_operator(1), zero_operator(1)]
    prob = ProductProblem(blocks)
    sum_splitting_pi(prob, gamma=1.0, y0=[[1.0], [-1.0]], max_iters=1)
    with pytest.raises(ValueError, match="sum_i w_i y_i = 0"):
        sum_splitting_pi(prob, gamma=1.0, y0=[[1.0], [1.0]], max_iters=1)


def test_pi_sum_median():
    blocks = [subdifferential_abs(1, center=[c]) for c in (0.0, 1.0, 2.0)]
    res = sum_splitting_pi(ProductProblem(blocks), gamma=1.0, tol=1e-10)
    assert res.status == ms.CONVERGED
    np.testing.assert_allclose(res.final, [1.0], atol=1e-6)


def test_pi_sum_matches_dr_form(rng):
    # matched starts: z_{i,0} = x_0 - gamma * y_{i,0}
    blocks = [subdifferential_abs(2),
              normal_cone_box([-1.0, -1.0], [3.0, 3.0])]
    prob = ProductProblem(blocks, affine_gradient(np.eye(2), [1.0, 2.0]))
    gamma = 0.8
    x0 = rng.standard_normal(2)
    y0 = rng.standard_normal(2)
    Y0 = np.stack([y0, -y0])  # uniform weights: sum w_i y_i = 0
    Z0 = np.stack([x0 - gamma * Y0[0], x0 - gamma * Y0[1]])
    r_pi = sum_splitting_pi(prob, gamma=gamma, relaxation=0.9, x0=x0, y0=Y0,
                            tol=-1.0, max_iters=200, trace=True)
    r_dr = sum_splitting_solve(prob, gamma=gamma, relaxation=0.9, z0=Z0,
                               tol=-1.0, max_iters=200, trace=True)
    dev = max(np.linalg.norm(xp - xd)
              for (xp, _), (xd, _) in zip(r_pi.trace, r_dr.trace))
    assert dev <= 1e-10


def test_pi_sum_two_block_antisymmetric_duals():
    # with uniform weights and opposite initial duals the two dual tracks
    # stay opposite: y_{1,n} = -y_{2,n} for every n
    blocks = [subdifferential_abs(1, center=[1.0]),
              subdifferential_abs(1, center=[-1.0])]
    prob = ProductProblem(blocks)
    res = sum_splitting_pi(prob, gamma=1.0, x0=[3.0],
                           y0=[[0.7], [-0.7]], tol=-1.0, max_iters=100,
                           trace=True)
    for _, Y in res.trace:
        np.testing.assert_allclose(Y[0], -Y[1], atol=1e-12)


def test_pi_sum_adapter_matches_direct(rng):
    blocks = [subdifferential_abs(2), linear_monotone(np.diag([2.0, 1.0]))]
    prob = ProductProblem(blocks, affine_gradient(np.eye(2)), weights=[0.4, 0.6])
    x0 = rng.standard_normal(2)
    kw = dict(gamma=0.5, relaxation=0.85, x0=x0, tol=-1.0, max_iters=150,
              trace=True)
    direct = sum_splitting_pi(prob, **kw)
    adapter = sum_splitting_pi_via_fpi(prob, **kw)
    for (x_d, Y_d), (x_a, Y_a) in zip(direct.trace, adapter.trace):
        np.testing.assert_allclose(x_d, x_a, atol=1e-11)
        np.testing.assert_allclose(Y_d, Y_a, atol=1e-11)


def test_solution_transfer_from_lifted_run():
    blocks = [subdifferential_abs(1, center=[c]) for c in (0.0, 1.0, 2.0)]
    prob = ProductProblem(blocks)
    res = sum_splitting_via_fdr(prob, gamma=1.0, tol=1e-10)
    assert res.status == ms.CONVERGED
    np.testing.assert_allclose(res.final, [1.0], atol=1e-6)
    assert res.certificate_residual <= 1e-6


def test_scaled_gamma_cap_warning():
    blocks = [zero_operator(1), zero_operator(1)]
    prob = ProductProblem(blocks, zero_cocoercive(1, beta=1e14),
                          weights=[1e-13, 1.0 - 1e-13])
    with pytest.warns(RuntimeWarning, match="cap"):
        sum_splitting_solve(prob, gamma=1.0, max_iters=1)


def test_gamma_range_validation():
    prob = ProductProblem([zero_operator(1)], affine_gradient(np.eye(1)),
                          weights=[1.0])
    with pytest.raises(ValueError, match="]0, 2\\*beta\\["):
        sum_splitting_solve(prob, gamma=2.0)
    with pytest.raises(ValueError, match="]0, 2\\*beta\\["):
        sum_splitting_pi(prob, gamma=2.0)
