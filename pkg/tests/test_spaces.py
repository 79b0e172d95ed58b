import numpy as np
import pytest

from monosplit import (InnerProduct, as_vector, audit_projector,
                       identity_projector, matrix_projector, project,
                       project_complement, reflect_subspace, span_projector,
                       zero_mean_projector, zero_projector)
from conftest import random_subspace_matrix, random_subspace_projector


def test_as_vector_rejects_bad_input():
    with pytest.raises(ValueError, match="dimension mismatch"):
        as_vector([1.0, 2.0], dim=3)
    with pytest.raises(ValueError, match="non-finite"):
        as_vector([1.0, np.nan])
    with pytest.raises(ValueError, match="1-d"):
        as_vector([[1.0, 2.0]])
    assert as_vector(3.0).shape == (1,)


def test_inner_product_weights_validation():
    with pytest.raises(ValueError, match="strictly positive"):
        InnerProduct(2, [1.0, 0.0])
    w = InnerProduct(2, [2.0, 3.0])
    assert w.dot([1.0, 1.0], [1.0, 1.0]) == pytest.approx(5.0)
    assert InnerProduct(2).is_uniform


def test_inner_product_bilinear_symmetric_positive(rng):
    inner = InnerProduct(4, rng.uniform(0.5, 2.0, 4))
    for _ in range(20):
        x, y, z = rng.standard_normal((3, 4))
        a = rng.standard_normal()
        assert inner.dot(x, y) == pytest.approx(inner.dot(y, x))
        assert inner.dot(a * x + z, y) == pytest.approx(
            a * inner.dot(x, y) + inner.dot(z, y), abs=1e-12)
        if np.any(x != 0):
            assert inner.dot(x, x) > 0


def test_project_identity():
    P = identity_projector(2)
    np.testing.assert_allclose(project(P, [3.0, -1.0]), [3.0, -1.0])


def test_project_span_diagonal():
    P = span_projector([1.0, 1.0])
    np.testing.assert_allclose(project(P, [3.0, -1.0]), [1.0, 1.0])


def test_project_zero_mean():
    P = zero_mean_projector(3)
    np.testing.assert_allclose(project(P, [1.0, 2.0, 3.0]), [-1.0, 0.0, 1.0])


def test_project_complement_examples():
    Pz = zero_mean_projector(3)
    np.testing.assert_allclose(project_complement(Pz, [1.0, 2.0, 3.0]),
                               [2.0, 2.0, 2.0])
    np.testing.assert_allclose(project_complement(identity_projector(2), [1.0, 2.0]),
                               [0.0, 0.0])
    np.testing.assert_allclose(project_complement(zero_projector(2), [1.0, 2.0]),
                               [1.0, 2.0])


def test_reflect_examples():
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(reflect_subspace(identity_projector(2), x), x)
    np.testing.assert_allclose(reflect_subspace(zero_projector(2), x), [-1.0, -2.0])
    # 2*(-1, 0, 1) - (1, 2, 3)
    np.testing.assert_allclose(
        reflect_subspace(zero_mean_projector(3), [1.0, 2.0, 3.0]),
        [-3.0, -2.0, -1.0])


def test_projection_idempotent_on_result(rng):
    P = random_subspace_projector(rng, 6)
    for _ in range(10):
        r = project(P, rng.standard_normal(6))
        assert np.linalg.norm(project(P, r) - r) <= 1e-12 * (1 + np.linalg.norm(r))


def test_complement_annihilated_by_projection(rng):
    P = random_subspace_projector(rng, 5)
    for _ in range(10):
        c = project_complement(P, rng.standard_normal(5))
        assert np.linalg.norm(project(P, c)) <= 1e-12 * (1 + np.linalg.norm(c))


def test_pythagoras(rng):
    for P in (random_subspace_projector(rng, 7),
              zero_mean_projector(7),
              span_projector(rng.standard_normal(7))):
        for _ in range(50):
            x = rng.standard_normal(7)
            nx2 = P.inner.dot(x, x)
            a = P(x)
            b = P.complement(x)
            lhs = P.inner.dot(a, a) + P.inner.dot(b, b)
            assert abs(lhs - nx2) <= 1e-10 * max(nx2, 1.0)


def test_pythagoras_weighted(rng):
    inner = InnerProduct(4, [0.1, 0.2, 0.3, 0.4])
    P = span_projector([1.0, 1.0, 1.0, 1.0], inner=inner)
    for _ in range(50):
        x = rng.standard_normal(4)
        lhs = inner.dot(P(x), P(x)) + inner.dot(P.complement(x), P.complement(x))
        assert abs(lhs - inner.dot(x, x)) <= 1e-10 * max(inner.dot(x, x), 1.0)


def test_reflection_involution_and_isometry(rng):
    P = random_subspace_projector(rng, 6)
    for _ in range(50):
        x = rng.standard_normal(6)
        y = rng.standard_normal(6)
        twice = P.reflect(P.reflect(x))
        assert np.linalg.norm(twice - x) <= 1e-10
        assert abs(np.linalg.norm(P.reflect(x) - P.reflect(y))
                   - np.linalg.norm(x - y)) <= 1e-10


def test_projection_firmly_nonexpansive(rng):
    P = random_subspace_projector(rng, 6)
    for _ in range(100):
        x = rng.standard_normal(6)
        y = rng.standard_normal(6)
        d = P(x) - P(y)
        assert np.dot(d, x - y) >= np.dot(d, d) - 1e-10


def test_dimension_mismatch_raises():
    P = zero_mean_projector(3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        P(np.zeros(4))
    with pytest.raises(ValueError, match="dimension mismatch"):
        reflect_subspace(P, np.zeros(2))


def test_audit_passes_structured_projectors(rng):
    for P in (identity_projector(5), zero_projector(5), zero_mean_projector(5),
              span_projector(rng.standard_normal(5)),
              random_subspace_projector(rng, 5)):
        audit = audit_projector(P, samples=32, tol=1e-8)
        assert audit.passed, audit


def test_audit_weighted_self_adjointness(rng):
    inner = InnerProduct(3, [0.2, 0.3, 0.5])
    P = span_projector([1.0, 1.0, 1.0], inner=inner)
    audit = audit_projector(P, samples=32, tol=1e-10)
    assert audit.passed, audit


def test_matrix_projector_rejects_non_projector():
    with pytest.raises(ValueError, match="not an orthogonal projector"):
        matrix_projector([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ValueError, match="square"):
        matrix_projector([[1.0, 0.0, 0.0]])


def test_matrix_projector_accepts_valid(rng):
    M = random_subspace_matrix(rng, 5, 2)
    P = matrix_projector(M)
    x = rng.standard_normal(5)
    np.testing.assert_allclose(P(x), M @ x)
