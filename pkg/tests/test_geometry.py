import numpy as np
import pytest

from curved_wiener.errors import GeometryError, NonPolynomialError
from curved_wiener.geometry import (
    PolynomialScalarField, PolynomialVectorField, bochner_residual, covariant_derivative, curvature,
    geometry_check, gradient, gradient_field, hessian_form, laplacian, lie_bracket, ricci, ricci_form,
    ricci_operator,
)
from curved_wiener.malliavin import make_system
from curved_wiener.manifold import TangentVector, make_manifold, tangent_project


@pytest.mark.parametrize('spec', ['sphere:N=3,rho=1', 'sphere:N=4,rho=2', 'cylinder', 'flat:N=3'])
def test_geometry_check_passes(spec):
    table = geometry_check(make_manifold(spec), samples=5, seed=2)
    assert list(table.columns) == ['identity', 'sample', 'residual', 'tolerance', 'passed']
    assert table['passed'].all(), table[~table['passed']]


def test_geometry_check_finite_difference_model():
    table = geometry_check(make_manifold('sl2'), samples=3, seed=4)
    assert table['passed'].all(), table[~table['passed']]
    identities = set(table['identity'])
    assert 'laplacian_trace_hessian' in identities
    # 다항식 사영이 없으면 발산/Bochner 행은 없다
    assert 'bochner' not in identities
    assert 'laplacian_divergence_gradient' not in identities


def test_geometry_check_laplacian_and_bochner_rows(sphere3):
    table = geometry_check(sphere3, samples=3, seed=6)
    for identity in ('laplacian_trace_hessian', 'laplacian_divergence_gradient', 'bochner'):
        rows = table[table['identity'] == identity]
        assert len(rows) == 3
        assert rows['passed'].all()
    bochner = table[table['identity'] == 'bochner']
    assert (bochner['tolerance'] == sphere3.tolerances.bochner_tol).all()


def test_geometry_check_on_line():
    table = geometry_check(make_manifold('flat:N=1'), samples=3, seed=1)
    assert table['passed'].all(), table[~table['passed']]
    identities = set(table['identity'])
    assert not any(name.startswith(('curvature', 'ricci')) for name in identities)
    assert {'projection_trace', 'laplacian_trace_hessian', 'bochner'} <= identities


def test_gradient_is_tangent_projection(sphere3):
    f = PolynomialScalarField(sphere3, 'x3')
    grad = gradient(f, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(grad.vec, [0.0, 0.0, 1.0], atol=1e-14)
    grad = gradient(f, [0.0, 0.0, 1.0])
    np.testing.assert_allclose(grad.vec, np.zeros(3), atol=1e-14)


def test_laplacian_of_linear_function_on_sphere(rng):
    model = make_manifold('sphere:N=3,rho=2')
    f = PolynomialScalarField(model, 'x3')
    m = model.random_point(rng)
    # Δ x3 = −(N−1) x3 / ρ²
    assert laplacian(f, m) == pytest.approx(-2.0 * m[2] / 4.0, abs=1e-10)


def test_hessian_form_symmetric(sphere3, rng):
    f = PolynomialScalarField(sphere3, 'x1**2*x2 + x3')
    m = sphere3.random_point(rng)
    v, w = sphere3.random_tangent(m, rng), sphere3.random_tangent(m, rng)
    assert hessian_form(f, v, w) == pytest.approx(hessian_form(f, w, v), abs=1e-10)


def test_covariant_derivative_tangent(sphere3, rng):
    Y = PolynomialVectorField.from_strings(sphere3, ['-x2', 'x1', '0'])
    m = sphere3.random_point(rng)
    v = sphere3.random_tangent(m, rng)
    result = covariant_derivative(Y, v)
    assert abs(result.vec @ m) < 1e-10


def test_sphere_curvature_oracle(rng):
    model = make_manifold('sphere:N=4,rho=2')
    m = model.random_point(rng)
    u, v, w = (model.random_tangent(m, rng) for _ in range(3))
    expected = ((v.vec @ w.vec) * u.vec - (u.vec @ w.vec) * v.vec) / 4.0
    np.testing.assert_allclose(curvature(model, u, v, w).vec, expected, atol=1e-10)
    np.testing.assert_allclose(ricci(model, u).vec, 0.5 * u.vec, atol=1e-10)


def test_ricci_formulas_agree(rng):
    model = make_manifold('so3')
    m = model.random_point(rng)
    np.testing.assert_allclose(ricci_operator(model, m), ricci_form(model, m), atol=1e-4)


def test_cylinder_is_flat(rng):
    model = make_manifold('cylinder')
    m = model.random_point(rng)
    u, v, w = (model.random_tangent(m, rng) for _ in range(3))
    np.testing.assert_allclose(curvature(model, u, v, w).vec, np.zeros(3), atol=1e-4)


def test_curvature_rejects_mixed_bases(sphere3):
    u = tangent_project(sphere3, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    v = tangent_project(sphere3, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(GeometryError):
        curvature(sphere3, u, v, u)


def test_heisenberg_bracket():
    system = make_system('heisenberg')
    X1, X2 = system.fields
    bracket = lie_bracket(X1, X2, np.array([0.3, -1.2, 0.7]))
    np.testing.assert_allclose(bracket.vec, [0.0, 0.0, 1.0], atol=1e-12)


def test_rotation_fields_bracket_on_sphere(sphere3, rng):
    Y = PolynomialVectorField.from_strings(sphere3, ['-x2', 'x1', '0'])
    W = PolynomialVectorField.from_strings(sphere3, ['0', '-x3', 'x2'])
    m = sphere3.random_point(rng)
    bracket = lie_bracket(Y, W, m)
    assert abs(bracket.vec @ m) < 1e-10
    # [Y, W] 는 Y, W 의 공변미분 차와 같음 (비틀림 없음)
    torsion = (covariant_derivative(W, TangentVector(m, Y(m))).vec
               - covariant_derivative(Y, TangentVector(m, W(m))).vec)
    np.testing.assert_allclose(bracket.vec, torsion, atol=1e-10)


@pytest.mark.parametrize('expression', ['x3', 'x1*x2', 'x1**2 - x2*x3'])
def test_bochner_identity_on_sphere(sphere3, rng, expression):
    f = PolynomialScalarField(sphere3, expression)
    for _ in range(5):
        assert bochner_residual(f, sphere3.random_point(rng)) <= sphere3.tolerances.bochner_tol


def test_gradient_field_is_tangent(sphere3, rng):
    f = PolynomialScalarField(sphere3, 'x1*x2')
    z = gradient_field(f)
    m = sphere3.random_point(rng)
    np.testing.assert_allclose(z(m), gradient(f, m).vec, atol=1e-12)


def test_gradient_field_requires_polynomial_projection():
    f = PolynomialScalarField(make_manifold('cylinder'), 'x3')
    with pytest.raises(NonPolynomialError):
        gradient_field(f)


def test_non_polynomial_expression_rejected(sphere3):
    with pytest.raises(NonPolynomialError):
        PolynomialScalarField(sphere3, 'sin(x1)')
