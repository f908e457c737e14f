import pickle

import numpy as np
import pytest
import sympy as sp

from curved_wiener.errors import EstimatorError, NonPolynomialError, PathError
from curved_wiener.estimators import (
    CylinderFunction, McEstimate, McParams, MonteCarloEngine, RunningMoments, bismut_gradient,
    clark_ocone_check, elworthy_li_gradient, fit_loglog_slope, gaussian_smoothing, heat_expectation,
    ibp_residual,
)
from curved_wiener.geometry import PolynomialScalarField
from curved_wiener.malliavin import make_system
from curved_wiener.manifold import TangentVector
from curved_wiener.sde import CameronMartinPath, projection_bm_system


# ----------------------------------------------------------------------
# 통계
# ----------------------------------------------------------------------
def test_running_moments_match_two_pass(rng):
    values = rng.standard_normal((1000, 2))
    moments = RunningMoments(2)
    for block in np.array_split(values, 7):
        moments.update(block)
    streamed = moments.to_estimate()
    direct = McEstimate.from_samples(values)
    np.testing.assert_allclose(streamed.mean, direct.mean, rtol=1e-12)
    np.testing.assert_allclose(streamed.stderr, direct.stderr, rtol=1e-10)


def test_nan_rows_discarded():
    values = np.array([[1.0], [np.nan], [3.0]])
    estimate = McEstimate.from_samples(values)
    assert estimate.n_paths == 2
    assert estimate.n_discarded == 1
    assert estimate.mean[0] == pytest.approx(2.0)


def test_too_few_samples():
    with pytest.raises(EstimatorError):
        McEstimate.from_samples(np.array([1.0]))


def test_loglog_slope():
    x = np.array([1e-1, 1e-2, 1e-3])
    assert fit_loglog_slope(x, 3.0 * x ** 2) == pytest.approx(2.0)


def test_params_validation():
    with pytest.raises(EstimatorError):
        McParams(n_paths=1)
    with pytest.raises(EstimatorError):
        McParams(n_paths=3, antithetic=True)


# ----------------------------------------------------------------------
# 열 반군
# ----------------------------------------------------------------------
def test_heat_on_sphere(sphere3, engine):
    f = PolynomialScalarField(sphere3, 'x3')
    est = heat_expectation(sphere3, sphere3.origin(), f, 0.5, McParams(dt=0.01, n_paths=4000, seed=1), engine)
    assert est.within(np.exp(-0.5), n_sigma=4.0, slack=0.01)
    assert est.labels == ['value']


def test_heat_flat_antithetic(flat2, engine):
    f = PolynomialScalarField(flat2, 'x1**2 + x2**2')
    params = McParams(dt=0.05, n_paths=2000, seed=2, antithetic=True)
    est = heat_expectation(flat2, np.zeros(2), f, 1.0, params, engine)
    assert est.n_paths == 1000
    assert est.within(2.0, n_sigma=4.0)


def test_heat_identical_across_workers_and_chunks(sphere3):
    f = PolynomialScalarField(sphere3, 'x3')
    params = McParams(dt=0.05, n_paths=600, seed=3)
    single = heat_expectation(sphere3, sphere3.origin(), f, 0.5, params, MonteCarloEngine(workers=1, chunk_size=100))
    pooled = heat_expectation(sphere3, sphere3.origin(), f, 0.5, params, MonteCarloEngine(workers=2, chunk_size=100))
    rechunked = heat_expectation(sphere3, sphere3.origin(), f, 0.5, params, MonteCarloEngine(workers=1, chunk_size=250))
    assert single.mean[0] == pooled.mean[0]
    np.testing.assert_allclose(rechunked.mean, single.mean, rtol=1e-12)
    assert single.stderr[0] == pooled.stderr[0]


def test_streaming_mode_agrees(sphere3):
    f = PolynomialScalarField(sphere3, 'x3')
    params = McParams(dt=0.05, n_paths=600, seed=3)
    exact = heat_expectation(sphere3, sphere3.origin(), f, 0.5, params,
                             MonteCarloEngine(workers=1, chunk_size=100, deterministic=True))
    streamed = heat_expectation(sphere3, sphere3.origin(), f, 0.5, params,
                                MonteCarloEngine(workers=1, chunk_size=100, deterministic=False))
    np.testing.assert_allclose(streamed.mean, exact.mean, rtol=1e-12)
    np.testing.assert_allclose(streamed.stderr, exact.stderr, rtol=1e-9)


# ----------------------------------------------------------------------
# Bismut / Elworthy-Li
# ----------------------------------------------------------------------
def test_bismut_flat_linear(flat2, engine):
    f = PolynomialScalarField(flat2, 'x1 - 2*x2')
    est = bismut_gradient(flat2, np.zeros(2), f, 1.0, 0.5, McParams(dt=0.05, n_paths=20000, seed=4), engine)
    assert est.labels == ['e1', 'e2']
    assert est.within([1.0, -2.0], n_sigma=4.0)
    np.testing.assert_allclose(est.metadata['basis'], np.eye(2))


@pytest.mark.slow
def test_bismut_sphere(sphere3, engine):
    o = np.array([1.0, 0.0, 0.0])
    f = PolynomialScalarField(sphere3, 'x3')
    est = bismut_gradient(sphere3, o, f, 0.5, 0.5, McParams(dt=0.01, n_paths=20000, seed=5), engine)
    target = np.exp(-0.5) * np.array([0.0, 0.0, 1.0])
    basis = sphere3.tangent_basis(o)
    assert est.within(basis.T @ target, n_sigma=4.0, slack=0.02)
    np.testing.assert_allclose(est.ambient(), basis @ est.mean)


@pytest.mark.parametrize('t0', [0.0, 1.5, 0.333])
def test_bismut_time_checks(flat2, engine, t0):
    f = PolynomialScalarField(flat2, 'x1')
    with pytest.raises(EstimatorError):
        bismut_gradient(flat2, np.zeros(2), f, 1.0, t0, McParams(dt=0.1, n_paths=10), engine)


def test_elworthy_li_flat_system(engine):
    system = make_system('elliptic-flat')
    f = PolynomialScalarField(system.model, 'x1 + x1*x2')
    v = TangentVector(system.origin, np.array([1.0, 0.0]))
    est = elworthy_li_gradient(system, v, f, 1.0, 1.0, McParams(dt=0.05, n_paths=20000, seed=6), engine)
    assert est.metadata['mode'] == 'jacobian'
    assert est.within(1.0, n_sigma=4.0)


@pytest.mark.slow
def test_elworthy_li_projection_system(sphere3, engine):
    o = np.array([1.0, 0.0, 0.0])
    system = projection_bm_system(sphere3, o)
    f = PolynomialScalarField(sphere3, 'x3')
    v = TangentVector(o, np.array([0.0, 0.0, 1.0]))
    est = elworthy_li_gradient(system, v, f, 0.5, 0.5, McParams(dt=0.01, n_paths=20000, seed=7), engine)
    assert est.metadata['mode'] == 'projection'
    assert est.within(np.exp(-0.5), n_sigma=4.0, slack=0.02)


def test_elworthy_li_rejects_foreign_vector(engine):
    system = make_system('elliptic-flat')
    f = PolynomialScalarField(system.model, 'x1')
    v = TangentVector(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(EstimatorError):
        elworthy_li_gradient(system, v, f, 1.0, 0.5, McParams(dt=0.1, n_paths=10), engine)


# ----------------------------------------------------------------------
# 원통 함수 / 부분적분
# ----------------------------------------------------------------------
def test_cylinder_function_evaluation():
    F = CylinderFunction([0.5, 1.0], 'x1_1*x2_2 + x3_2', 3)
    points = np.array([[[2.0, 0.0, 0.0], [0.0, 3.0, 4.0]]])
    assert F(points)[0] == pytest.approx(10.0)
    np.testing.assert_allclose(F.gradients(points)[0], [[3.0, 0.0, 0.0], [0.0, 2.0, 1.0]])
    np.testing.assert_array_equal(F.grid_indices(np.linspace(0.0, 1.0, 11)), [5, 10])


def test_cylinder_function_single_time_alias():
    F = CylinderFunction([1.0], 'x1*x3', 3)
    assert F(np.array([[2.0, 5.0, 3.0]])) == pytest.approx(6.0)
    restored = pickle.loads(pickle.dumps(F))
    assert restored.expression == F.expression


def test_cylinder_function_errors():
    with pytest.raises(PathError):
        CylinderFunction([1.0, 0.5], 'x1_1', 3)
    with pytest.raises(NonPolynomialError):
        CylinderFunction([1.0], 'y1', 3)
    with pytest.raises(NonPolynomialError):
        CylinderFunction([1.0], 'exp(x1)', 3)


def test_ibp_flat(flat2, engine):
    F = CylinderFunction([0.5, 1.0], 'x1_1*x2_2', 2)
    h = CameronMartinPath.linear([1.0, 0.5])
    est = ibp_residual(flat2, np.zeros(2), h, F, 1.0, McParams(dt=0.05, n_paths=20000, seed=8), engine)
    mean, stderr = est['residual']
    assert abs(mean) <= 4.0 * stderr
    # E[X^h F] = h1(0.5) E[B2(1)] + h2(1) E[B1(0.5)] = 0
    assert est.within([0.0, 0.0, 0.0], n_sigma=4.0)


@pytest.mark.slow
@pytest.mark.parametrize('variant', ['position', 'velocity'])
def test_ibp_sphere(sphere3, engine, variant):
    F = CylinderFunction([1.0], 'x3', 3)
    h = CameronMartinPath.linear([1.0, 0.0])
    est = ibp_residual(sphere3, sphere3.origin(), h, F, 1.0, McParams(dt=0.01, n_paths=20000, seed=9),
                       engine, variant=variant)
    mean, stderr = est['residual']
    if variant == 'position':
        assert abs(mean) <= 4.0 * stderr + 0.01
    assert est.metadata['variant'] == variant


def test_ibp_rejects_bad_variant(sphere3, engine):
    F = CylinderFunction([1.0], 'x3', 3)
    with pytest.raises(EstimatorError):
        ibp_residual(sphere3, sphere3.origin(), CameronMartinPath.linear([1.0, 0.0]), F, 1.0,
                     McParams(dt=0.1, n_paths=10), engine, variant='mixed')


def test_ibp_rescales_horizon(flat2, engine):
    F = CylinderFunction([2.0], 'x1', 2)
    h = CameronMartinPath.linear([1.0, 0.0])
    est = ibp_residual(flat2, np.zeros(2), h, F, 2.0, McParams(dt=0.1, n_paths=4000, seed=10), engine)
    np.testing.assert_allclose(est.metadata['h_knots'], [0.0, 2.0])
    np.testing.assert_allclose(est.metadata['h_values'][-1], [np.sqrt(2.0), 0.0])
    # X^h F = h1(2) 는 경로에 의존하지 않음
    assert est['directional'][0] == pytest.approx(np.sqrt(2.0))
    mean, stderr = est['divergence']
    assert abs(mean - np.sqrt(2.0)) <= 4.0 * stderr
    mean, stderr = est['residual']
    assert abs(mean) <= 4.0 * stderr


# ----------------------------------------------------------------------
# Clark-Ocone
# ----------------------------------------------------------------------
def test_gaussian_smoothing_closed_form():
    x, tau = sp.Symbol('x1', real=True), sp.Symbol('tau')
    assert sp.expand(gaussian_smoothing(x ** 4, [x], tau) - (x ** 4 + 6 * tau * x ** 2 + 3 * tau ** 2)) == 0
    assert gaussian_smoothing(x ** 2, [x], 0) == x ** 2


def test_clark_ocone_linear_is_exact(engine):
    est = clark_ocone_check('x1', 1, 1.0, McParams(dt=0.01, n_paths=200, seed=11), engine)
    assert est['defect_sq'][0] <= 1e-20


def test_clark_ocone_quadratic_defect(engine):
    # f = x²: D = Σ(ΔB)² − t, E[D²] = 2 t Δ
    for dt in (0.02, 0.01):
        est = clark_ocone_check('x1**2', 1, 1.0, McParams(dt=dt, n_paths=10000, seed=12), engine)
        assert est.within([2.0 * dt, 0.0], n_sigma=4.0)
        assert est.metadata['expected_value'] == pytest.approx(1.0)


def test_clark_ocone_defect_decreases(engine):
    defects = [clark_ocone_check('x1**3 + x1*x2', 2, 1.0, McParams(dt=dt, n_paths=5000, seed=13), engine)['defect_sq'][0]
               for dt in (0.04, 0.02, 0.01)]
    assert fit_loglog_slope([0.04, 0.02, 0.01], defects) >= 0.7


def test_clark_ocone_rejects_non_polynomial(engine):
    with pytest.raises(NonPolynomialError):
        clark_ocone_check('sin(x1)', 1, 1.0, McParams(dt=0.1, n_paths=10), engine)
