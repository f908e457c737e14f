from dataclasses import replace

import numpy as np
import pytest

from curved_wiener.errors import DriverError
from curved_wiener.estimators import fit_loglog_slope
from curved_wiener.geometry import PolynomialScalarField, PolynomialVectorField
from curved_wiener.malliavin import make_system
from curved_wiener.manifold import make_manifold
from curved_wiener.sde import (
    CameronMartinPath, SdeSystem, markov_consistency, projection_bm_system, quadratic_variation_check,
    sample_driver, sample_drivers, simulate_development_bm, simulate_jacobian_flow, simulate_projection_bm,
    simulate_sde,
)


def test_driver_streams_independent_of_batch():
    batch = sample_drivers(3, 1.0, 0.01, 7, [0, 1, 2, 3])
    single = sample_driver(3, 1.0, 0.01, 7, path_index=2)
    np.testing.assert_array_equal(batch.increments[2], single.increments[0])
    assert not np.allclose(batch.increments[0], batch.increments[1])


def test_antithetic_pairs_are_negated():
    driver = sample_drivers(2, 1.0, 0.1, 3, range(4), antithetic=True)
    np.testing.assert_array_equal(driver.increments[1], -driver.increments[0])
    np.testing.assert_array_equal(driver.increments[3], -driver.increments[2])
    plain = sample_drivers(2, 1.0, 0.1, 3, [1])
    np.testing.assert_array_equal(driver.increments[2], plain.increments[0])


def test_step_must_divide_horizon():
    with pytest.raises(DriverError):
        sample_drivers(1, 1.0, 0.3, 0, [0])


def test_increment_variance():
    driver = sample_drivers(2, 1.0, 0.01, 11, range(500))
    assert driver.variance_self_test()


def test_coarsen_keeps_values_on_coarse_grid():
    fine = sample_drivers(2, 1.0, 1.0 / 64, 5, range(3))
    coarse = fine.coarsen(4)
    assert coarse.n_steps == 16
    assert coarse.dt == pytest.approx(1.0 / 16)
    np.testing.assert_allclose(coarse.values(), fine.values()[:, ::4], atol=1e-14)


def test_cameron_martin_shift():
    h = CameronMartinPath.linear([1.0, -2.0], T=2.0)
    assert h.energy() == pytest.approx(10.0)
    np.testing.assert_allclose(h(1.0), [1.0, -2.0])
    shifted = sample_drivers(2, 2.0, 0.5, 1, [0], h=h)
    plain = sample_drivers(2, 2.0, 0.5, 1, [0])
    np.testing.assert_allclose(shifted.increments - plain.increments, 0.5 * np.array([[[1.0, -2.0]] * 4]))


def test_flat_simulation_reproduces_driver(flat2):
    system = projection_bm_system(flat2, [0.5, -0.5])
    driver = sample_drivers(2, 1.0, 0.01, 2, range(5))
    paths = simulate_sde(system, driver)
    np.testing.assert_allclose(paths.points, driver.values() + np.array([0.5, -0.5]), atol=1e-12)


def test_sphere_paths_stay_on_sphere(sphere3):
    system = projection_bm_system(sphere3, sphere3.origin())
    paths = simulate_sde(system, sample_drivers(3, 0.5, 0.01, 4, range(50)))
    assert np.max(sphere3.constraint_residual(paths.points)) <= 1e-10


def test_projection_bm_auxiliary_processes(sphere3):
    driver = sample_drivers(3, 0.5, 0.01, 6, range(20))
    path = simulate_projection_bm(sphere3, sphere3.origin(), driver)
    assert np.max(sphere3.constraint_residual(path.points)) <= 1e-10
    # Ric ≡ I 이므로 W_t = e^{−t/2} I
    np.testing.assert_allclose(path.ricci_weight[:, -1], np.exp(-0.25) * np.broadcast_to(np.eye(2), (20, 2, 2)),
                               atol=1e-8)
    np.testing.assert_allclose(path.ricci_parallel, np.broadcast_to(np.eye(2), path.ricci_parallel.shape), atol=1e-7)
    np.testing.assert_allclose(path.deriv_flow @ path.deriv_flow_inv,
                               np.broadcast_to(np.eye(2), path.deriv_flow.shape), atol=1e-8)
    U = path.tangent_frames()
    np.testing.assert_allclose(np.einsum('pkn,pkni->pki', path.points, U), 0.0, atol=1e-5)


def test_minimal_simulation_matches_full(sphere3):
    driver = sample_drivers(3, 0.2, 0.01, 8, range(4))
    full = simulate_projection_bm(sphere3, sphere3.origin(), driver)
    minimal = simulate_projection_bm(sphere3, sphere3.origin(), driver, minimal=True)
    np.testing.assert_allclose(minimal.points, full.points, atol=1e-12)


def test_development_bm_stays_on_sphere(sphere3):
    driver = sample_drivers(2, 0.5, 0.01, 9, range(10))
    path = simulate_development_bm(sphere3, sphere3.origin(), driver)
    assert np.max(sphere3.constraint_residual(path.points)) <= 1e-10
    np.testing.assert_allclose(path.antidev, driver.values())


def test_driver_dimension_checked(sphere3):
    system = projection_bm_system(sphere3, sphere3.origin())
    with pytest.raises(DriverError):
        simulate_sde(system, sample_drivers(2, 0.5, 0.1, 0, [0]))


def test_quadratic_variation(sphere3):
    system = projection_bm_system(sphere3, sphere3.origin())
    paths = simulate_sde(system, sample_drivers(3, 1.0, 1e-3, 12, range(200)))
    f = PolynomialScalarField(sphere3, 'x3')
    residual = quadratic_variation_check(paths, f, f)
    stderr = residual.std(ddof=1) / np.sqrt(len(residual))
    assert abs(residual.mean()) <= 4.0 * stderr + 1e-3


def test_heisenberg_jacobian_flow():
    system = make_system('heisenberg')
    driver = sample_drivers(2, 1.0, 0.01, 13, range(6))
    flow = simulate_jacobian_flow(system, driver)
    # ∂ξ3/∂o1 = B2(t)
    np.testing.assert_allclose(flow.jacobian[:, -1, 2, 0], driver.values()[:, -1, 1], atol=1e-10)
    np.testing.assert_allclose(flow.jacobian @ flow.jacobian_inv,
                               np.broadcast_to(np.eye(3), flow.jacobian.shape), atol=1e-10)
    assert np.all(flow.condition_numbers() >= 1.0)


@pytest.mark.slow
def test_wong_zakai_strong_order(sphere3):
    system = projection_bm_system(sphere3, sphere3.origin())
    fine = sample_drivers(3, 1.0, 2.0 ** -12, 7, range(100))
    reference = simulate_sde(system, fine).points[:, -1]
    steps, errors = [], []
    for level in range(8, 12):
        coarse = fine.coarsen(2 ** (12 - level))
        end = simulate_sde(system, coarse).points[:, -1]
        steps.append(coarse.dt)
        errors.append(float(np.mean(np.linalg.norm(end - reference, axis=-1))))
    assert fit_loglog_slope(steps, errors) >= 0.4


@pytest.mark.slow
@pytest.mark.parametrize('direction', [0, 1])
def test_jacobian_flow_matches_finite_difference(direction):
    model = make_manifold('flat:N=2')
    fields = [PolynomialVectorField(model, ['1', 'x1*x2'], 'X1'),
              PolynomialVectorField(model, ['x2**2', '1'], 'X2')]
    system = SdeSystem(model, fields, np.array([0.2, -0.1]), kind='generic', name='quadratic-flat')
    driver = sample_drivers(2, 0.5, 0.01, 17, range(8))
    flow = simulate_jacobian_flow(system, driver)

    eps = 1e-5
    shift = eps * np.eye(2)[direction]
    plus = simulate_sde(replace(system, origin=system.origin + shift), driver).points
    minus = simulate_sde(replace(system, origin=system.origin - shift), driver).points
    central = (plus - minus) / (2.0 * eps)
    np.testing.assert_allclose(flow.points, simulate_sde(system, driver).points, atol=1e-12)
    np.testing.assert_allclose(flow.jacobian[..., direction], central, rtol=1e-6, atol=1e-6)


@pytest.mark.slow
def test_markov_property_of_projection_bm(sphere3):
    f = PolynomialScalarField(sphere3, 'x3')
    check = markov_consistency(sphere3, [0.0, 0.0, 1.0], f, s=0.5, t=0.5, dt=0.01,
                               n_paths=20000, n_restart=4000, seed=21)
    assert len(check.conditional) >= 3000
    assert check.consistent(n_sigma=4.0)
    # E_x[x3(Σ_t)] = e^{−t} x3(x)
    mean, stderr = check.restarted_mean
    assert mean == pytest.approx(np.exp(-0.5) * check.point[2], abs=4.0 * stderr + 0.01)


def test_markov_consistency_rejects_bad_band(sphere3):
    f = PolynomialScalarField(sphere3, 'x3')
    with pytest.raises(DriverError):
        markov_consistency(sphere3, [0.0, 0.0, 1.0], f, s=0.5, t=0.5, dt=0.1,
                           n_paths=10, seed=1, band=(0.6, 0.4))
    with pytest.raises(DriverError):
        markov_consistency(sphere3, [0.0, 0.0, 1.0], f, s=0.3, t=0.45, dt=0.25, n_paths=10, seed=1)
