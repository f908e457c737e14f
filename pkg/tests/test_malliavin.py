from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from curved_wiener.errors import EstimatorError, ManifoldSpecError, NonPolynomialError
from curved_wiener.estimators import McParams
from curved_wiener.malliavin import (
    SystemFactory, bracket_table, check_fraction_monotone, check_monotone_in_time, hormander_rank, make_system,
    nondegeneracy_report, reduced_covariance, reduced_covariance_path,
)
from curved_wiener.manifold import make_manifold
from curved_wiener.sde import SdeSystem, projection_bm_system, sample_drivers


def test_heisenberg_needs_one_bracket():
    system = make_system('heisenberg')
    report = hormander_rank(bracket_table(system, 2), system.origin)
    assert report.ranks == (2, 3)
    assert report.satisfied
    assert report.level_achieved == 2
    assert report.dimension == 3


def test_heisenberg_without_brackets_is_not_enough():
    system = make_system('heisenberg')
    report = hormander_rank(bracket_table(system, 1), system.origin)
    assert report.ranks == (2,)
    assert not report.satisfied
    assert report.level_achieved is None


def test_degenerate_system_fails_condition():
    system = make_system('degenerate-2d')
    report = hormander_rank(bracket_table(system, 4), system.origin)
    assert set(report.ranks) == {1}
    assert not report.satisfied


def test_grushin_at_origin():
    system = make_system('grushin')
    report = hormander_rank(bracket_table(system, 3), system.origin)
    assert report.ranks[0] == 1
    assert report.level_achieved == 2
    frame = report.to_frame()
    assert list(frame['satisfied']) == [False, True, True]


def test_bracket_table_generations_and_provenance():
    table = bracket_table(make_system('heisenberg'), 2)
    assert len(table.generation(1)) == 2
    assert len(table.generation(2)) == 2 + 4
    frame = table.to_frame(np.zeros(3))
    assert list(frame.columns) == ['level', 'provenance', 'value']
    assert '[X2,X1]' in set(frame['provenance'])
    assert table.torsion_residual(np.array([0.4, -0.1, 2.0])) <= 1e-12


def test_bracket_table_torsion_on_sphere():
    system = make_system('elliptic-sphere')
    table = bracket_table(system, 2)
    assert table.torsion_residual(system.origin) <= 1e-10


@pytest.mark.parametrize('level', [0, 5])
def test_bracket_level_out_of_range(level):
    with pytest.raises(ValueError):
        bracket_table(make_system('heisenberg'), level)


def test_bracket_table_requires_polynomial_fields():
    model = make_manifold('cylinder')
    with pytest.raises(NonPolynomialError):
        bracket_table(projection_bm_system(model, model.origin()), 2)


def test_elliptic_flat_covariance_is_time_identity():
    system = make_system('elliptic-flat')
    driver = sample_drivers(2, 1.0, 0.01, 3, range(4))
    sample = reduced_covariance(system, driver, t=0.5)
    np.testing.assert_allclose(sample.covariance, np.broadcast_to(0.5 * np.eye(2), (4, 2, 2)), atol=1e-12)
    assert sample.n_discarded == 0
    sample.check(system.model.tolerances.cov_tol)


def test_degenerate_covariance_is_singular():
    system = make_system('degenerate-2d')
    sample = reduced_covariance(system, sample_drivers(1, 1.0, 0.01, 5, range(3)))
    np.testing.assert_allclose(sample.determinant, 0.0, atol=1e-12)
    np.testing.assert_allclose(sample.eigenvalues[:, -1], 1.0, atol=1e-12)


def test_heisenberg_covariance_is_positive():
    system = make_system('heisenberg')
    sample = reduced_covariance(system, sample_drivers(2, 1.0, 0.01, 7, range(20)))
    sample.check(system.model.tolerances.cov_tol)
    assert np.all(sample.min_eigenvalue > 0.0)


def test_covariance_grows_in_time():
    system = make_system('heisenberg')
    driver = sample_drivers(2, 1.0, 0.01, 7, range(20))
    samples = reduced_covariance_path(system, driver, [0.25, 0.5, 1.0])
    assert [s.t for s in samples] == [0.25, 0.5, 1.0]
    gaps = check_monotone_in_time(samples, system.model.tolerances.cov_tol)
    assert gaps.shape == (2, 20)
    assert np.all(gaps > 0.0)
    # 한 번에 계산한 값과 같음
    single = reduced_covariance(system, driver, t=0.5)
    np.testing.assert_allclose(samples[1].covariance, single.covariance, atol=1e-12)


def test_covariance_decrease_detected():
    system = make_system('elliptic-flat')
    early, late = reduced_covariance_path(system, sample_drivers(2, 1.0, 0.01, 3, range(4)), [0.5, 1.0])
    swapped = [replace(late, t=0.5), replace(early, t=1.0)]
    with pytest.raises(EstimatorError, match='감소'):
        check_monotone_in_time(swapped, system.model.tolerances.cov_tol)


def test_covariance_times_must_increase():
    system = make_system('elliptic-flat')
    sample = reduced_covariance(system, sample_drivers(2, 1.0, 0.01, 3, range(2)))
    with pytest.raises(EstimatorError):
        check_monotone_in_time([sample, sample], system.model.tolerances.cov_tol)


def test_fraction_table_must_be_monotone():
    good = pd.DataFrame({'epsilon': [0.1, 0.01], 'frac_lambda_min': [0.5, 0.2], 'frac_det': [0.4, 0.4]})
    assert check_fraction_monotone(good) is good
    rising = good.assign(frac_det=[0.1, 0.3])
    with pytest.raises(EstimatorError, match='frac_det'):
        check_fraction_monotone(rising)
    ascending = good.assign(epsilon=[0.01, 0.1])
    with pytest.raises(EstimatorError, match='epsilon'):
        check_fraction_monotone(ascending)


def test_nondegeneracy_report(engine):
    params = McParams(dt=0.01, n_paths=40, seed=9)
    epsilons = [1e-4, 1e-1, 1e-2]
    frame = nondegeneracy_report(make_system('heisenberg'), 1.0, params, epsilons, engine)
    assert list(frame.columns) == ['epsilon', 'frac_lambda_min', 'frac_det', 'n_paths', 'n_discarded']
    assert list(frame['epsilon']) == [1e-1, 1e-2, 1e-4]
    assert np.all(np.diff(frame['frac_lambda_min']) <= 0)
    assert np.all(np.diff(frame['frac_det']) <= 0)
    assert frame['n_paths'].iloc[0] + frame['n_discarded'].iloc[0] == 40


def test_nondegeneracy_report_extremes(engine):
    params = McParams(dt=0.01, n_paths=10, seed=1)
    elliptic = nondegeneracy_report(make_system('elliptic-flat'), 1.0, params, engine=engine)
    assert (elliptic['frac_lambda_min'] == 0.0).all()
    degenerate = nondegeneracy_report(make_system('degenerate-2d'), 1.0, params, engine=engine)
    assert (degenerate['frac_lambda_min'] == 1.0).all()
    assert (degenerate['frac_det'] == 1.0).all()


def test_unknown_system():
    with pytest.raises(ManifoldSpecError):
        make_system('no-such-system')


def test_register_system():
    def shifted(tolerances):
        system = make_system('heisenberg', tolerances=tolerances)
        return SdeSystem(system.model, system.fields, np.array([1.0, 0.0, 0.0]), kind='generic', name='shifted')

    SystemFactory.register('shifted-heisenberg', shifted)
    try:
        assert 'shifted-heisenberg' in SystemFactory.available()
        np.testing.assert_allclose(make_system('shifted-heisenberg').origin, [1.0, 0.0, 0.0])
    finally:
        SystemFactory.unregister('shifted-heisenberg')
    assert 'shifted-heisenberg' not in SystemFactory.available()
