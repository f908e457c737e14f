import pytest

from curved_wiener.config import (
    DEFAULT_TOLERANCES, NumericalTolerances, RunConfig, Settings, get_run_preset, get_settings, get_tolerances,
)
from curved_wiener.errors import UsageError


def test_tolerance_presets():
    assert get_tolerances() is DEFAULT_TOLERANCES
    strict = get_tolerances('strict')
    assert strict.frame_fail < DEFAULT_TOLERANCES.frame_fail
    loose = get_tolerances('loose', bochner_tol=0.5)
    assert loose.bochner_tol == 0.5
    assert loose.roundtrip_tol == 1e-4


def test_unknown_tolerance_preset():
    with pytest.raises(ValueError):
        get_tolerances('sloppy')


def test_tolerances_from_dict():
    tolerances = NumericalTolerances.from_dict({'cond_max': 1e8})
    assert tolerances.cond_max == 1e8
    assert NumericalTolerances.from_dict(tolerances.to_dict()) == tolerances
    with pytest.raises(ValueError):
        NumericalTolerances.from_dict({'no_such_tol': 1.0})


def test_settings_read_project_defaults():
    settings = get_settings()
    assert settings is get_settings()
    assert settings.get_default('n_sub') == 4
    assert settings.tolerances == DEFAULT_TOLERANCES


def test_settings_without_config_file(tmp_path):
    settings = Settings(str(tmp_path / 'missing.yaml'))
    assert settings.get_default('paths') == 10_000
    assert settings.default_seed() == 0


def test_settings_tolerance_overrides(tmp_path):
    config_path = tmp_path / 'config.yaml'
    config_path.write_text("defaults:\n  seed: 3\ntolerances:\n  preset: loose\n  cond_max: 1.0e+6\n",
                           encoding='utf-8')
    settings = Settings(str(config_path))
    assert settings.default_seed() == 3
    assert settings.tolerances.cond_max == 1e6
    assert settings.tolerances.bochner_tol == get_tolerances('loose').bochner_tol


def test_seed_environment_variable(monkeypatch, tmp_path):
    settings = Settings(str(tmp_path / 'missing.yaml'))
    monkeypatch.setenv('CW_SEED', '123')
    assert settings.default_seed() == 123
    monkeypatch.setenv('CW_SEED', 'abc')
    with pytest.raises(ValueError):
        settings.default_seed()


def test_run_presets():
    assert get_run_preset('quick')['paths'] == 2_000
    preset = get_run_preset('acceptance')
    preset['paths'] = 1
    assert get_run_preset('acceptance')['paths'] == 100_000
    with pytest.raises(UsageError):
        get_run_preset('overnight')


def test_run_config_coercion():
    config = RunConfig.from_dict({'subcommand': 'malliavin', 'system': 'grushin', 't': '0.5',
                                  'epsilons': '0.1;0.01', 'deterministic': 'no', 'seed': 'none'})
    assert config.t == 0.5
    assert config.epsilons == [0.1, 0.01]
    assert config.deterministic is False
    assert config.seed is None
    config.validate()


@pytest.mark.parametrize('changes', [
    {'dt': 0.0},
    {'paths': 0},
    {'chunk_size': 1},
    {'workers': 0},
    {'t': -1.0},
    {'t0': 2.0},
    {'antithetic': True, 'paths': 3},
    {'seed': -1},
    {'subcommand': 'plot'},
    {'function': None},
])
def test_run_config_validation(changes):
    config = RunConfig(subcommand='bismut', manifold='cylinder', function='x3', t=1.0, t0=0.5, paths=4)
    config.validate()
    with pytest.raises(UsageError):
        config.with_(**changes).validate()


def test_run_config_rejects_bad_values():
    with pytest.raises(UsageError):
        RunConfig.from_dict({'subcommand': 'heat', 'paths': 'many'})
    with pytest.raises(UsageError):
        RunConfig.from_dict({'subcommand': 'heat', 'colour': 'blue'})
    with pytest.raises(UsageError):
        RunConfig.from_metadata({'seed': 1})
