import filecmp

import numpy as np
import pandas as pd
import pytest

from curved_wiener.cli import load_config_file, main, parse_config
from curved_wiener.config import RunConfig
from curved_wiener.errors import UsageError
from curved_wiener.sde import sample_drivers
from curved_wiener.utils.storage import read_metadata, read_results, read_table

SPHERE = 'sphere:N=3,rho=1'


def _heat_args(out, workers):
    return ['heat', '--manifold', SPHERE, '--function', 'x3', '--t', '0.2', '--dt', '0.05',
            '--paths', '40', '--chunk-size', '10', '--seed', '5', '--workers', str(workers), '--out', str(out)]


def test_precedence_flag_over_file_over_preset(tmp_path):
    config_file = tmp_path / 'run.cfg'
    config_file.write_text("# 실행 설정\ndt = 0.05\npaths = 300\n", encoding='utf-8')
    config = parse_config(['heat', '--manifold', SPHERE, '--function', 'x3', '--t', '1',
                           '--preset', 'quick', '--config', str(config_file), '--paths', '100'])
    assert config.paths == 100
    assert config.dt == 0.05
    assert config.samples == 20
    assert config.chunk_size == 500


def test_yaml_and_json_config_files(tmp_path):
    yaml_file = tmp_path / 'run.yaml'
    yaml_file.write_text("manifold: cylinder\nepsilons: [0.1, 0.01]\n", encoding='utf-8')
    assert load_config_file(str(yaml_file)) == {'manifold': 'cylinder', 'epsilons': [0.1, 0.01]}
    json_file = tmp_path / 'run.json'
    json_file.write_text('{"n-sub": 2}', encoding='utf-8')
    config = parse_config(['geometry-check', '--manifold', SPHERE], config_file=str(json_file))
    assert config.n_sub == 2


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv('CW_SEED', '42')
    assert parse_config(['geometry-check', '--manifold', SPHERE]).seed == 42
    assert parse_config(['geometry-check', '--manifold', SPHERE, '--seed', '7']).seed == 7


def test_seed_defaults_to_config_yaml():
    assert parse_config(['geometry-check', '--manifold', SPHERE]).seed == 0


def test_unknown_config_key_rejected(tmp_path):
    config_file = tmp_path / 'bad.cfg'
    config_file.write_text("speed = 3\n", encoding='utf-8')
    with pytest.raises(UsageError):
        parse_config(['geometry-check', '--manifold', SPHERE, '--config', str(config_file)])


def test_malformed_config_line_rejected(tmp_path):
    config_file = tmp_path / 'bad.cfg'
    config_file.write_text("just words\n", encoding='utf-8')
    with pytest.raises(UsageError):
        load_config_file(str(config_file))


@pytest.mark.parametrize('argv', [
    ['heat', '--manifold', SPHERE],
    ['heat', '--manifold', SPHERE, '--function', 'x3', '--t', '1', '--bogus', '1'],
    ['bismut', '--manifold', SPHERE, '--function', 'x3', '--t', '1', '--t0', '2'],
    ['simulate', '--manifold', SPHERE, '--t', '1', '--method', 'euler'],
    [],
])
def test_usage_errors_exit_with_two(argv):
    assert main(argv) == 2


def test_module_error_exits_with_one(tmp_path):
    argv = ['heat', '--manifold', SPHERE, '--function', 'sin(x1)', '--t', '0.1', '--dt', '0.05',
            '--paths', '4', '--out', str(tmp_path / 'out.csv')]
    assert main(argv) == 1


def test_results_reconstruct_config(tmp_path):
    out = tmp_path / 'heat.csv'
    assert main(_heat_args(out, workers=1)) == 0
    frame, metadata = read_results(str(out))
    assert list(frame.columns[:4]) == ['estimator', 'component', 'mean', 'stderr']
    assert metadata['seed'] == 5
    assert metadata['subcommand'] == 'heat'
    rebuilt = RunConfig.from_metadata(metadata)
    original = parse_config(_heat_args(out, workers=1))
    assert rebuilt == original.with_(workers=None, out=None)


def test_reruns_are_byte_identical_across_workers(tmp_path):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    assert main(_heat_args(first, workers=1)) == 0
    assert main(_heat_args(second, workers=2)) == 0
    assert filecmp.cmp(first, second, shallow=False)


def test_csv_to_stdout_keeps_progress_on_stderr(capsys):
    assert main(['geometry-check', '--manifold', SPHERE, '--samples', '2']) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith('# ')
    assert 'identity,sample,residual,tolerance,passed' in captured.out
    assert '🚀' in captured.err


def test_geometry_check_subcommand(tmp_path):
    out = tmp_path / 'geometry.csv'
    assert main(['geometry-check', '--manifold', 'cylinder', '--samples', '2', '--out', str(out)]) == 0
    frame, metadata = read_results(str(out))
    assert frame['passed'].all()
    assert metadata['n_failed'] == 0


def test_transport_holonomy_subcommand(tmp_path):
    out = tmp_path / 'holonomy.csv'
    argv = ['transport', '--manifold', SPHERE, '--latitude', str(np.pi / 3), '--dt', '0.001', '--out', str(out)]
    assert main(argv) == 0
    frame, _ = read_results(str(out))
    values = dict(zip(frame['quantity'], frame['value']))
    assert values['error'] <= 1e-5


def test_develop_subcommand(tmp_path):
    out = tmp_path / 'develop.csv'
    argv = ['develop', '--manifold', SPHERE, '--direction', '1,0', '--t', '1', '--dt', '0.01', '--out', str(out)]
    assert main(argv) == 0
    frame, metadata = read_results(str(out))
    assert metadata['roundtrip_error'] <= 1e-5
    np.testing.assert_allclose(frame['x1'] ** 2 + frame['x2'] ** 2 + frame['x3'] ** 2, 1.0, atol=1e-10)


def test_transport_path_file(tmp_path):
    s = np.linspace(0.0, 1.0, 201)
    source = tmp_path / 'arc.csv'
    pd.DataFrame({'t': s, 'x1': np.cos(s), 'x2': np.sin(s), 'x3': np.zeros_like(s)}).to_csv(source, index=False)
    out = tmp_path / 'transport.csv'
    assert main(['transport', '--manifold', SPHERE, '--path', str(source), '--out', str(out)]) == 0
    frame, metadata = read_results(str(out))
    labels = [f"u{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    assert list(frame.columns) == ['t', 'x1', 'x2', 'x3'] + labels
    frames = frame[labels].to_numpy().reshape(-1, 3, 3)
    np.testing.assert_allclose(frames[0], np.eye(3))
    # 대원을 따라 속도 (0, 1, 0) 은 평행하게 옮겨진다
    np.testing.assert_allclose(frames[-1] @ [0.0, 1.0, 0.0], [-np.sin(1.0), np.cos(1.0), 0.0], atol=1e-6)
    np.testing.assert_allclose(frames[-1] @ [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], atol=1e-6)
    assert metadata['orthogonality_drift'] <= 1e-8


def test_develop_driver_file(tmp_path, rng):
    times = np.linspace(0.0, 1.0, 201)
    values = np.vstack([np.zeros((1, 2)), np.cumsum(0.01 * rng.standard_normal((200, 2)), axis=0)])
    driver = tmp_path / 'driver.csv'
    pd.DataFrame({'t': times, 'b1': values[:, 0], 'b2': values[:, 1]}).to_csv(driver, index=False)
    out = tmp_path / 'develop.csv'
    assert main(['develop', '--manifold', SPHERE, '--origin', '1,0,0', '--driver', str(driver), '--out', str(out)]) == 0
    frame, metadata = read_results(str(out))
    assert metadata['roundtrip_error'] <= 1e-5
    np.testing.assert_allclose(frame[['b1', 'b2']].to_numpy(), values, atol=1e-15)
    np.testing.assert_allclose(frame[['x1', 'x2', 'x3']].iloc[0], [1.0, 0.0, 0.0])

    # 전개 결과는 그대로 transport 입력이 된다
    transported = tmp_path / 'transport.csv'
    assert main(['transport', '--manifold', SPHERE, '--path', str(out), '--out', str(transported)]) == 0


@pytest.mark.parametrize('argv', [
    ['develop', '--manifold', SPHERE],
    ['transport', '--manifold', SPHERE, '--path', 'no-such-file.csv'],
    ['simulate', '--manifold', SPHERE, '--t', '1', '--emit', 'frames'],
])
def test_file_interface_usage_errors(argv):
    assert main(argv) == 2


def test_input_table_missing_columns(tmp_path):
    driver = tmp_path / 'driver.csv'
    driver.write_text("t,b1\n0,0\n0.5,0.1\n", encoding='utf-8')
    with pytest.raises(UsageError):
        read_table(str(driver), ['t', 'b1', 'b2'])
    assert main(['develop', '--manifold', SPHERE, '--driver', str(driver)]) == 2


def test_simulate_subcommand(tmp_path):
    out = tmp_path / 'simulate.csv'
    argv = ['simulate', '--manifold', SPHERE, '--t', '0.2', '--dt', '0.05', '--paths', '6', '--out', str(out)]
    assert main(argv) == 0
    frame, metadata = read_results(str(out))
    assert list(frame.columns) == ['path_index', 'x1', 'x2', 'x3', 'b1', 'b2', 'max_violation']
    assert list(frame['path_index']) == list(range(6))
    assert frame['max_violation'].max() <= 1e-10
    assert metadata['emit'] == 'endpoints'
    assert np.array(metadata['basis']).shape == (3, 2)


def test_simulate_development_endpoints_carry_driver(tmp_path):
    out = tmp_path / 'simulate.csv'
    argv = ['simulate', '--manifold', SPHERE, '--t', '0.2', '--dt', '0.05', '--paths', '4', '--seed', '3',
            '--method', 'development', '--out', str(out)]
    assert main(argv) == 0
    frame, _ = read_results(str(out))
    driver = sample_drivers(2, 0.2, 0.05, 3, range(4))
    np.testing.assert_allclose(frame[['b1', 'b2']].to_numpy(), driver.values()[:, -1], atol=1e-12)


def test_simulate_emits_paths(tmp_path):
    out = tmp_path / 'paths.csv'
    argv = ['simulate', '--manifold', SPHERE, '--t', '0.2', '--dt', '0.05', '--paths', '3', '--seed', '4',
            '--emit', 'paths', '--out', str(out)]
    assert main(argv) == 0
    frame, metadata = read_results(str(out))
    assert list(frame.columns) == ['path_index', 't', 'x1', 'x2', 'x3', 'b1', 'b2']
    assert len(frame) == 3 * 5
    assert list(frame['path_index']) == [0] * 5 + [1] * 5 + [2] * 5
    np.testing.assert_allclose(frame['t'].iloc[:5], [0.0, 0.05, 0.1, 0.15, 0.2])
    starts = frame[frame['t'] == 0.0]
    np.testing.assert_allclose(starts[['x1', 'x2', 'x3']].to_numpy(), np.tile([0.0, 0.0, 1.0], (3, 1)), atol=1e-15)
    np.testing.assert_allclose(starts[['b1', 'b2']].to_numpy(), 0.0)
    assert metadata['max_violation'] <= 1e-10

    endpoints = tmp_path / 'endpoints.csv'
    assert main(argv[:-4] + ['--out', str(endpoints)]) == 0
    last = frame[frame['t'] == frame['t'].max()][['x1', 'x2', 'x3', 'b1', 'b2']].to_numpy()
    np.testing.assert_allclose(last, read_results(str(endpoints))[0][['x1', 'x2', 'x3', 'b1', 'b2']].to_numpy(),
                               atol=1e-15)


def test_malliavin_subcommand(tmp_path):
    out = tmp_path / 'malliavin.csv'
    argv = ['malliavin', '--system', 'heisenberg', '--t', '0.1', '--dt', '0.01', '--paths', '10',
            '--epsilons', '0.1,0.001', '--out', str(out)]
    assert main(argv) == 0
    frame = read_results(str(out))[0]
    metadata = read_metadata(str(out))
    assert metadata['ranks'] == [2, 3]
    assert metadata['level_achieved'] == 2
    assert list(frame['epsilon']) == [0.1, 0.001]


def test_clark_ocone_subcommand(tmp_path):
    out = tmp_path / 'clark.csv'
    argv = ['clark-ocone', '--function', 'x1**2', '--t', '1', '--dt', '0.01', '--paths', '20', '--out', str(out)]
    assert main(argv) == 0
    assert read_metadata(str(out))['spec'] == 'flat:N=1'
