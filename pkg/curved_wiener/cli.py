"""
Command-line front end
curved-wiener 명령행 인터페이스 (설정 파싱, 서브커맨드 실행, CSV 출력)
"""

import argparse
import contextlib
import json
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .config.run_settings import RunConfig, SUBCOMMANDS, get_run_preset, normalize_key
from .config.settings import get_settings
from .config.tolerances import NumericalTolerances, get_tolerances
from .development.rolling import EuclideanPath, antidevelop, develop
from .errors import CurvedWienerError, UsageError
from .estimators.engine import McParams, MonteCarloEngine, PathJob
from .estimators.gradient import bismut_gradient, elworthy_li_gradient, heat_expectation
from .estimators.ibp import CylinderFunction, clark_ocone_check, ibp_residual
from .geometry.checks import geometry_check
from .geometry.fields import PolynomialScalarField
from .malliavin.brackets import bracket_table, hormander_rank
from .malliavin.covariance import nondegeneracy_report
from .malliavin.systems import SystemFactory, make_system
from .manifold.factory import make_manifold
from .manifold.model import ManifoldModel, TangentVector
from .sde.driver import CameronMartinPath, sample_drivers
from .sde.simulate import simulate_development_bm, simulate_projection_bm
from .sde.system import projection_bm_system
from .transport.parallel import orthogonality_drift, parallel_transport, holonomy, splitting_defect
from .transport.paths import DiscretePath, latitude_loop
from .utils.storage import read_table, write_results
from .utils.validation import steps_for_horizon

# config.yaml defaults 블록에서 RunConfig 로 옮기는 키
_SETTINGS_KEYS = ('dt', 'paths', 'chunk_size', 'workers', 'deterministic', 'n_sub')

# 결과 헤더에 기록하지 않는 실행 전용 키 (워커 수와 무관한 바이트 동일 출력)
_UNRECORDED_KEYS = ('workers', 'out')


class _ArgumentParser(argparse.ArgumentParser):
    """사용 오류를 sys.exit 대신 UsageError 로 전달"""

    def error(self, message):
        raise UsageError(message)


def _common_arguments() -> argparse.ArgumentParser:
    parent = _ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    target = parent.add_argument_group('대상')
    target.add_argument('--manifold', help="다양체 스펙 (예: sphere:N=3,rho=1)")
    target.add_argument('--system', help=f"내장 SDE 계 ({', '.join(SystemFactory.available())})")
    target.add_argument('--origin', help="시작점 좌표 (쉼표 구분)")
    target.add_argument('--function', help="스칼라장 / 원통 함수 다항식 (예: x3)")
    target.add_argument('--direction', help="T_oM 기저 좌표 방향 (쉼표 구분)")
    target.add_argument('--cylinder-times', help="원통 함수 시각 (쉼표 구분)")
    target.add_argument('--path', help="transport 입력 경로 CSV (열 t, x1..xN)")
    target.add_argument('--driver', help="develop 구동 경로 CSV (열 t, b1..bd, b(0) = 0)")

    numeric = parent.add_argument_group('수치 파라미터')
    numeric.add_argument('--t', type=float)
    numeric.add_argument('--t0', type=float)
    numeric.add_argument('--dt', type=float)
    numeric.add_argument('--paths', type=int)
    numeric.add_argument('--samples', type=int)
    numeric.add_argument('--level', type=int)
    numeric.add_argument('--epsilons', help="임계값 목록 (쉼표 구분)")
    numeric.add_argument('--dim', type=int)
    numeric.add_argument('--latitude', type=float, help="위도 루프 극각 φ (라디안)")
    numeric.add_argument('--method', choices=['projection', 'development'])
    numeric.add_argument('--emit', choices=['endpoints', 'paths'], help="simulate 출력: 끝점 또는 경로 전체")
    numeric.add_argument('--n-sub', type=int)
    numeric.add_argument('--tolerances', help="허용오차 프리셋 (default, strict, loose)")

    run = parent.add_argument_group('실행')
    run.add_argument('--config', help="설정 파일 (key=value, YAML 또는 JSON)")
    run.add_argument('--preset', help="실행 프리셋 (quick, acceptance)")
    run.add_argument('--seed', type=int)
    run.add_argument('--out', help="출력 CSV 경로 (없으면 stdout)")
    run.add_argument('--workers', type=int)
    run.add_argument('--chunk-size', type=int)
    run.add_argument('--deterministic', dest='deterministic', action='store_true')
    run.add_argument('--streaming', dest='deterministic', action='store_false')
    run.add_argument('--antithetic', action='store_true')
    run.add_argument('--ricci-velocity-variant', action='store_true',
                     help="부분적분 가중치의 Ricci 항에 h′ 를 쓰는 변형")
    return parent


def build_parser() -> argparse.ArgumentParser:
    """서브커맨드 파서 생성"""
    parser = _ArgumentParser(prog='curved-wiener', description='Geometry and stochastic calculus on embedded manifolds')
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest='subcommand')
    parent = _common_arguments()
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[parent], argument_default=argparse.SUPPRESS)
    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """
    실행 설정 파일 로드

    JSON 문서, YAML 매핑, 또는 한 줄에 하나의 key=value ('#' 주석) 를 받는다.

    Raises:
        UsageError: 파일이 없거나 형식이 잘못된 경우
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise UsageError(f"설정 파일을 읽을 수 없습니다: {path} ({e})")

    stripped = text.strip()
    if stripped.startswith('{'):
        try:
            loaded = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise UsageError(f"JSON 설정 파싱 오류 ({path}): {e}")
    elif path.endswith(('.yaml', '.yml')):
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise UsageError(f"YAML 설정 파싱 오류 ({path}): {e}")
    else:
        loaded = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            if not sep or not key.strip():
                raise UsageError(f"{path}:{number}: key=value 형식이 아닙니다: {line!r}")
            loaded[key.strip()] = value.strip()
    if not isinstance(loaded, dict):
        raise UsageError(f"설정 파일은 매핑이어야 합니다: {path}")
    return loaded


def parse_config(argv: Sequence[str], config_file: Optional[str] = None) -> RunConfig:
    """
    명령행 인자와 설정 파일로 RunConfig 생성

    우선순위: 플래그 > 설정 파일 > 프리셋 > config.yaml > 데이터클래스 기본값.
    시드가 어디에도 없으면 CW_SEED, 그다음 config.yaml 의 seed 를 쓴다.

    Args:
        argv: 서브커맨드로 시작하는 인자 목록
        config_file: 설정 파일 경로 (--config 가 우선)

    Returns:
        RunConfig: 검증된 설정

    Raises:
        UsageError: 알 수 없는 키, 잘못된 값, 누락된 필수 옵션
    """
    namespace = vars(build_parser().parse_args(list(argv)))
    subcommand = namespace.pop('subcommand', None)
    if subcommand is None:
        raise UsageError(f"서브커맨드가 필요합니다 ({', '.join(SUBCOMMANDS)})")
    config_file = namespace.pop('config', config_file)
    preset = namespace.pop('preset', None)

    settings = get_settings()
    values: Dict[str, Any] = {k: settings.get_default(k) for k in _SETTINGS_KEYS if settings.get_default(k) is not None}
    if preset is not None:
        values.update(get_run_preset(preset))
    if config_file is not None:
        values.update({normalize_key(k): v for k, v in load_config_file(config_file).items()})
    values.update(namespace)
    values['subcommand'] = subcommand

    config = RunConfig.from_dict(values)
    if config.seed is None:
        try:
            config.seed = settings.default_seed()
        except ValueError as e:
            raise UsageError(str(e))
    return config.validate()


# ----------------------------------------------------------------------
# 실행 보조
# ----------------------------------------------------------------------
def _tolerances(config: RunConfig) -> NumericalTolerances:
    if config.tolerances == 'default':
        return get_settings().tolerances
    try:
        return get_tolerances(config.tolerances)
    except ValueError as e:
        raise UsageError(str(e))


def _model(config: RunConfig) -> ManifoldModel:
    return make_manifold(config.manifold, tolerances=_tolerances(config))


def _origin(model: ManifoldModel, config: RunConfig) -> np.ndarray:
    if config.origin is None:
        return model.origin()
    return model.check_on_manifold(np.array(config.origin, dtype=float), what='--origin')


def _tangent_direction(model: ManifoldModel, origin: np.ndarray, config: RunConfig) -> np.ndarray:
    """--direction (T_oM 기저 좌표) 를 주변 벡터로"""
    coords = np.array(config.direction, dtype=float)
    if coords.shape != (model.manifold_dim,):
        raise UsageError(f"--direction 은 d={model.manifold_dim} 개 성분이어야 합니다: {config.direction}")
    return model.tangent_basis(origin) @ coords


def _params(config: RunConfig) -> McParams:
    return McParams(dt=config.dt, n_paths=config.paths, seed=config.seed,
                    n_sub=config.n_sub, antithetic=config.antithetic)


def _engine(config: RunConfig) -> MonteCarloEngine:
    return MonteCarloEngine(workers=config.workers, chunk_size=config.chunk_size,
                            deterministic=config.deterministic)


def _quantity_frame(items: Sequence[Tuple[str, float]]) -> pd.DataFrame:
    return pd.DataFrame({'quantity': [k for k, _ in items], 'value': [float(v) for _, v in items]})


class SimulationJob(PathJob):
    """
    경로별 브라운 운동 시뮬레이션 출력

    emit='endpoints' 는 끝점 x, 역전개 b(T), 최대 제약 위반 한 행,
    emit='paths' 는 격자점마다 (x, b) 를 이어 붙인 한 행을 돌려준다.
    """

    def __init__(self, model: ManifoldModel, origin: np.ndarray, t: float, params: McParams,
                 method: str, emit: str = 'endpoints'):
        self.model, self.origin, self.t, self.params, self.method, self.emit = model, origin, t, params, method, emit
        self.antithetic = False
        self.labels = ([f"x{i + 1}" for i in range(model.ambient_dim)]
                       + [f"b{i + 1}" for i in range(model.manifold_dim)])
        if emit == 'endpoints':
            self.labels.append('max_violation')

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p, model = self.params, self.model
        if self.method == 'development':
            driver = sample_drivers(model.manifold_dim, self.t, p.dt, p.seed, path_indices)
            path = simulate_development_bm(model, self.origin, driver, n_sub=p.n_sub)
        else:
            driver = sample_drivers(model.ambient_dim, self.t, p.dt, p.seed, path_indices)
            path = simulate_projection_bm(model, self.origin, driver, n_sub=p.n_sub)
        if self.emit == 'paths':
            rows = np.concatenate([path.points, path.antidev], axis=-1)     # (P, K+1, N+d)
            return rows.reshape(path.n_paths, -1)
        violation = np.max(model.constraint_residual(path.points), axis=1) if model.codim else np.zeros(path.n_paths)
        return np.column_stack([path.points[:, -1], path.antidev[:, -1], violation])


# ----------------------------------------------------------------------
# 서브커맨드
# ----------------------------------------------------------------------
Handler = Callable[[RunConfig, MonteCarloEngine], Tuple[pd.DataFrame, Dict[str, Any]]]


def _run_geometry_check(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    table = geometry_check(model, samples=config.samples, seed=config.seed)
    n_failed = int((~table['passed']).sum())
    print(f"📊 기하 점검: {len(table)} 행, 실패 {n_failed}")
    return table, {'spec': model.spec, 'n_failed': n_failed}


def _run_transport(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    if config.path is not None:
        return _transport_path_file(model, config.path)
    if config.latitude is not None:
        steps = max(int(round(2.0 * np.pi / config.dt)), 4)
        loop = latitude_loop(model, config.latitude, steps=steps)
        angle = holonomy(model, loop)
        E0 = model.tangent_basis(loop.points[0])
        orientation = np.sign(np.linalg.det(np.column_stack([E0, loop.points[0]])))
        expected = float(np.mod(orientation * 2.0 * np.pi * (1.0 - np.cos(config.latitude)), 2.0 * np.pi))
        gap = abs(angle - expected)
        error = min(gap, 2.0 * np.pi - gap)
        frame = _quantity_frame([('holonomy', angle), ('expected', expected), ('error', error)])
        return frame, {'spec': model.spec, 'steps': steps}

    if config.direction is None or config.t is None:
        raise UsageError("transport: --path, --latitude 또는 --direction 과 --t 가 필요합니다")
    origin = _origin(model, config)
    coords = np.array(config.direction, dtype=float)
    _tangent_direction(model, origin, config)
    K = _steps(config.t, config.dt)
    times = np.linspace(0.0, config.t, K + 1)
    b = EuclideanPath(times, times[:, None] * coords[None, :])
    path, developed = develop(model, origin, b)
    transport = parallel_transport(model, path, reorth_every=0)
    E0 = model.tangent_basis(origin)
    mismatch = float(np.max(np.abs((transport.frames - developed.frames) @ E0)))
    frame = _quantity_frame([
        ('orthogonality_drift', orthogonality_drift(transport.frames)),
        ('splitting_defect', splitting_defect(model, path, transport)),
        ('development_frame_mismatch', mismatch),
    ])
    return frame, {'spec': model.spec, 'origin': origin}


def _transport_path_file(model: ManifoldModel, source: str):
    """입력 경로 CSV (t, x1..xN) 를 따라 평행이동하고 행마다 u11..uNN 을 붙인다"""
    N = model.ambient_dim
    coords = [f"x{i + 1}" for i in range(N)]
    table = read_table(source, ['t'] + coords)
    path = DiscretePath(table['t'].to_numpy(), table[coords].to_numpy())
    transport = parallel_transport(model, path)
    frame = table.copy()
    flat = transport.frames.reshape(len(frame), N * N)
    for i in range(N):
        for j in range(N):
            frame[f"u{i + 1}{j + 1}"] = flat[:, i * N + j]
    drift = orthogonality_drift(transport.frames)
    print(f"📊 평행이동: {path.n_steps} 스텝, 직교성 이탈 {drift:.3e}")
    return frame, {'spec': model.spec, 'source': source, 'orthogonality_drift': drift,
                   'splitting_defect': splitting_defect(model, path, transport)}


def _steps(t: float, dt: float) -> int:
    try:
        return steps_for_horizon(t, dt)
    except ValueError as e:
        raise UsageError(str(e))


def _driver_path(model: ManifoldModel, config: RunConfig) -> EuclideanPath:
    """--driver CSV (t, b1..bd) 또는 --direction 과 --t 의 직선"""
    d = model.manifold_dim
    if config.driver is not None:
        labels = [f"b{i + 1}" for i in range(d)]
        table = read_table(config.driver, ['t'] + labels)
        return EuclideanPath(table['t'].to_numpy(), table[labels].to_numpy())
    coords = np.array(config.direction, dtype=float)
    K = _steps(config.t, config.dt)
    times = np.linspace(0.0, config.t, K + 1)
    return EuclideanPath(times, times[:, None] * coords[None, :])


def _run_develop(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    origin = _origin(model, config)
    if config.driver is None:
        _tangent_direction(model, origin, config)
    b = _driver_path(model, config)
    path, _ = develop(model, origin, b)
    back = antidevelop(model, path)
    roundtrip = float(np.max(np.abs(back.values - b.values)))
    closure = float(np.linalg.norm(path.points[-1] - origin))
    frame = pd.DataFrame({'t': b.times})
    for i in range(model.ambient_dim):
        frame[f"x{i + 1}"] = path.points[:, i]
    for i in range(model.manifold_dim):
        frame[f"b{i + 1}"] = b.values[:, i]
        frame[f"b_roundtrip{i + 1}"] = back.values[:, i]
    print(f"📊 전개 왕복 오차 {roundtrip:.3e}, 끝점 간격 {closure:.3e}")
    return frame, {'spec': model.spec, 'origin': origin, 'basis': back.basis,
                   'roundtrip_error': roundtrip, 'closure_gap': closure}


def _run_simulate(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    origin = _origin(model, config)
    params = _params(config).with_(antithetic=False)
    K = _steps(config.t, config.dt)
    job = SimulationJob(model, origin, config.t, params, config.method, config.emit)
    values = engine.collect(job, config.paths)
    extra = {'spec': model.spec, 'origin': origin, 'method': config.method, 'emit': config.emit,
             'basis': model.tangent_basis(origin)}
    if config.emit == 'paths':
        # 경로마다 K+1 행, (path_index, t) 순서
        rows = values.reshape(config.paths * (K + 1), -1)
        frame = pd.DataFrame(rows, columns=job.labels)
        frame.insert(0, 't', np.tile(np.arange(K + 1) * (config.t / K), config.paths))
        frame.insert(0, 'path_index', np.repeat(np.arange(config.paths), K + 1))
        violation = np.max(model.constraint_residual(rows[:, :model.ambient_dim])) if model.codim else 0.0
        return frame, {**extra, 'max_violation': float(violation)}
    frame = pd.DataFrame(values, columns=job.labels)
    frame.insert(0, 'path_index', np.arange(len(frame)))
    return frame, {**extra, 'max_violation': float(frame['max_violation'].max())}


def _run_heat(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    origin = _origin(model, config)
    f = PolynomialScalarField(model, config.function)
    estimate = heat_expectation(model, origin, f, config.t, _params(config), engine)
    return estimate.to_frame('heat'), {'spec': model.spec, 'origin': origin, **estimate.metadata}


def _run_bismut(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    origin = _origin(model, config)
    f = PolynomialScalarField(model, config.function)
    estimate = bismut_gradient(model, origin, f, config.t, config.t0, _params(config), engine)
    return estimate.to_frame('bismut'), {'spec': model.spec, 'origin': origin, **estimate.metadata}


def _run_elworthy_li(config: RunConfig, engine: MonteCarloEngine):
    if config.system:
        system = make_system(config.system, tolerances=_tolerances(config))
        model = system.model
        spec = config.system
    else:
        model = _model(config)
        system = projection_bm_system(model, _origin(model, config))
        spec = model.spec
    v = TangentVector(system.origin, _tangent_direction(model, system.origin, config))
    f = PolynomialScalarField(model, config.function)
    estimate = elworthy_li_gradient(system, v, f, config.t, config.t0, _params(config), engine)
    return estimate.to_frame('elworthy-li'), {'spec': spec, 'origin': system.origin, **estimate.metadata}


def _run_ibp(config: RunConfig, engine: MonteCarloEngine):
    model = _model(config)
    origin = _origin(model, config)
    T = config.t if config.t is not None else 1.0
    h = CameronMartinPath.linear(config.direction, T=1.0)
    F = CylinderFunction(config.cylinder_times or [T], config.function, model.ambient_dim)
    variant = 'velocity' if config.ricci_velocity_variant else 'position'
    estimate = ibp_residual(model, origin, h, F, T, _params(config), engine, variant=variant)
    return estimate.to_frame('ibp'), {'spec': model.spec, 'origin': origin, **estimate.metadata}


def _run_clark_ocone(config: RunConfig, engine: MonteCarloEngine):
    estimate = clark_ocone_check(config.function, config.dim, config.t, _params(config), engine)
    return estimate.to_frame('clark-ocone'), {'spec': f"flat:N={config.dim}", **estimate.metadata}


def _run_malliavin(config: RunConfig, engine: MonteCarloEngine):
    system = make_system(config.system, tolerances=_tolerances(config))
    report = hormander_rank(bracket_table(system, config.level), system.origin)
    print(f"📊 괄호 계수 {report.ranks}, 만족 여부 {report.satisfied}")
    frame = nondegeneracy_report(system, config.t, _params(config), config.epsilons, engine)
    frame.insert(0, 't', config.t)
    return frame, {'spec': config.system, 'ranks': list(report.ranks), 'satisfied': report.satisfied,
                   'level_achieved': report.level_achieved}


HANDLERS: Dict[str, Handler] = {
    'geometry-check': _run_geometry_check,
    'transport': _run_transport,
    'develop': _run_develop,
    'simulate': _run_simulate,
    'heat': _run_heat,
    'bismut': _run_bismut,
    'elworthy-li': _run_elworthy_li,
    'ibp': _run_ibp,
    'clark-ocone': _run_clark_ocone,
    'malliavin': _run_malliavin,
}


def build_metadata(config: RunConfig, extra: Dict[str, Any]) -> Dict[str, Any]:
    """결과 헤더 메타데이터 (타임스탬프 없음)"""
    recorded = {k: v for k, v in config.to_dict().items() if k not in _UNRECORDED_KEYS}
    metadata = {k: v for k, v in extra.items() if k not in ('estimator',)}
    metadata.update({
        'config': recorded,
        'subcommand': config.subcommand,
        'seed': config.seed,
        'dt': config.dt,
        'version': __version__,
    })
    return metadata


def run(config: RunConfig) -> int:
    """
    설정 실행 후 CSV 작성

    Returns:
        int: 종료 상태 (0 성공, 1 모듈 오류, 2 사용 오류)
    """
    # CSV 가 stdout 으로 나가면 진행 메시지는 stderr 로
    console = contextlib.redirect_stdout(sys.stderr) if config.out is None else contextlib.nullcontext()
    try:
        config.validate()
        with console:
            print(f"🚀 {config.subcommand} 실행 (seed={config.seed}, dt={config.dt})")
            frame, extra = HANDLERS[config.subcommand](config, _engine(config))
        write_results(frame, build_metadata(config, extra), config.out)
        if config.out is not None:
            print(f"✅ 결과 저장 완료: {config.out}")
        return 0
    except UsageError as e:
        print(f"❌ 사용 오류: {e}", file=sys.stderr)
        return 2
    except (CurvedWienerError, NotImplementedError, ValueError, np.linalg.LinAlgError) as e:
        print(f"❌ {config.subcommand} 실패 ({type(e).__name__}): {e}", file=sys.stderr)
        return 1


def main(argv: Optional[List[str]] = None) -> int:
    """메인 함수"""
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
    except UsageError as e:
        print(f"❌ 사용 오류: {e}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == '__main__':
    sys.exit(main())
