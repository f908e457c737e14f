"""
Run configuration for the command-line front end
CLI 실행 설정 (RunConfig) 과 프리셋
"""

from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

from ..errors import UsageError

SUBCOMMANDS = (
    'geometry-check', 'transport', 'develop', 'simulate', 'heat', 'bismut',
    'elworthy-li', 'ibp', 'clark-ocone', 'malliavin',
)

# 서브커맨드별 필수 키
REQUIRED_KEYS: Dict[str, List[str]] = {
    'geometry-check': ['manifold'],
    'transport': ['manifold'],
    'develop': ['manifold'],
    'simulate': ['manifold', 't'],
    'heat': ['manifold', 'function', 't'],
    'bismut': ['manifold', 'function', 't', 't0'],
    'elworthy-li': ['function', 't', 't0', 'direction'],
    'ibp': ['manifold', 'function', 'direction'],
    'clark-ocone': ['function', 't'],
    'malliavin': ['system', 't'],
}

SIMULATION_METHODS = ('projection', 'development')
EMIT_MODES = ('endpoints', 'paths')


def _float_list(value) -> List[float]:
    if isinstance(value, str):
        value = [v for v in value.replace(';', ',').split(',') if v.strip()]
    if isinstance(value, (int, float)):
        value = [value]
    return [float(v) for v in value]


def _bool(value) -> bool:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(f"불리언이 아닙니다: {value!r}")
    return bool(value)


def _optional(cast):
    def convert(value):
        if value is None or (isinstance(value, str) and value.strip().lower() in ('', 'none', 'null')):
            return None
        return cast(value)
    return convert


@dataclass
class RunConfig:
    """CLI 실행 설정 클래스"""

    # 대상
    subcommand: str = ''
    manifold: Optional[str] = None           # 다양체 스펙 문자열
    system: Optional[str] = None             # 내장 SDE 계 이름
    origin: Optional[List[float]] = None     # 시작점 (없으면 모델 기본점)
    function: Optional[str] = None           # 스칼라장 / 원통 함수 다항식
    direction: Optional[List[float]] = None  # T_oM 기저 좌표 방향
    cylinder_times: Optional[List[float]] = None
    path: Optional[str] = None               # transport 입력 경로 CSV (t, x1..xN)
    driver: Optional[str] = None             # develop 구동 경로 CSV (t, b1..bd)

    # 수치 파라미터
    t: Optional[float] = None
    t0: Optional[float] = None
    dt: float = 1e-3
    paths: int = 10_000
    samples: int = 100
    level: int = 2
    epsilons: List[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
    dim: int = 1                             # clark-ocone 브라운 운동 차원
    latitude: Optional[float] = None         # transport 위도 루프 극각
    method: str = 'projection'               # simulate 구성 방식
    emit: str = 'endpoints'                  # simulate 출력 (endpoints, paths)
    n_sub: int = 4
    tolerances: str = 'default'

    # 실행
    seed: Optional[int] = None
    out: Optional[str] = None
    workers: Optional[int] = None
    chunk_size: int = 1000
    deterministic: bool = True
    antithetic: bool = False
    ricci_velocity_variant: bool = False

    def validate(self) -> 'RunConfig':
        """
        설정 검증

        Raises:
            UsageError: 잘못된 값이나 누락된 필수 키
        """
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"알 수 없는 서브커맨드: {self.subcommand!r} (사용 가능: {', '.join(SUBCOMMANDS)})")
        missing = [k for k in REQUIRED_KEYS[self.subcommand] if getattr(self, k) in (None, '', [])]
        if self.subcommand == 'elworthy-li' and not (self.manifold or self.system):
            missing.append('manifold')
        if self.subcommand == 'develop' and self.driver is None:
            missing.extend(k for k in ('direction', 't') if getattr(self, k) in (None, []))
        if missing:
            flags = ', '.join(f"--{k.replace('_', '-')}" for k in missing)
            raise UsageError(f"{self.subcommand}: 필수 옵션 누락 {flags}")
        if self.dt <= 0:
            raise UsageError(f"dt 는 양수여야 합니다: {self.dt}")
        if self.paths < 1:
            raise UsageError(f"paths 는 1 이상이어야 합니다: {self.paths}")
        if self.samples < 1:
            raise UsageError(f"samples 는 1 이상이어야 합니다: {self.samples}")
        if self.chunk_size < 2:
            raise UsageError(f"chunk_size 는 2 이상이어야 합니다: {self.chunk_size}")
        if self.workers is not None and self.workers < 1:
            raise UsageError(f"workers 는 1 이상이어야 합니다: {self.workers}")
        if self.t is not None and self.t <= 0:
            raise UsageError(f"t 는 양수여야 합니다: {self.t}")
        if self.t is not None and self.t0 is not None and not 0 < self.t0 <= self.t:
            raise UsageError(f"0 < t0 ≤ t 여야 합니다: t0={self.t0}, t={self.t}")
        if self.method not in SIMULATION_METHODS:
            raise UsageError(f"알 수 없는 method: {self.method} (사용 가능: {', '.join(SIMULATION_METHODS)})")
        if self.emit not in EMIT_MODES:
            raise UsageError(f"알 수 없는 emit: {self.emit} (사용 가능: {', '.join(EMIT_MODES)})")
        if self.antithetic and self.paths % 2:
            raise UsageError(f"antithetic 모드에서는 paths 가 짝수여야 합니다: {self.paths}")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise UsageError(f"seed 는 64비트 음이 아닌 정수여야 합니다: {self.seed}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """딕셔너리로 변환 (메타데이터 헤더 기록용)"""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def coerce(cls, key: str, value: Any) -> Any:
        """문자열/JSON 값을 필드 타입으로 변환"""
        key = normalize_key(key)
        if key not in _CONVERTERS:
            raise UsageError(f"알 수 없는 설정 키: {key}")
        try:
            return _CONVERTERS[key](value)
        except (TypeError, ValueError) as e:
            raise UsageError(f"설정 키 {key} 의 값이 잘못되었습니다: {value!r} ({e})")

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> 'RunConfig':
        """딕셔너리에서 설정 생성 (알 수 없는 키는 UsageError)"""
        return cls(**{normalize_key(k): cls.coerce(k, v) for k, v in config_dict.items()})

    @classmethod
    def from_metadata(cls, metadata: Dict[str, Any]) -> 'RunConfig':
        """결과 CSV 헤더의 'config' 항목에서 설정 재구성"""
        if 'config' not in metadata:
            raise UsageError("메타데이터에 config 항목이 없습니다")
        return cls.from_dict(metadata['config'])

    def with_(self, **changes) -> 'RunConfig':
        return replace(self, **changes)


def normalize_key(key: str) -> str:
    return str(key).strip().replace('-', '_')


_CONVERTERS = {
    'subcommand': str,
    'manifold': _optional(str),
    'system': _optional(str),
    'origin': _optional(_float_list),
    'function': _optional(str),
    'direction': _optional(_float_list),
    'cylinder_times': _optional(_float_list),
    'path': _optional(str),
    'driver': _optional(str),
    't': _optional(float),
    't0': _optional(float),
    'dt': float,
    'paths': int,
    'samples': int,
    'level': int,
    'epsilons': _float_list,
    'dim': int,
    'latitude': _optional(float),
    'method': str,
    'emit': str,
    'n_sub': int,
    'tolerances': str,
    'seed': _optional(int),
    'out': _optional(str),
    'workers': _optional(int),
    'chunk_size': int,
    'deterministic': _bool,
    'antithetic': _bool,
    'ricci_velocity_variant': _bool,
}

# 사전 정의된 실행 프리셋 (수치 파라미터만)
QUICK_PRESET = {
    'dt': 1e-2,
    'paths': 2_000,
    'samples': 20,
    'chunk_size': 500,
}

ACCEPTANCE_PRESET = {
    'dt': 1e-3,
    'paths': 100_000,
    'samples': 100,
    'chunk_size': 1000,
}

RUN_PRESETS = {
    'quick': QUICK_PRESET,
    'acceptance': ACCEPTANCE_PRESET,
}


def get_run_preset(preset: str) -> Dict[str, Any]:
    """
    프리셋 이름으로 실행 파라미터 반환

    Args:
        preset: 'quick', 'acceptance'

    Returns:
        dict: RunConfig 키와 값
    """
    if preset not in RUN_PRESETS:
        available = ', '.join(RUN_PRESETS.keys())
        raise UsageError(f"Unknown run preset: {preset}. Available presets: {available}")
    return dict(RUN_PRESETS[preset])
