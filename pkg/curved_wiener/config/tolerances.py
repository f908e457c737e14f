"""
Numerical tolerance settings
수치 허용오차 설정 관리
"""

from dataclasses import dataclass, asdict, fields, replace
from typing import Dict, Any


@dataclass(frozen=True)
class NumericalTolerances:
    """수치 허용오차 설정 클래스"""

    # 다양체 / 사영
    tol_F: float = 1e-10                 # 제약 잔차 (scale 배)
    proj_tol_analytic: float = 1e-9      # 해석적 dQ 사용 시
    proj_tol_fd: float = 1e-5            # 유한차분 dQ 사용 시
    tang_tol: float = 1e-8
    rank_tol: float = 1e-8               # F′ 최소 특이값
    fd_step: float = 6e-6                # dQ 중심차분 스텝 (scale 배)
    retract_basin: float = 0.5           # 수축 허용 잔차 (scale 배)
    max_retract_iters: int = 20
    retract_damping: float = 0.5

    # 기하
    curv_tol_analytic: float = 1e-8
    curv_tol_fd: float = 1e-4
    bochner_tol: float = 1e-3
    lap_tol: float = 1e-8
    bracket_tol: float = 1e-8
    grad_fd_step: float = 1e-4           # 다양체 위 함수의 수치 기울기 스텝

    # 평행이동 / 전개
    frame_tol: float = 1e-8
    frame_fail: float = 1e-4
    reorth_every: int = 16
    dev_tol: float = 1e-6
    roundtrip_tol: float = 1e-5
    flow_tol: float = 1e-8

    # 확률 / 말리아뱅
    wz_tol: float = 1e-10
    qv_tol: float = 6.0                  # sqrt(Δ) 배
    n_sub: int = 4                       # Wong-Zakai RK4 하위 스텝 수
    cov_tol: float = 1e-10
    cond_max: float = 1e12
    malliavin_rank_tol: float = 1e-8     # 최대 특이값 대비

    def proj_tol(self, finite_difference: bool) -> float:
        """dQ 계산 방식에 맞는 사영 허용오차"""
        return self.proj_tol_fd if finite_difference else self.proj_tol_analytic

    def curv_tol(self, finite_difference: bool) -> float:
        """dQ 계산 방식에 맞는 곡률 허용오차"""
        return self.curv_tol_fd if finite_difference else self.curv_tol_analytic

    def to_dict(self) -> Dict[str, Any]:
        """딕셔너리로 변환"""
        return asdict(self)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> 'NumericalTolerances':
        """딕셔너리에서 설정 생성 (알 수 없는 키는 ValueError)"""
        known = {f.name for f in fields(cls)}
        unknown = set(config_dict) - known
        if unknown:
            raise ValueError(f"알 수 없는 허용오차 키: {', '.join(sorted(unknown))}")
        return cls(**config_dict)


# 사전 정의된 설정들
DEFAULT_TOLERANCES = NumericalTolerances()

STRICT_TOLERANCES = NumericalTolerances(
    frame_fail=1e-6,
    reorth_every=8,
    cond_max=1e10,
)

LOOSE_TOLERANCES = NumericalTolerances(
    frame_fail=1e-3,
    curv_tol_fd=1e-3,
    bochner_tol=1e-2,
    roundtrip_tol=1e-4,
)

TOLERANCE_PRESETS = {
    'default': DEFAULT_TOLERANCES,
    'strict': STRICT_TOLERANCES,
    'loose': LOOSE_TOLERANCES,
}


def get_tolerances(preset: str = 'default', **overrides) -> NumericalTolerances:
    """
    프리셋 이름으로 허용오차 반환

    Args:
        preset: 'default', 'strict', 'loose'
        **overrides: 개별 값 덮어쓰기

    Returns:
        NumericalTolerances: 허용오차 설정
    """
    if preset not in TOLERANCE_PRESETS:
        available = ', '.join(TOLERANCE_PRESETS.keys())
        raise ValueError(f"Unknown tolerance preset: {preset}. Available presets: {available}")
    base = TOLERANCE_PRESETS[preset]
    return replace(base, **overrides) if overrides else base
