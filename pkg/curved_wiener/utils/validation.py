"""
Input validation utilities
입력 검증 유틸리티
"""

import numpy as np

from ..errors import PathError


def check_time_grid(times, name: str = 'times') -> np.ndarray:
    """유한하고 엄격히 증가하는 시간 격자인지 확인"""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise PathError(f"{name}: 2개 이상의 1차원 시간 격자가 필요합니다 (shape={times.shape})")
    if not np.all(np.isfinite(times)):
        raise PathError(f"{name}: 유한하지 않은 시간이 있습니다")
    if np.any(np.diff(times) <= 0):
        raise PathError(f"{name}: 시간 격자가 엄격히 증가하지 않습니다")
    return times


def check_positive(value, name: str) -> float:
    """양수 확인"""
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} 는 양수여야 합니다: {value}")
    return value


def grid_index(times: np.ndarray, t: float, name: str = 't') -> int:
    """
    시간 t 에 해당하는 격자 인덱스

    Raises:
        ValueError: t 가 격자점이 아닐 때
    """
    times = np.asarray(times, dtype=float)
    k = int(np.argmin(np.abs(times - t)))
    scale = max(1.0, abs(float(times[-1])))
    if abs(times[k] - t) > 1e-9 * scale:
        raise ValueError(f"{name}={t} 가 시간 격자 위에 있지 않습니다 (가장 가까운 점 {times[k]})")
    return k


def steps_for_horizon(T: float, dt: float) -> int:
    """T = K·dt 인 K 반환 (dt 가 T 를 나누지 않으면 ValueError)"""
    T = check_positive(T, 'T')
    dt = check_positive(dt, 'dt')
    K = int(round(T / dt))
    if K < 1 or abs(K * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"dt={dt} 가 T={T} 를 나누지 않습니다")
    return K
