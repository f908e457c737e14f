"""
Brownian driving paths
시드 기반 브라운 구동 경로와 카메론-마틴 이동
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import DriverError
from ..utils.validation import steps_for_horizon


def stream_seed(seed: int, path_index: int) -> np.random.SeedSequence:
    """경로별 독립 난수 스트림 (master_seed, path_index)"""
    seed, path_index = int(seed), int(path_index)
    if seed < 0 or path_index < 0:
        raise DriverError(f"seed 와 path_index 는 음이 아니어야 합니다: seed={seed}, path_index={path_index}")
    return np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))


@dataclass
class CameronMartinPath:
    """
    구간별 선형 카메론-마틴 경로 h (h(0) = 0)

    Attributes:
        knots: (J,) 0 에서 시작하는 증가 시각
        values: (J, n) h(knots)
    """
    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.knots[0] != 0.0 or np.any(np.diff(self.knots) <= 0):
            raise DriverError("knots 는 0 에서 시작해 엄격히 증가해야 합니다")
        if np.any(self.values[0] != 0.0):
            raise DriverError("카메론-마틴 경로는 h(0) = 0 이어야 합니다")

    @classmethod
    def linear(cls, direction: Sequence[float], T: float = 1.0) -> 'CameronMartinPath':
        """h(t) = t·direction"""
        direction = np.asarray(direction, dtype=float)
        return cls(np.array([0.0, T]), np.vstack([np.zeros_like(direction), T * direction]))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __call__(self, t) -> np.ndarray:
        """h(t), 마지막 매듭 이후는 상수 연장"""
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.knots, self.values[:, i]) for i in range(self.dim)], axis=-1)

    def increments(self, times: np.ndarray) -> np.ndarray:
        """격자 증분 h(t_{k+1}) − h(t_k), shape (K, n)"""
        return np.diff(self(times), axis=0)

    def slopes(self, times: np.ndarray) -> np.ndarray:
        """격자 구간 기울기 h′_k, shape (K, n)"""
        return self.increments(times) / np.diff(times)[:, None]

    def energy(self) -> float:
        """카메론-마틴 노름 ∫|h′|² ds"""
        steps = np.diff(self.knots)
        return float(np.sum(np.sum(np.diff(self.values, axis=0) ** 2, axis=-1) / steps))

    def rescaled(self, T: float) -> 'CameronMartinPath':
        """[0,1] 위의 h 를 [0,T] 로 옮긴 sqrt(T)·h(t/T) (에너지 보존)"""
        return CameronMartinPath(self.knots * T, self.values * np.sqrt(T))


@dataclass
class DrivingPath:
    """
    균등 격자 위 브라운 증분 묶음

    Attributes:
        times: (K+1,) 균등 격자
        increments: (P, K, n) ΔB_k (이동 포함)
        seed: 마스터 시드
        path_indices: (P,) 경로 번호
        shift: 카메론-마틴 이동 h (없으면 None)
        antithetic: 대칭 변량 짝짓기 사용 여부
    """
    times: np.ndarray
    increments: np.ndarray
    seed: int = 0
    path_indices: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=int))
    shift: Optional[CameronMartinPath] = None
    antithetic: bool = False

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]

    @property
    def dim(self) -> int:
        return self.increments.shape[2]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def values(self) -> np.ndarray:
        """B(t_k), shape (P, K+1, n), B(0) = 0"""
        zeros = np.zeros((self.n_paths, 1, self.dim))
        return np.concatenate([zeros, np.cumsum(self.increments, axis=1)], axis=1)

    def coarsen(self, factor: int) -> 'DrivingPath':
        """증분을 factor 개씩 합친 거친 격자 구동 경로 (같은 브라운 경로)"""
        factor = int(factor)
        if factor < 1 or self.n_steps % factor:
            raise DriverError(f"factor={factor} 가 스텝 수 {self.n_steps} 를 나누지 않습니다")
        blocks = self.increments.reshape(self.n_paths, self.n_steps // factor, factor, self.dim)
        return replace(self, times=self.times[::factor], increments=blocks.sum(axis=2))

    def variance_self_test(self, n_sigma: float = 4.0) -> bool:
        """이동을 제외한 증분의 표본분산이 dt 와 통계적으로 일치하는지"""
        noise = self.increments - (self.shift.increments(self.times)[None] if self.shift is not None else 0.0)
        count = noise.size
        if count < 2:
            return True
        var = float(np.var(noise))
        return abs(var - self.dt) <= n_sigma * self.dt * np.sqrt(2.0 / count)


def sample_drivers(n: int, T: float, dt: float, seed: int, path_indices: Sequence[int],
                   h: Optional[CameronMartinPath] = None, antithetic: bool = False) -> DrivingPath:
    """
    경로 번호 목록에 대한 구동 경로 생성 (경로별 독립 스트림)

    Args:
        n: 브라운 운동 차원
        T: 시간 지평
        dt: 스텝 (T 를 나누어야 함)
        seed: 마스터 시드
        path_indices: 경로 번호
        h: 카메론-마틴 이동 (증분에 h′·dt 를 더함)
        antithetic: True 면 홀수 번호 경로가 직전 짝수 경로의 부호 반전

    Returns:
        DrivingPath: (P, K, n) 증분
    """
    if n < 1:
        raise DriverError(f"n 은 1 이상이어야 합니다: {n}")
    try:
        K = steps_for_horizon(T, dt)
    except ValueError as e:
        raise DriverError(str(e))
    times = np.arange(K + 1) * (T / K)
    indices = np.asarray(list(path_indices), dtype=np.int64)
    increments = np.empty((len(indices), K, n))
    root = np.sqrt(T / K)
    for row, index in enumerate(indices):
        base, sign = (int(index) // 2, -1.0 if index % 2 else 1.0) if antithetic else (int(index), 1.0)
        rng = np.random.default_rng(stream_seed(seed, base))
        increments[row] = sign * root * rng.standard_normal((K, n))
    if h is not None:
        if h.dim != n:
            raise DriverError(f"이동 h 의 차원 {h.dim} ≠ n={n}")
        increments += h.increments(times)[None]
    return DrivingPath(times, increments, seed=int(seed), path_indices=indices, shift=h, antithetic=antithetic)


def sample_driver(n: int, T: float, dt: float, seed: int, path_index: int = 0,
                  h: Optional[CameronMartinPath] = None) -> DrivingPath:
    """단일 경로 구동 경로"""
    return sample_drivers(n, T, dt, seed, [path_index], h=h)
