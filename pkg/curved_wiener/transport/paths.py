"""
Discrete paths and frame paths
이산 경로 / 프레임 경로 자료형과 속도 추정
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import PathError
from ..manifold.model import ManifoldModel
from ..utils.validation import check_time_grid


@dataclass
class DiscretePath:
    """
    다양체 위 이산 경로 σ(t_k)

    Attributes:
        times: (K+1,) 증가하는 시간 격자 (t_0 = 0 권장)
        points: (K+1, N) 다양체 위의 점
        velocities: (K+1, N) 접속도 (없으면 중심차분으로 추정)
        segment_velocities: (K, 2, N) 구간별 시작/끝 편측 속도 (꺾인 경로용, velocities 보다 우선)
    """
    times: np.ndarray
    points: np.ndarray
    velocities: Optional[np.ndarray] = None
    segment_velocities: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.velocities is not None:
            self.velocities = np.asarray(self.velocities, dtype=float)
        if self.segment_velocities is not None:
            self.segment_velocities = np.asarray(self.segment_velocities, dtype=float)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def validate(self, model: ManifoldModel) -> 'DiscretePath':
        """격자 단조성과 점의 다양체 소속 확인"""
        check_time_grid(self.times)
        if self.points.ndim != 2 or self.points.shape[0] != len(self.times):
            raise PathError(f"points shape {self.points.shape} 가 시간 격자 길이 {len(self.times)} 와 맞지 않습니다")
        model.check_on_manifold(self.points, what='경로의 점')
        if self.velocities is not None and self.velocities.shape != self.points.shape:
            raise PathError(f"velocities shape {self.velocities.shape} ≠ points shape {self.points.shape}")
        expected = (self.n_steps, 2, self.points.shape[1])
        if self.segment_velocities is not None and self.segment_velocities.shape != expected:
            raise PathError(f"segment_velocities shape {self.segment_velocities.shape} ≠ {expected}")
        return self

    @property
    def has_velocities(self) -> bool:
        return self.velocities is not None or self.segment_velocities is not None

    def with_velocities(self, model: ManifoldModel) -> 'DiscretePath':
        """속도가 없으면 추정해서 채운 경로 반환"""
        if self.has_velocities:
            return self
        return DiscretePath(self.times, self.points, velocities_from_points(model, self.times, self.points))

    def with_chord_velocities(self, model: ManifoldModel) -> 'DiscretePath':
        """
        속도가 없으면 구간 현(chord) (σ_{k+1} − σ_k)/h 를 양끝 접평면에 사영한 구간 속도를 채운다

        꺾인 점을 가로지르는 차분을 피하므로 구간별 선형 입력에 맞다.
        """
        if self.has_velocities:
            return self
        chords = np.diff(self.points, axis=0) / np.diff(self.times)[:, None]
        P = model.tangent_projection(self.points, check=False)
        start = np.einsum('kij,kj->ki', P[:-1], chords)
        end = np.einsum('kij,kj->ki', P[1:], chords)
        return DiscretePath(self.times, self.points, segment_velocities=np.stack([start, end], axis=1))

    def segment_ends(self) -> np.ndarray:
        """구간별 (시작, 끝) 속도, shape (K, 2, N)"""
        if self.segment_velocities is not None:
            return self.segment_velocities
        if self.velocities is None:
            raise PathError("속도가 없는 경로입니다; with_velocities 를 먼저 호출하세요")
        return np.stack([self.velocities[:-1], self.velocities[1:]], axis=1)

    def is_closed(self, tol: float) -> bool:
        return float(np.linalg.norm(self.points[-1] - self.points[0])) <= tol


@dataclass
class PathEnsemble:
    """공통 격자 위의 경로 묶음 points (P, K+1, N)"""
    times: np.ndarray
    points: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.points.shape[0]

    def path(self, index: int) -> DiscretePath:
        return DiscretePath(self.times, self.points[index])


@dataclass
class FramePath:
    """
    평행이동 프레임 u(t_k)

    Attributes:
        times: (K+1,) 시간 격자
        frames: (K+1, N, N) 직교 행렬
    """
    times: np.ndarray
    frames: np.ndarray

    def restricted(self, basis: np.ndarray) -> np.ndarray:
        """τ_{σ(0)}M 기저로 제한한 프레임 u(t_k) E0, shape (K+1, N, d)"""
        return self.frames @ basis


def velocities_from_points(model: ManifoldModel, times: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    점 열에서 접속도 추정

    등간격 격자(5점 이상)는 내부 4차 중심차분과 양끝 4차 편측차분,
    그 외에는 np.gradient 2차 차분을 쓰고 접평면으로 사영한다.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(points, dtype=float)
    K1 = len(times)
    if K1 < 2:
        raise PathError("속도 추정에는 2개 이상의 점이 필요합니다")
    steps = np.diff(times)
    uniform = np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)

    if uniform and K1 >= 5:
        h = steps[0]
        v = np.empty_like(x)
        v[2:-2] = (-x[4:] + 8.0 * x[3:-1] - 8.0 * x[1:-3] + x[:-4]) / (12.0 * h)
        v[0] = (-25.0 * x[0] + 48.0 * x[1] - 36.0 * x[2] + 16.0 * x[3] - 3.0 * x[4]) / (12.0 * h)
        v[1] = (-3.0 * x[0] - 10.0 * x[1] + 18.0 * x[2] - 6.0 * x[3] + x[4]) / (12.0 * h)
        v[-1] = (25.0 * x[-1] - 48.0 * x[-2] + 36.0 * x[-3] - 16.0 * x[-4] + 3.0 * x[-5]) / (12.0 * h)
        v[-2] = (3.0 * x[-1] + 10.0 * x[-2] - 18.0 * x[-3] + 6.0 * x[-4] - x[-5]) / (12.0 * h)
    else:
        v = np.gradient(x, times, axis=0, edge_order=2 if K1 >= 3 else 1)

    P = model.tangent_projection(x, check=False)
    return np.einsum('kij,kj->ki', P, v)


def hermite_stages(model: ManifoldModel, path: DiscretePath, k: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    """
    구간 [t_k, t_{k+1}] 의 RK4 단계점 (시작, 중점, 끝) 위치와 속도

    중점은 3차 에르미트 보간 후 수축, 속도는 접평면 사영.
    """
    h = path.times[k + 1] - path.times[k]
    x0, x1 = path.points[k], path.points[k + 1]
    if path.segment_velocities is not None:
        v0, v1 = path.segment_velocities[k]
    else:
        v0, v1 = path.velocities[k], path.velocities[k + 1]
    mid = 0.5 * (x0 + x1) + h * (v0 - v1) / 8.0
    mid_velocity = 1.5 * (x1 - x0) / h - 0.25 * (v0 + v1)
    mid = model.retract(mid)
    mid_velocity = model.tangent_projection(mid, check=False) @ mid_velocity
    return (x0, v0), (mid, mid_velocity), (x1, v1)


def latitude_loop(model: ManifoldModel, phi: float, steps: int = 1000) -> DiscretePath:
    """
    sphere(3, ρ) 의 극각 φ 위도 원 σ(s) = ρ(sinφ cos s, sinφ sin s, cosφ), s ∈ [0, 2π]

    속도는 해석식으로 채운다.
    """
    if model.name != 'sphere' or model.ambient_dim != 3:
        raise PathError(f"위도 루프는 sphere(3) 전용입니다: {model.spec}")
    if not 0 < phi < np.pi:
        raise PathError(f"극각은 (0, π) 범위여야 합니다: {phi}")
    rho = model.scale
    s = np.linspace(0.0, 2.0 * np.pi, int(steps) + 1)
    points = rho * np.column_stack([np.sin(phi) * np.cos(s), np.sin(phi) * np.sin(s), np.full_like(s, np.cos(phi))])
    points[-1] = points[0]
    velocities = rho * np.column_stack([-np.sin(phi) * np.sin(s), np.sin(phi) * np.cos(s), np.zeros_like(s)])
    velocities[-1] = velocities[0]
    return DiscretePath(s, points, velocities)
