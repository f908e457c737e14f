"""
Cartan development and anti-development
카르탕 전개 φ 와 역전개 Ψ (결합 ODE 적분)
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import PathError
from ..manifold.model import ManifoldModel
from ..transport.parallel import christoffel, parallel_transport, polar_orthogonalize
from ..transport.paths import DiscretePath, FramePath
from ..utils.validation import check_time_grid
from .flows import rk4_step


@dataclass
class EuclideanPath:
    """
    R^d ≅ T_oM 위의 경로 b(t_k), b(0) = 0

    Attributes:
        times: (K+1,) 시간 격자
        values: (K+1, d) 값
        basis: T_oM 식별에 쓴 정규직교 기저 (N, d), 기록용
    """
    times: np.ndarray
    values: np.ndarray
    basis: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]

    def validate(self) -> 'EuclideanPath':
        check_time_grid(self.times)
        if self.values.shape[0] != len(self.times):
            raise PathError(f"values 길이 {self.values.shape[0]} ≠ 격자 길이 {len(self.times)}")
        if np.any(self.values[0] != 0.0):
            raise PathError(f"b(0) = 0 이어야 합니다: {self.values[0]}")
        return self

    @property
    def slopes(self) -> np.ndarray:
        """구간별 기울기 b′_k, shape (K, d)"""
        return np.diff(self.values, axis=0) / np.diff(self.times)[:, None]


def develop_batch(model: ManifoldModel, o, times: np.ndarray, slopes: np.ndarray,
                  basis: Optional[np.ndarray] = None,
                  reorth_every: Optional[int] = None,
                  with_frames: bool = True) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    구간별 상수 기울기 β_k 에 대한 (σ, u) 결합 RK4 (경로 배치)

    σ′ = P(σ) u E0 β_k,  u′ = −Γ(σ′) u

    Args:
        model: 다양체 모델
        o: 시작점 (N,)
        times: (K+1,) 격자
        slopes: (P, K, d) 구간 기울기
        basis: T_oM 기저 E0 (없으면 피벗 Gram-Schmidt)
        reorth_every: 재직교화 주기
        with_frames: 프레임 저장 여부

    Returns:
        tuple: points (P, K+1, N), frames (P, K+1, N, N) 또는 None
    """
    o = model.check_on_manifold(o)
    E0 = model.tangent_basis(o) if basis is None else np.asarray(basis, dtype=float)
    reorth_every = model.tolerances.reorth_every if reorth_every is None else int(reorth_every)
    slopes = np.asarray(slopes, dtype=float)
    n_paths, K, _ = slopes.shape
    N = model.ambient_dim

    x = np.broadcast_to(o, (n_paths, N)).copy()
    u = np.broadcast_to(np.eye(N), (n_paths, N, N)).copy()
    points = np.empty((n_paths, K + 1, N))
    frames = np.empty((n_paths, K + 1, N, N)) if with_frames else None
    points[:, 0] = x
    if with_frames:
        frames[:, 0] = u

    for k in range(K):
        direction = slopes[:, k] @ E0.T                     # (P, N)

        def rhs(t, state, direction=direction):
            xs, us = state
            P = model.tangent_projection(xs, check=False)
            velocity = np.einsum('pij,pjk,pk->pi', P, us, direction)
            gamma = christoffel(model, xs, velocity)
            return velocity, -gamma @ us

        h = times[k + 1] - times[k]
        x, u = rk4_step(model, (x, u), rhs, times[k], h)
        if reorth_every and (k + 1) % reorth_every == 0:
            u = polar_orthogonalize(u)
        points[:, k + 1] = x
        if with_frames:
            frames[:, k + 1] = u
    return points, frames


def segment_velocities(model: ManifoldModel, points: np.ndarray, frames: np.ndarray,
                       basis: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """
    전개 경로의 구간별 편측 속도 σ′ = P(σ) u E0 β_k (구간 시작점과 끝점)

    Returns:
        np.ndarray: (K, 2, N)
    """
    direction = slopes @ basis.T                                # (K, N)
    P = model.tangent_projection(points, check=False)
    moved = P @ frames                                          # (K+1, N, N)
    start = np.einsum('kij,kj->ki', moved[:-1], direction)
    end = np.einsum('kij,kj->ki', moved[1:], direction)
    return np.stack([start, end], axis=1)


def develop(model: ManifoldModel, o, b: EuclideanPath,
            reorth_every: Optional[int] = None) -> Tuple[DiscretePath, FramePath]:
    """
    전개 φ(b): 구간별 선형 b 를 굴려서 얻는 다양체 경로와 평행이동 프레임

    Args:
        model: 다양체 모델
        o: 시작점
        b: 유클리드 경로 (T_oM 좌표, 피벗 Gram-Schmidt 기저)

    Returns:
        tuple: (DiscretePath, FramePath); 경로에는 구간별 정확한 속도가 실린다
    """
    b = b.validate()
    E0 = model.tangent_basis(o) if b.basis is None else b.basis
    if b.values.shape[1] != model.manifold_dim:
        raise PathError(f"b 의 차원 {b.values.shape[1]} ≠ d={model.manifold_dim}")
    slopes = b.slopes
    points, frames = develop_batch(model, o, b.times, slopes[None], basis=E0, reorth_every=reorth_every)
    velocities = segment_velocities(model, points[0], frames[0], E0, slopes)
    return DiscretePath(b.times, points[0], segment_velocities=velocities), FramePath(b.times, frames[0])


def antidevelop(model: ManifoldModel, path: DiscretePath,
                reorth_every: Optional[int] = None) -> EuclideanPath:
    """
    역전개 Ψ(σ): b(s) = ∫ E0ᵀ u(r)ᵀ σ′(r) dr (구간별 사다리꼴 규칙)

    경로에 속도가 있으면 그대로 쓰고, 없으면 구간 현 속도를 쓴다.
    각 구간은 자기 편측 속도로만 적분하므로 꺾인 점에서도 정확하다.

    Returns:
        EuclideanPath: b(0) = 0 인 T_oM 좌표 경로 (basis 기록)
    """
    path = path.validate(model).with_chord_velocities(model)
    transport = parallel_transport(model, path, reorth_every=reorth_every)
    E0 = model.tangent_basis(path.points[0])
    ends = path.segment_ends()
    start = np.einsum('ni,kmn,km->ki', E0, transport.frames[:-1], ends[:, 0])
    end = np.einsum('ni,kmn,km->ki', E0, transport.frames[1:], ends[:, 1])
    steps = np.diff(path.times)[:, None]
    increments = 0.5 * steps * (start + end)
    values = np.vstack([np.zeros((1, E0.shape[1])), np.cumsum(increments, axis=0)])
    return EuclideanPath(path.times, values, basis=E0)
