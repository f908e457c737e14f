"""
Parallel transport along discrete paths
이산 경로를 따른 평행이동 (u′ = −Γ(σ′)u) 과 홀로노미
"""

from typing import Optional

import numpy as np

from ..errors import FrameDriftError, GeometryError, PathError
from ..manifold.model import ManifoldModel
from .paths import DiscretePath, FramePath, hermite_stages


def christoffel(model: ManifoldModel, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Γ(w_x) = dQ(w) P + dP(w) Q = dQ(w)(I − 2Q), shape (..., N, N)"""
    N = model.ambient_dim
    Q = model.normal_projection(x, check=False)
    return model.directional_dq(x, w, check=False) @ (np.eye(N) - 2.0 * Q)


def polar_orthogonalize(u: np.ndarray) -> np.ndarray:
    """극분해의 직교 인자 (SVD, 배치 가능)"""
    left, _, right = np.linalg.svd(u)
    return left @ right


def orthogonality_drift(frames: np.ndarray) -> float:
    """max_k ‖u_kᵀ u_k − I‖_max"""
    frames = np.asarray(frames, dtype=float)
    N = frames.shape[-1]
    gram = np.swapaxes(frames, -1, -2) @ frames
    return float(np.max(np.abs(gram - np.eye(N))))


def _check_drift(u: np.ndarray, limit: float, step: int) -> None:
    drift = orthogonality_drift(u)
    if drift > limit:
        raise FrameDriftError(
            f"프레임 직교성 이탈 {drift:.3e} > frame_fail={limit:.1e} (스텝 {step}); 격자 간격을 줄이세요"
        )


def parallel_transport(model: ManifoldModel, path: DiscretePath,
                       reorth_every: Optional[int] = None,
                       frame_fail: Optional[float] = None) -> FramePath:
    """
    u(0) = I 에서 u′ = −Γ(σ′)u 를 RK4 로 적분

    Args:
        model: 다양체 모델
        path: 이산 경로 (속도가 없으면 중심차분 추정)
        reorth_every: 극분해 재직교화 주기 (0 이면 사용 안 함, None 이면 설정값)
        frame_fail: 직교성 이탈 한계 (None 이면 설정값)

    Returns:
        FramePath: 각 격자점의 N×N 프레임
    """
    tol = model.tolerances
    reorth_every = tol.reorth_every if reorth_every is None else int(reorth_every)
    frame_fail = tol.frame_fail if frame_fail is None else float(frame_fail)
    path = path.validate(model).with_velocities(model)

    N = model.ambient_dim
    K = path.n_steps
    frames = np.empty((K + 1, N, N))
    u = np.eye(N)
    frames[0] = u
    for k in range(K):
        h = path.times[k + 1] - path.times[k]
        (x0, v0), (xm, vm), (x1, v1) = hermite_stages(model, path, k)
        g0 = christoffel(model, x0, v0)
        gm = christoffel(model, xm, vm)
        g1 = christoffel(model, x1, v1)
        k1 = -g0 @ u
        k2 = -gm @ (u + 0.5 * h * k1)
        k3 = -gm @ (u + 0.5 * h * k2)
        k4 = -g1 @ (u + h * k3)
        u = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if reorth_every and (k + 1) % reorth_every == 0:
            u = polar_orthogonalize(u)
        _check_drift(u, frame_fail, k + 1)
        frames[k + 1] = u
    return FramePath(path.times, frames)


def inverse_parallel_transport(model: ManifoldModel, path: DiscretePath) -> FramePath:
    """
    좌역원 ū: ū′ = ū dQ(σ′), ū(0) = P(σ(0))

    ū(s) u(s) P(σ(0)) = P(σ(0)) 를 만족한다.
    """
    path = path.validate(model).with_velocities(model)
    N = model.ambient_dim
    K = path.n_steps
    frames = np.empty((K + 1, N, N))
    ubar = model.tangent_projection(path.points[0], check=False)
    frames[0] = ubar
    for k in range(K):
        h = path.times[k + 1] - path.times[k]
        (x0, v0), (xm, vm), (x1, v1) = hermite_stages(model, path, k)
        d0 = model.directional_dq(x0, v0, check=False)
        dm = model.directional_dq(xm, vm, check=False)
        d1 = model.directional_dq(x1, v1, check=False)
        k1 = ubar @ d0
        k2 = (ubar + 0.5 * h * k1) @ dm
        k3 = (ubar + 0.5 * h * k2) @ dm
        k4 = (ubar + h * k3) @ d1
        ubar = ubar + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        frames[k + 1] = ubar
    return FramePath(path.times, frames)


def splitting_defect(model: ManifoldModel, path: DiscretePath, transport: FramePath) -> float:
    """max_k ‖Q(σ_k) u_k P(σ_0)‖ (접/법 분해 보존 확인)"""
    Q = model.normal_projection(path.points, check=False)
    P0 = model.tangent_projection(path.points[0], check=False)
    return float(np.max(np.linalg.norm(Q @ transport.frames @ P0, ord=2, axis=(-2, -1))))


def holonomy(model: ManifoldModel, loop: DiscretePath,
             reorth_every: Optional[int] = None) -> float:
    """
    닫힌 루프의 홀로노미 회전각 (d = 2 전용)

    Returns:
        float: [0, 2π) 범위의 회전각 (τ_{σ(0)}M 의 피벗 Gram-Schmidt 기저 방향 기준)
    """
    if model.manifold_dim != 2:
        raise GeometryError(f"holonomy 는 d=2 모델만 지원합니다 (d={model.manifold_dim})")
    loop = loop.validate(model)
    if not loop.is_closed(model.tol_F):
        gap = float(np.linalg.norm(loop.points[-1] - loop.points[0]))
        raise PathError(f"닫히지 않은 루프입니다: ‖σ(T) − σ(0)‖ = {gap:.3e}")
    transport = parallel_transport(model, loop, reorth_every=reorth_every)
    E0 = model.tangent_basis(loop.points[0])
    R = E0.T @ transport.frames[-1] @ E0
    return float(np.mod(np.arctan2(R[1, 0], R[0, 0]), 2.0 * np.pi))
