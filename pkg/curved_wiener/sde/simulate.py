"""
Wong-Zakai simulation of SDEs and Brownian motion on manifolds
Wong-Zakai 근사에 의한 SDE 및 다양체 위 브라운 운동 시뮬레이션
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..development.flows import rk4_step
from ..development.rolling import develop_batch
from ..errors import DriverError, FrameDriftError
from ..geometry.curvature import ricci_parallel
from ..geometry.fields import ScalarField
from ..manifold.model import ManifoldModel
from ..transport.parallel import christoffel, orthogonality_drift, polar_orthogonalize
from ..transport.paths import PathEnsemble
from ..utils.validation import grid_index
from .driver import DrivingPath, sample_drivers
from .system import SdeSystem


@dataclass
class GeometricPath:
    """
    다양체 위 경로 묶음과 부가 과정 (첫 축 = 경로)

    Attributes:
        times: (K+1,) 격자
        points: (P, K+1, N) Σ(t_k)
        basis: (N, d) T_oM 기저 E0
        frames: (P, K+1, N, N) 확률적 평행이동 u
        deriv_flow: (P, K+1, d, d) 미분 흐름 z (E0 좌표)
        deriv_flow_inv: (P, K+1, d, d) z⁻¹
        ricci_weight: (P, K+1, d, d) W, dW/dt = −½ W Ric_//
        ricci_parallel: (P, K+1, d, d) Ric_// = Uᵀ Ric U
        antidev: (P, K+1, d) 역전개 b
        normal: (P, K+1, N) 법선 과정 β = ∫ uᵀ Q(Σ) dB
        driver: 구동 경로
    """
    times: np.ndarray
    points: np.ndarray
    basis: np.ndarray
    frames: Optional[np.ndarray] = None
    deriv_flow: Optional[np.ndarray] = None
    deriv_flow_inv: Optional[np.ndarray] = None
    ricci_weight: Optional[np.ndarray] = None
    ricci_parallel: Optional[np.ndarray] = None
    antidev: Optional[np.ndarray] = None
    normal: Optional[np.ndarray] = None
    driver: Optional[DrivingPath] = None

    @property
    def n_paths(self) -> int:
        return self.points.shape[0]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def tangent_frames(self) -> np.ndarray:
        """U = u E0, shape (P, K+1, N, d)"""
        return self.frames @ self.basis


def _check_driver(driver: DrivingPath, n: int) -> None:
    if driver.dim != n:
        raise DriverError(f"구동 경로 차원 {driver.dim} ≠ 필요한 차원 {n}")


def _frame_guard(u: np.ndarray, model: ManifoldModel, step: int) -> None:
    drift = orthogonality_drift(u)
    if drift > model.tolerances.frame_fail:
        raise FrameDriftError(f"확률적 평행이동 프레임 이탈 {drift:.3e} (스텝 {step}); dt 를 줄이세요")


def simulate_sde(system: SdeSystem, driver: DrivingPath, n_sub: Optional[int] = None) -> PathEnsemble:
    """
    Wong-Zakai: 각 구간에서 ξ′ = X(ξ) ΔB_k/Δ + X₀(ξ) 를 n_sub 개의 RK4 하위 스텝으로 풀기

    Returns:
        PathEnsemble: (P, K+1, N) 경로
    """
    model = system.model
    _check_driver(driver, system.noise_dim)
    n_sub = model.tolerances.n_sub if n_sub is None else int(n_sub)
    dt = driver.dt
    x = np.broadcast_to(system.origin, (driver.n_paths, model.ambient_dim)).copy()
    points = np.empty((driver.n_paths, driver.n_steps + 1, model.ambient_dim))
    points[:, 0] = x

    for k in range(driver.n_steps):
        omega = driver.increments[:, k] / dt

        def rhs(t, state, omega=omega):
            xs = state[0]
            return (np.einsum('pni,pi->pn', system.diffusion(xs), omega) + system.drift_value(xs),)

        t = driver.times[k]
        for s in range(n_sub):
            (x,) = rk4_step(model, (x,), rhs, t + s * dt / n_sub, dt / n_sub)
        points[:, k + 1] = x
    return PathEnsemble(driver.times, points)


def _expm_symmetric(A: np.ndarray) -> np.ndarray:
    """대칭 행렬 지수 (고유분해, 배치)"""
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    w, V = np.linalg.eigh(A)
    return (V * np.exp(w)[..., None, :]) @ np.swapaxes(V, -1, -2)


def simulate_projection_bm(model: ManifoldModel, o, driver: DrivingPath,
                           n_sub: Optional[int] = None,
                           reorth_every: Optional[int] = None,
                           minimal: bool = False) -> GeometricPath:
    """
    사영 브라운 운동 δΣ = P(Σ)δB 와 u, z, W, b, β 의 동시 적분

    Σ, u 는 Stratonovich (Wong-Zakai RK4), z, W, b, β 는 같은 격자의 좌측점 Itô 규칙.

    Args:
        model: 다양체 모델
        o: 시작점
        driver: N 차원 구동 경로
        n_sub: 구간당 RK4 하위 스텝 수
        reorth_every: 프레임 재직교화 주기 (구간 단위)
        minimal: True 면 점만 적분

    Returns:
        GeometricPath: 경로와 부가 과정
    """
    o = model.check_on_manifold(o, what='시작점')
    N, d = model.ambient_dim, model.manifold_dim
    _check_driver(driver, N)
    tol = model.tolerances
    n_sub = tol.n_sub if n_sub is None else int(n_sub)
    reorth_every = tol.reorth_every if reorth_every is None else int(reorth_every)
    E0 = model.tangent_basis(o)
    n_paths, K, dt = driver.n_paths, driver.n_steps, driver.dt
    eye_N, eye_d = np.eye(N), np.eye(d)

    x = np.broadcast_to(o, (n_paths, N)).copy()
    points = np.empty((n_paths, K + 1, N))
    points[:, 0] = x

    if minimal:
        def rhs_points(t, state, omega):
            xs = state[0]
            return (np.einsum('pij,pj->pi', model.tangent_projection(xs, check=False), omega),)

        for k in range(K):
            omega = driver.increments[:, k] / dt
            for s in range(n_sub):
                (x,) = rk4_step(model, (x,), lambda t, st: rhs_points(t, st, omega), 0.0, dt / n_sub)
            points[:, k + 1] = x
        return GeometricPath(driver.times, points, E0, driver=driver)

    u = np.broadcast_to(eye_N, (n_paths, N, N)).copy()
    z = np.broadcast_to(eye_d, (n_paths, d, d)).copy()
    W = np.broadcast_to(eye_d, (n_paths, d, d)).copy()
    b = np.zeros((n_paths, d))
    beta = np.zeros((n_paths, N))

    frames = np.empty((n_paths, K + 1, N, N))
    deriv = np.empty((n_paths, K + 1, d, d))
    weight = np.empty((n_paths, K + 1, d, d))
    ric_par = np.empty((n_paths, K + 1, d, d))
    antidev = np.empty((n_paths, K + 1, d))
    normal = np.empty((n_paths, K + 1, N))
    frames[:, 0], deriv[:, 0], weight[:, 0], antidev[:, 0], normal[:, 0] = u, z, W, b, beta

    def rhs(t, state, omega):
        xs, us = state
        velocity = np.einsum('pij,pj->pi', model.tangent_projection(xs, check=False), omega)
        return velocity, -christoffel(model, xs, velocity) @ us

    for k in range(K):
        dB = driver.increments[:, k]
        # 좌측점 Itô 양
        U = u @ E0                                                    # (P, N, d)
        Q = model.normal_projection(x, check=False)
        ric = ricci_parallel(model, x, U)
        ric_par[:, k] = ric
        db = np.einsum('pni,pn->pi', U, dB)
        dbeta = np.einsum('pnm,pnk,pk->pm', u, Q, dB)
        Zc = U @ z                                                    # // z e_j 열
        dq_z = model.directional_dq(x[:, None, :], np.swapaxes(Zc, -1, -2), check=False)  # (P, d, N, N)
        noise_term = -np.einsum('pjab,pb->pja', dq_z, dB)             # dP(//z e_j) dB
        dz = np.einsum('pni,pjn->pij', U, noise_term)
        z = z + dz - 0.5 * (ric @ z) * dt
        W = W @ _expm_symmetric(-0.5 * ric * dt)
        b = b + db
        beta = beta + dbeta

        # Stratonovich Wong-Zakai (Σ, u)
        omega = dB / dt
        t = driver.times[k]
        for s in range(n_sub):
            x, u = rk4_step(model, (x, u), lambda tt, st: rhs(tt, st, omega), t + s * dt / n_sub, dt / n_sub)
        if reorth_every and (k + 1) % reorth_every == 0:
            u = polar_orthogonalize(u)
        _frame_guard(u, model, k + 1)

        points[:, k + 1], frames[:, k + 1] = x, u
        deriv[:, k + 1], weight[:, k + 1] = z, W
        antidev[:, k + 1], normal[:, k + 1] = b, beta

    ric_par[:, K] = ricci_parallel(model, x, u @ E0)
    return GeometricPath(
        times=driver.times,
        points=points,
        basis=E0,
        frames=frames,
        deriv_flow=deriv,
        deriv_flow_inv=np.linalg.inv(deriv),
        ricci_weight=weight,
        ricci_parallel=ric_par,
        antidev=antidev,
        normal=normal,
        driver=driver,
    )


def simulate_development_bm(model: ManifoldModel, o, driver: DrivingPath,
                            n_sub: Optional[int] = None,
                            reorth_every: Optional[int] = None) -> GeometricPath:
    """
    확률적 전개에 의한 브라운 운동: d 차원 구동 경로 b 를 전개 φ(b) 로 굴림

    Wong-Zakai 구동 경로는 구간별 선형이므로 결정론적 전개 적분기를 그대로 쓴다.
    """
    o = model.check_on_manifold(o, what='시작점')
    d = model.manifold_dim
    _check_driver(driver, d)
    n_sub = model.tolerances.n_sub if n_sub is None else int(n_sub)
    E0 = model.tangent_basis(o)
    K, dt = driver.n_steps, driver.dt

    fine_times = driver.times[0] + np.arange(K * n_sub + 1) * (dt / n_sub)
    slopes = np.repeat(driver.increments / dt, n_sub, axis=1)
    points, frames = develop_batch(model, o, fine_times, slopes, basis=E0, reorth_every=reorth_every)
    points, frames = points[:, ::n_sub], frames[:, ::n_sub]

    U = frames @ E0
    ric = np.stack([ricci_parallel(model, points[:, k], U[:, k]) for k in range(K + 1)], axis=1)
    W = np.empty_like(ric)
    W[:, 0] = np.eye(d)
    for k in range(K):
        W[:, k + 1] = W[:, k] @ _expm_symmetric(-0.5 * ric[:, k] * dt)
    return GeometricPath(
        times=driver.times,
        points=points,
        basis=E0,
        frames=frames,
        ricci_weight=W,
        ricci_parallel=ric,
        antidev=driver.values(),
        driver=driver,
    )


def quadratic_variation_check(path: Union[GeometricPath, PathEnsemble],
                              f: ScalarField, g: ScalarField) -> np.ndarray:
    """
    경로별 잔차 Σ_k Δf(Σ)Δg(Σ) − Σ_k ⟨grad f, grad g⟩(Σ_k) Δt

    Returns:
        np.ndarray: (P,) 잔차 (Δ → 0 에서 평균 0)
    """
    model = f.model
    points = path.points
    fv, gv = f(points), g(points)
    bracket = np.sum(np.diff(fv, axis=1) * np.diff(gv, axis=1), axis=1)
    P = model.tangent_projection(points[:, :-1], check=False)
    grad_f = np.einsum('pkij,pkj->pki', P, f.ambient_gradient(points[:, :-1]))
    grad_g = np.einsum('pkij,pkj->pki', P, g.ambient_gradient(points[:, :-1]))
    integral = np.sum(np.sum(grad_f * grad_g, axis=-1) * np.diff(path.times)[None], axis=1)
    return bracket - integral


@dataclass
class JacobianFlow:
    """
    야코비안 흐름 Z = ∂Σ_t/∂o 와 역행렬 (주변 좌표)

    Attributes:
        times: (K+1,) 격자
        points: (P, K+1, N)
        jacobian: (P, K+1, N, N) Z
        jacobian_inv: (P, K+1, N, N) Z⁻¹ (수반 ODE 로 적분)
    """
    times: np.ndarray
    points: np.ndarray
    jacobian: np.ndarray
    jacobian_inv: np.ndarray

    def running_condition_numbers(self) -> np.ndarray:
        """경로별 max_{j≤k} ‖Z_j‖₂‖Z_j⁻¹‖₂, shape (P, K+1) (발산하면 inf)"""
        with np.errstate(invalid='ignore', over='ignore'):
            norms = np.linalg.norm(self.jacobian, ord=2, axis=(-2, -1))
            inv_norms = np.linalg.norm(self.jacobian_inv, ord=2, axis=(-2, -1))
            cond = norms * inv_norms
        cond = np.where(np.isfinite(cond), cond, np.inf)
        return np.maximum.accumulate(cond, axis=1)

    def condition_numbers(self) -> np.ndarray:
        """경로별 max_k ‖Z_k‖₂‖Z_k⁻¹‖₂, shape (P,)"""
        return self.running_condition_numbers()[:, -1]


def simulate_jacobian_flow(system: SdeSystem, driver: DrivingPath,
                           n_sub: Optional[int] = None) -> JacobianFlow:
    """
    상태와 변분 방정식 Z′ = A Z, 수반 방정식 (Z⁻¹)′ = −Z⁻¹ A 를 같은 Wong-Zakai 하위 스텝으로 적분

    A = Σ_i ω_i DX_i(ξ) + DX₀(ξ), ω = ΔB_k/Δ
    """
    model = system.model
    _check_driver(driver, system.noise_dim)
    n_sub = model.tolerances.n_sub if n_sub is None else int(n_sub)
    n_paths, K, dt = driver.n_paths, driver.n_steps, driver.dt
    N = model.ambient_dim
    eye = np.eye(N)

    x = np.broadcast_to(system.origin, (n_paths, N)).copy()
    Z = np.broadcast_to(eye, (n_paths, N, N)).copy()
    Zi = Z.copy()
    points = np.empty((n_paths, K + 1, N))
    jac = np.empty((n_paths, K + 1, N, N))
    jac_inv = np.empty((n_paths, K + 1, N, N))
    points[:, 0], jac[:, 0], jac_inv[:, 0] = x, Z, Zi

    def rhs(t, state, omega):
        xs, Zs, Zis = state
        A = system.diffusion_jacobian(xs, omega)
        velocity = np.einsum('pni,pi->pn', system.diffusion(xs), omega) + system.drift_value(xs)
        return velocity, A @ Zs, -Zis @ A

    with np.errstate(over='ignore', invalid='ignore'):
        for k in range(K):
            omega = driver.increments[:, k] / dt
            t = driver.times[k]
            for s in range(n_sub):
                x, Z, Zi = rk4_step(model, (x, Z, Zi), lambda tt, st: rhs(tt, st, omega),
                                    t + s * dt / n_sub, dt / n_sub)
            points[:, k + 1], jac[:, k + 1], jac_inv[:, k + 1] = x, Z, Zi
    return JacobianFlow(driver.times, points, jac, jac_inv)


@dataclass
class MarkovCheck:
    """
    마르코프 성질 점검 결과

    s 시점 f 값이 분위 구간에 든 경로의 E[f(Σ_{s+t})] 와,
    그 구간 평균에 가장 가까운 점에서 새로 출발한 E[f(Σ_t)] 를 비교한다.

    Attributes:
        point: 재출발점 Σ_s
        conditional: (n_bin,) 구간 경로의 f(Σ_{s+t})
        restarted: (n_restart,) 재출발 경로의 f(Σ_t)
    """
    point: np.ndarray
    conditional: np.ndarray
    restarted: np.ndarray

    @staticmethod
    def _stats(values: np.ndarray) -> Tuple[float, float]:
        return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(len(values)))

    @property
    def conditional_mean(self) -> Tuple[float, float]:
        """(평균, 표준오차)"""
        return self._stats(self.conditional)

    @property
    def restarted_mean(self) -> Tuple[float, float]:
        """(평균, 표준오차)"""
        return self._stats(self.restarted)

    def consistent(self, n_sigma: float = 4.0) -> bool:
        (a, sa), (b, sb) = self.conditional_mean, self.restarted_mean
        return abs(a - b) <= n_sigma * np.hypot(sa, sb)


def markov_consistency(model: ManifoldModel, o, f: ScalarField, s: float, t: float, dt: float,
                       n_paths: int, seed: int, n_restart: Optional[int] = None,
                       band: Tuple[float, float] = (0.4, 0.6), n_sub: Optional[int] = None) -> MarkovCheck:
    """
    사영 브라운 운동을 s+t 까지 돌려 E[f(Σ_{s+t}) | f(Σ_s) ∈ 구간] 과 재출발 기대값 비교

    구간은 f(Σ_s) 의 band 분위 사이이며, 재출발은 seed+1 스트림으로 한다.
    구간이 좁을수록 x ↦ E_x f(Σ_t) 의 구간 내 변화가 작아진다.

    Raises:
        DriverError: s, t 가 dt 격자에 맞지 않거나 구간이 2개 미만의 경로를 가질 때
    """
    o = model.check_on_manifold(o, what='시작점')
    lo_q, hi_q = band
    if not 0.0 <= lo_q < hi_q <= 1.0:
        raise DriverError(f"band 는 0 ≤ lo < hi ≤ 1 이어야 합니다: {band}")
    N = model.ambient_dim
    driver = sample_drivers(N, s + t, dt, seed, range(n_paths))
    try:
        k_s = grid_index(driver.times, s, name='s')
    except ValueError as e:
        raise DriverError(str(e))
    points = simulate_projection_bm(model, o, driver, n_sub=n_sub, minimal=True).points

    keys = f(points[:, k_s])
    lo, hi = np.quantile(keys, [lo_q, hi_q])
    inside = np.flatnonzero((keys >= lo) & (keys <= hi))
    if len(inside) < 2:
        raise DriverError(f"분위 구간 {band} 에 경로가 {len(inside)} 개뿐입니다")
    conditional = f(points[inside, -1])

    pick = inside[np.argmin(np.abs(keys[inside] - np.mean(keys[inside])))]
    point = model.retract(points[pick, k_s])
    restart = sample_drivers(N, t, dt, seed + 1, range(n_restart or n_paths))
    restarted = f(simulate_projection_bm(model, point, restart, n_sub=n_sub, minimal=True).points[:, -1])
    return MarkovCheck(point, conditional, restarted)
