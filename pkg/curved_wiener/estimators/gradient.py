"""
Heat semigroup and gradient estimators
열 반군 기댓값과 Bismut / Elworthy-Li 기울기 추정기
"""

from typing import Optional

import numpy as np

from ..errors import EstimatorError
from ..geometry.fields import ScalarField
from ..manifold.model import ManifoldModel, TangentVector
from ..sde.driver import sample_drivers
from ..sde.simulate import simulate_jacobian_flow, simulate_projection_bm
from ..sde.system import SdeSystem
from ..utils.validation import grid_index, steps_for_horizon
from .engine import McParams, MonteCarloEngine, PathJob
from .statistics import McEstimate


def _check_times(t: float, t0: float, dt: float) -> int:
    """0 < t0 ≤ t 확인 후 t0 의 격자 인덱스 반환"""
    if t <= 0:
        raise EstimatorError(f"t 는 양수여야 합니다: {t}")
    if not 0 < t0 <= t:
        raise EstimatorError(f"0 < t0 ≤ t 여야 합니다: t0={t0}, t={t}")
    try:
        K = steps_for_horizon(t, dt)
        return grid_index(np.linspace(0.0, t, K + 1), t0, name='t0')
    except ValueError as e:
        raise EstimatorError(str(e))


def _resolve(params: Optional[McParams], engine: Optional[MonteCarloEngine]):
    return (params or McParams.from_settings()), (engine or MonteCarloEngine.from_settings())


class HeatJob(PathJob):
    """경로별 f(Σ_t)"""

    labels = ['value']

    def __init__(self, model: ManifoldModel, origin, f: ScalarField, t: float, params: McParams):
        self.model, self.origin, self.f, self.t, self.params = model, np.asarray(origin, float), f, t, params
        self.antithetic = params.antithetic

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p = self.params
        driver = sample_drivers(self.model.ambient_dim, self.t, p.dt, p.seed, path_indices, antithetic=p.antithetic)
        path = simulate_projection_bm(self.model, self.origin, driver, n_sub=p.n_sub, minimal=True)
        return self.f(path.points[:, -1])[:, None]

    def describe(self):
        return {'estimator': 'heat', 'function': self.f.label, 't': self.t}


def heat_expectation(model: ManifoldModel, o, f: ScalarField, t: float,
                     params: Optional[McParams] = None,
                     engine: Optional[MonteCarloEngine] = None) -> McEstimate:
    """
    (e^{tΔ/2} f)(o) ≈ E[f(Σ_t)] (사영 브라운 운동)

    Args:
        model: 다양체 모델
        o: 시작점
        f: 스칼라장
        t: 시간 (> 0)
        params: 몬테카를로 파라미터
        engine: 병렬 엔진

    Returns:
        McEstimate: 스칼라 추정치
    """
    if t <= 0:
        raise EstimatorError(f"t 는 양수여야 합니다: {t}")
    model.check_on_manifold(o, what='시작점')
    params, engine = _resolve(params, engine)
    return engine.run(HeatJob(model, o, f, t, params), params.n_paths, seed=params.seed, dt=params.dt)


class BismutJob(PathJob):
    """경로별 (1/t0) f(Σ_t) Σ_{k<k0} W_k Δb_k (T_oM 기저 좌표)"""

    def __init__(self, model: ManifoldModel, origin, f: ScalarField, t: float, t0: float, params: McParams):
        self.model, self.origin, self.f, self.t, self.t0, self.params = model, np.asarray(origin, float), f, t, t0, params
        self.k0 = _check_times(t, t0, params.dt)
        self.antithetic = params.antithetic
        self.labels = [f"e{i + 1}" for i in range(model.manifold_dim)]

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p = self.params
        driver = sample_drivers(self.model.ambient_dim, self.t, p.dt, p.seed, path_indices, antithetic=p.antithetic)
        path = simulate_projection_bm(self.model, self.origin, driver, n_sub=p.n_sub)
        db = np.diff(path.antidev, axis=1)[:, :self.k0]
        weighted = np.einsum('pkij,pkj->pi', path.ricci_weight[:, :self.k0], db)
        return self.f(path.points[:, -1])[:, None] * weighted / self.t0

    def describe(self):
        return {'estimator': 'bismut', 'function': self.f.label, 't': self.t, 't0': self.t0,
                'basis': self.model.tangent_basis(self.origin)}


def bismut_gradient(model: ManifoldModel, o, f: ScalarField, t: float, t0: float,
                    params: Optional[McParams] = None,
                    engine: Optional[MonteCarloEngine] = None) -> McEstimate:
    """
    ∇(e^{tΔ/2} f)(o) = (1/t0) E[(∫₀^{t0} W_r db_r) f(Σ_t)], 0 < t0 ≤ t

    Returns:
        McEstimate: T_oM 기저 (metadata['basis']) 좌표의 d 성분 추정치
    """
    params, engine = _resolve(params, engine)
    model.check_on_manifold(o, what='시작점')
    job = BismutJob(model, o, f, t, t0, params)
    return engine.run(job, params.n_paths, seed=params.seed, dt=params.dt)


class ElworthyLiJob(PathJob):
    """경로별 (1/t0) f(Σ_t) Σ_{k<k0} ⟨X(Σ_k)^# Z_k v, ΔB_k⟩"""

    labels = ['derivative']

    def __init__(self, system: SdeSystem, v: TangentVector, f: ScalarField, t: float, t0: float, params: McParams):
        self.system, self.v, self.f, self.t, self.t0, self.params = system, v, f, t, t0, params
        self.k0 = _check_times(t, t0, params.dt)
        self.antithetic = params.antithetic
        model = system.model
        if system.kind == 'projection':
            self.mode = 'projection'
        elif model.codim == 0:
            self.mode = 'jacobian'
        else:
            raise NotImplementedError(
                "Elworthy-Li 는 사영 브라운 운동 계와 평평한 모델의 계만 지원합니다"
            )

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p, system = self.params, self.system
        model = system.model
        driver = sample_drivers(system.noise_dim, self.t, p.dt, p.seed, path_indices, antithetic=p.antithetic)
        dB = driver.increments[:, :self.k0]
        if self.mode == 'projection':
            path = simulate_projection_bm(model, system.origin, driver, n_sub=p.n_sub)
            v_coords = path.basis.T @ self.v.vec
            U = path.tangent_frames()[:, :self.k0]
            direction = np.einsum('pkni,pkij,j->pkn', U, path.deriv_flow[:, :self.k0], v_coords)
            endpoint = path.points[:, -1]
        else:
            flow = simulate_jacobian_flow(system, driver, n_sub=p.n_sub)
            X = system.diffusion(flow.points[:, :self.k0])
            system.check_surjective(flow.points[:, -1])
            moved = np.einsum('pkij,j->pki', flow.jacobian[:, :self.k0], self.v.vec)
            direction = np.einsum('pkin,pkn->pki', np.linalg.pinv(X), moved)
            endpoint = flow.points[:, -1]
        integral = np.sum(np.sum(direction * dB, axis=-1), axis=1)
        return (self.f(endpoint) * integral / self.t0)[:, None]

    def describe(self):
        return {'estimator': 'elworthy-li', 'function': self.f.label, 't': self.t, 't0': self.t0,
                'direction': self.v.vec, 'mode': self.mode}


def elworthy_li_gradient(system: SdeSystem, v: TangentVector, f: ScalarField, t: float, t0: float,
                         params: Optional[McParams] = None,
                         engine: Optional[MonteCarloEngine] = None) -> McEstimate:
    """
    v(e^{tL/2} f) = (1/t0) E[f(Σ_t) ∫₀^{t0} ⟨X(Σ_s)^# Z_s v, dB_s⟩]

    X^# 는 ker X 의 직교여공간으로 제한한 의사역행렬이다. 사영 계에서는 X^# = P, Z = //z.

    Args:
        system: X(m) 가 전사인 SDE 계
        v: 시작점에서의 접벡터
        f: 스칼라장
        t, t0: 0 < t0 ≤ t

    Returns:
        McEstimate: 스칼라 방향 미분 추정치
    """
    params, engine = _resolve(params, engine)
    v.validate(system.model)
    if not np.allclose(v.base, system.origin, rtol=0.0, atol=system.model.tol_F):
        raise EstimatorError("v 는 계의 시작점에서의 접벡터여야 합니다")
    system.check_surjective(system.origin)
    job = ElworthyLiJob(system, v, f, t, t0, params)
    return engine.run(job, params.n_paths, seed=params.seed, dt=params.dt)
