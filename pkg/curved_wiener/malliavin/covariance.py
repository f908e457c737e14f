"""
Reduced Malliavin covariance along simulated paths
시뮬레이션 경로 위의 축약 말리아뱅 공분산과 비퇴화 통계
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import EstimatorError
from ..estimators.engine import McParams, MonteCarloEngine, PathJob
from ..sde.driver import DrivingPath, sample_drivers
from ..sde.simulate import JacobianFlow, simulate_jacobian_flow
from ..sde.system import SdeSystem
from ..utils.validation import grid_index, steps_for_horizon


@dataclass
class MalliavinSample:
    """
    경로별 축약 공분산 C̄_t (τ_oM 정규직교 기저 좌표)

    Attributes:
        covariance: (P, d, d) 대칭 행렬 (버린 경로는 NaN)
        eigenvalues: (P, d) 오름차순
        determinant: (P,)
        condition: (P,) 경로별 max ‖Z‖‖Z⁻¹‖
        discarded: (P,) cond_max 를 넘어 버린 경로
        t: 시각
    """
    covariance: np.ndarray
    eigenvalues: np.ndarray
    determinant: np.ndarray
    condition: np.ndarray
    discarded: np.ndarray
    t: float

    @property
    def n_paths(self) -> int:
        return self.covariance.shape[0]

    @property
    def n_discarded(self) -> int:
        return int(np.sum(self.discarded))

    @property
    def min_eigenvalue(self) -> np.ndarray:
        return self.eigenvalues[:, 0]

    def check(self, cov_tol: float) -> None:
        """대칭성과 반양정치성 (cov_tol 상대 기준) 확인"""
        kept = self.covariance[~self.discarded]
        scale = 1.0 + np.max(np.abs(kept), axis=(-2, -1), initial=0.0)
        asym = np.max(np.abs(kept - np.swapaxes(kept, -1, -2)), axis=(-2, -1), initial=0.0)
        if np.any(asym > cov_tol * scale):
            raise EstimatorError(f"C̄_t 가 대칭이 아닙니다: {float(np.max(asym)):.3e}")
        low = self.eigenvalues[~self.discarded, 0]
        if np.any(low < -cov_tol * scale):
            raise EstimatorError(f"C̄_t 의 음의 고유값: {float(np.min(low)):.3e}")


def reduced_covariance_path(system: SdeSystem, driver: DrivingPath, times: Sequence[float],
                            n_sub: Optional[int] = None) -> List[MalliavinSample]:
    """
    하나의 야코비안 흐름에서 여러 시각의 C̄_t 를 누적 사다리꼴로 계산

    Args:
        system: SDE 계
        driver: n 차원 구동 경로
        times: 격자 위 시각 목록
        n_sub: 구간당 RK4 하위 스텝 수

    Returns:
        list: 시각별 MalliavinSample
    """
    model = system.model
    tol = model.tolerances
    indices = [grid_index(driver.times, float(t), name='t') for t in times]
    k_max = max(indices)
    flow = simulate_jacobian_flow(system, driver, n_sub=n_sub)
    E0 = model.tangent_basis(system.origin)

    window = JacobianFlow(flow.times[:k_max + 1], flow.points[:, :k_max + 1],
                          flow.jacobian[:, :k_max + 1], flow.jacobian_inv[:, :k_max + 1])
    running = window.running_condition_numbers()
    with np.errstate(over='ignore', invalid='ignore'):
        pulled = window.jacobian_inv @ system.diffusion(window.points)              # (P, K, N, n)
        integrand = E0.T @ (pulled @ np.swapaxes(pulled, -1, -2)) @ E0            # (P, K, d, d)
        steps = 0.5 * driver.dt * (integrand[:, 1:] + integrand[:, :-1])
        cumulative = np.concatenate([np.zeros_like(integrand[:, :1]), np.cumsum(steps, axis=1)], axis=1)

    samples = []
    for t, k in zip(times, indices):
        covariance = cumulative[:, k].copy()
        covariance = 0.5 * (covariance + np.swapaxes(covariance, -1, -2))
        condition = running[:, k]
        discarded = (~np.isfinite(condition) | (condition > tol.cond_max)
                     | ~np.all(np.isfinite(covariance), axis=(-2, -1)))
        covariance[discarded] = np.nan
        eigenvalues = np.full(covariance.shape[:-1], np.nan)
        determinant = np.full(covariance.shape[0], np.nan)
        if np.any(~discarded):
            eigenvalues[~discarded] = np.linalg.eigvalsh(covariance[~discarded])
            determinant[~discarded] = np.linalg.det(covariance[~discarded])
        samples.append(MalliavinSample(covariance, eigenvalues, determinant, condition, discarded, float(t)))
    return samples


def reduced_covariance(system: SdeSystem, driver: DrivingPath, t: Optional[float] = None,
                       n_sub: Optional[int] = None) -> MalliavinSample:
    """
    C̄_t = ∫₀ᵗ Z_τ⁻¹ X(Σ_τ) X(Σ_τ)ᵀ Z_τ⁻ᵀ dτ (격자 위 사다리꼴 규칙)

    Z 는 상태와 함께 적분한 주변 야코비안 흐름이고, 결과는 시작점의 접평면
    정규직교 기저로 읽는다 (평평한 모델에서는 표준 기저).

    Args:
        system: 다항식 또는 클로저 벡터장 SDE 계
        driver: n 차원 구동 경로
        t: 적분 상한 (격자 위, 기본은 구동 경로의 끝)
        n_sub: 구간당 RK4 하위 스텝 수

    Returns:
        MalliavinSample: 경로별 C̄_t
    """
    t = driver.horizon if t is None else float(t)
    return reduced_covariance_path(system, driver, [t], n_sub=n_sub)[0]


def check_monotone_in_time(samples: Sequence[MalliavinSample], cov_tol: float) -> np.ndarray:
    """
    시각 순서의 표본에서 C̄_s ≤ C̄_t (s < t, 경로별 뢰브너 순서) 확인

    Returns:
        np.ndarray: 연속 시각 쌍마다 경로별 λ_min(C̄_t − C̄_s), shape (len−1, P) (버린 경로는 NaN)

    Raises:
        EstimatorError: 시각이 증가하지 않거나 차이가 −cov_tol 아래의 고유값을 가질 때
    """
    times = [s.t for s in samples]
    if np.any(np.diff(times) <= 0):
        raise EstimatorError(f"시각이 엄격히 증가해야 합니다: {times}")
    gaps = np.full((max(len(samples) - 1, 0), samples[0].n_paths if samples else 0), np.nan)
    for i, (early, late) in enumerate(zip(samples, samples[1:])):
        keep = ~(early.discarded | late.discarded)
        if not np.any(keep):
            continue
        diff = late.covariance[keep] - early.covariance[keep]
        gaps[i, keep] = np.linalg.eigvalsh(0.5 * (diff + np.swapaxes(diff, -1, -2)))[:, 0]
        scale = 1.0 + np.max(np.abs(late.covariance[keep]), axis=(-2, -1))
        if np.any(gaps[i, keep] < -cov_tol * scale):
            worst = float(np.min(gaps[i, keep]))
            raise EstimatorError(f"C̄_t 가 t={early.t} → {late.t} 에서 감소합니다 (λ_min = {worst:.3e})")
    return gaps


def check_fraction_monotone(frame: pd.DataFrame) -> pd.DataFrame:
    """
    ε 내림차순 표에서 P(λ_min < ε), P(det < ε) 가 비증가인지 확인

    Raises:
        EstimatorError: ε 가 작아질 때 비율이 증가하는 경우
    """
    if np.any(np.diff(frame['epsilon'].to_numpy()) >= 0):
        raise EstimatorError("epsilon 열은 엄격한 내림차순이어야 합니다")
    for column in ('frac_lambda_min', 'frac_det'):
        if np.any(np.diff(frame[column].to_numpy()) > 0):
            raise EstimatorError(f"{column} 가 ε 감소에 대해 단조 비증가가 아닙니다")
    return frame


class CovarianceJob(PathJob):
    """
    경로별 (λ_min, det C̄_t, λ_max); 버린 경로는 NaN 행

    격자 중간 시각의 C̄ 도 함께 계산해 C̄ 가 시간에 대해 단조 증가하는지 확인한다.
    """

    labels = ['lambda_min', 'determinant', 'lambda_max']

    def __init__(self, system: SdeSystem, t: float, params: McParams):
        self.system, self.t, self.params = system, t, params
        self.antithetic = False

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p = self.params
        cov_tol = self.system.model.tolerances.cov_tol
        driver = sample_drivers(self.system.noise_dim, self.t, p.dt, p.seed, path_indices)
        times = [driver.times[driver.n_steps // 2], self.t] if driver.n_steps >= 2 else [self.t]
        samples = reduced_covariance_path(self.system, driver, times, n_sub=p.n_sub)
        for sample in samples:
            sample.check(cov_tol)
        check_monotone_in_time(samples, cov_tol)
        sample = samples[-1]
        return np.column_stack([sample.eigenvalues[:, 0], sample.determinant, sample.eigenvalues[:, -1]])

    def describe(self):
        return {'estimator': 'malliavin', 'system': self.system.name, 't': self.t}


def nondegeneracy_report(system: SdeSystem, t: float, params: Optional[McParams] = None,
                         epsilons: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
                         engine: Optional[MonteCarloEngine] = None) -> pd.DataFrame:
    """
    ε 별 P(λ_min < ε), P(det C̄_t < ε) (버리지 않은 경로 기준)

    Args:
        system: SDE 계
        t: 시각 (> 0)
        params: 몬테카를로 파라미터 (antithetic 무시)
        epsilons: 양의 임계값 목록
        engine: 병렬 엔진

    Returns:
        pd.DataFrame: epsilon 내림차순, 열 epsilon, frac_lambda_min, frac_det, n_paths, n_discarded

    Raises:
        EstimatorError: ε 가 작아질 때 비율이 증가하거나 C̄ 가 시간에 대해 감소하는 경우
    """
    params = params or McParams.from_settings()
    engine = engine or MonteCarloEngine.from_settings()
    if t <= 0:
        raise EstimatorError(f"t 는 양수여야 합니다: {t}")
    try:
        steps_for_horizon(t, params.dt)
    except ValueError as e:
        raise EstimatorError(str(e))
    epsilons = sorted((float(e) for e in epsilons), reverse=True)
    if not epsilons or epsilons[-1] <= 0:
        raise EstimatorError(f"epsilons 는 양수 목록이어야 합니다: {epsilons}")

    values = engine.collect(CovarianceJob(system, t, params.with_(antithetic=False)), params.n_paths)
    kept = values[np.all(np.isfinite(values), axis=1)]
    n_discarded = values.shape[0] - kept.shape[0]
    if kept.shape[0] == 0:
        raise EstimatorError("모든 경로가 버려졌습니다 (cond_max 초과)")

    frame = pd.DataFrame({
        'epsilon': epsilons,
        'frac_lambda_min': [float(np.mean(kept[:, 0] < e)) for e in epsilons],
        'frac_det': [float(np.mean(kept[:, 1] < e)) for e in epsilons],
        'n_paths': kept.shape[0],
        'n_discarded': n_discarded,
    })
    return check_fraction_monotone(frame)
