"""
Path-space integration by parts and the flat Clark-Ocone check
경로 공간 부분적분 잔차와 평평한 Clark-Ocone 표현 점검
"""

from typing import Optional, Sequence

import numpy as np
import sympy as sp

from ..errors import EstimatorError, NonPolynomialError, PathError
from ..geometry.fields import _check_polynomial, _parse_expression, ambient_symbols, lambdify_array
from ..manifold.model import ManifoldModel
from ..sde.driver import CameronMartinPath, sample_drivers
from ..sde.simulate import simulate_projection_bm
from ..utils.validation import grid_index, steps_for_horizon
from .engine import McParams, MonteCarloEngine, PathJob
from .statistics import McEstimate

IBP_VARIANTS = ('position', 'velocity')


def _rebuild_cylinder_function(times, expression, ambient_dim):
    return CylinderFunction(times, expression, ambient_dim)


class CylinderFunction:
    """
    원통 함수 F(σ) = f(σ_{s_1}, …, σ_{s_k}), f 는 주변 좌표의 다항식

    기호 이름은 x{좌표}_{시각}, 예를 들어 x3_2 는 σ_{s_2} 의 세 번째 좌표.
    시각이 하나뿐이면 x1..xN 도 허용한다.

    Args:
        times: 증가하는 양의 시각 s_1 < … < s_k
        expression: 다항식 (문자열 또는 sympy 식)
        ambient_dim: 주변 차원 N
    """

    def __init__(self, times: Sequence[float], expression, ambient_dim: int):
        self.times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(self.times <= 0) or np.any(np.diff(self.times) <= 0):
            raise PathError(f"원통 함수 시각은 양수이며 증가해야 합니다: {self.times}")
        self.ambient_dim = int(ambient_dim)
        k, N = len(self.times), self.ambient_dim
        self.symbols = [[sp.Symbol(f"x{a + 1}_{i + 1}", real=True) for a in range(N)] for i in range(k)]
        flat_symbols = [s for row in self.symbols for s in row]
        local = {str(s): s for s in flat_symbols}
        if k == 1:
            local.update({str(s): row for s, row in zip(ambient_symbols(N), self.symbols[0])})
        if isinstance(expression, sp.Expr):
            expr = expression
        else:
            try:
                expr = sp.sympify(expression, locals=local)
            except (sp.SympifyError, SyntaxError, TypeError) as e:
                raise NonPolynomialError(f"식을 해석할 수 없습니다: {expression!r} ({e})")
        unknown = expr.free_symbols - set(flat_symbols)
        if unknown:
            raise NonPolynomialError(f"알 수 없는 기호: {sorted(map(str, unknown))}")
        self.expression = _check_polynomial(expr, flat_symbols)
        self._value = lambdify_array([self.expression], flat_symbols)
        self._grad = lambdify_array([sp.diff(self.expression, s) for s in flat_symbols], flat_symbols)

    def __reduce__(self):
        return (_rebuild_cylinder_function, (self.times, str(self.expression), self.ambient_dim))

    def __repr__(self):
        return f"CylinderFunction(times={self.times.tolist()}, f={self.expression})"

    @property
    def n_times(self) -> int:
        return len(self.times)

    def _flatten(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points.reshape(points.shape[:-2] + (self.n_times * self.ambient_dim,))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """points: (..., k, N) -> (...)"""
        return self._value(self._flatten(points))[..., 0]

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """시각별 주변 기울기 grad_i f, shape (..., k, N)"""
        points = np.asarray(points, dtype=float)
        return self._grad(self._flatten(points)).reshape(points.shape)

    def grid_indices(self, times: np.ndarray) -> np.ndarray:
        return np.array([grid_index(times, s, name='원통 함수 시각') for s in self.times])


class IbpJob(PathJob):
    """경로별 (X^h F, F z^h) 와 그 차"""

    labels = ['residual', 'directional', 'divergence']

    def __init__(self, model: ManifoldModel, origin, h: CameronMartinPath, F: CylinderFunction,
                 T: float, params: McParams, variant: str = 'position'):
        if variant not in IBP_VARIANTS:
            raise EstimatorError(f"알 수 없는 variant: {variant} (사용 가능: {', '.join(IBP_VARIANTS)})")
        if h.dim != model.manifold_dim:
            raise EstimatorError(f"h 의 차원 {h.dim} ≠ d={model.manifold_dim}")
        if F.ambient_dim != model.ambient_dim:
            raise EstimatorError(f"원통 함수 차원 {F.ambient_dim} ≠ N={model.ambient_dim}")
        self.model, self.origin, self.h, self.F = model, np.asarray(origin, float), h, F
        self.T, self.params, self.variant = T, params, variant
        self.antithetic = params.antithetic
        try:
            K = steps_for_horizon(T, params.dt)
        except ValueError as e:
            raise EstimatorError(str(e))
        self.times = np.linspace(0.0, T, K + 1)
        self.indices = F.grid_indices(self.times)

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p, model = self.params, self.model
        driver = sample_drivers(model.ambient_dim, self.T, p.dt, p.seed, path_indices, antithetic=p.antithetic)
        path = simulate_projection_bm(model, self.origin, driver, n_sub=p.n_sub)
        times = path.times

        # X^h F = Σ_i ⟨grad_i f, //_{s_i} h(s_i)⟩
        sampled = path.points[:, self.indices]                               # (P, k, N)
        U = path.tangent_frames()[:, self.indices]                           # (P, k, N, d)
        moved = np.einsum('pknd,kd->pkn', U, self.h(self.F.times))
        directional = np.sum(self.F.gradients(sampled) * moved, axis=(-2, -1))

        # z^h = Σ_k ⟨h′_k + ½ Ric_//(t_k) h(t_k), Δb_k⟩ (velocity 변형은 Ric 항에 h′)
        slopes = self.h.slopes(times)                                        # (K, d)
        inside = slopes if self.variant == 'velocity' else self.h(times[:-1])
        ric = path.ricci_parallel[:, :-1]
        weight = slopes[None] + 0.5 * np.einsum('pkij,kj->pki', ric, inside)
        db = np.diff(path.antidev, axis=1)
        divergence = self.F(sampled) * np.sum(weight * db, axis=(-2, -1))
        return np.column_stack([directional - divergence, directional, divergence])

    def describe(self):
        return {'estimator': 'ibp', 'cylinder': str(self.F.expression),
                'cylinder_times': self.F.times, 'h_knots': self.h.knots, 'h_values': self.h.values,
                'T': self.T, 'variant': self.variant, 'basis': self.model.tangent_basis(self.origin)}


def ibp_residual(model: ManifoldModel, o, h: CameronMartinPath, F: CylinderFunction,
                 T: float = 1.0, params: Optional[McParams] = None,
                 engine: Optional[MonteCarloEngine] = None,
                 variant: str = 'position', rescale: bool = True) -> McEstimate:
    """
    부분적분 잔차 E[X^h F] − E[F z^h]

    h 는 T_oM 기저 좌표의 카메론-마틴 경로다. rescale=True 이고 T ≠ 1 이면
    [0,1] 위의 h 를 sqrt(T)·h(t/T) 로 옮긴다. 원통 함수 시각은 [0,T] 의 절대 시각이다.

    Args:
        model: 다양체 모델
        o: 시작점
        h: 카메론-마틴 경로
        F: 원통 함수
        T: 시간 지평
        params: 몬테카를로 파라미터
        engine: 병렬 엔진
        variant: 'position' (Ric_// h) 또는 'velocity' (Ric_// h′)
        rescale: h 를 지평 T 로 재척도화할지 여부

    Returns:
        McEstimate: 성분 residual, directional, divergence
    """
    params = params or McParams.from_settings()
    engine = engine or MonteCarloEngine.from_settings()
    model.check_on_manifold(o, what='시작점')
    if rescale and T != 1.0:
        h = h.rescaled(T)
    job = IbpJob(model, o, h, F, T, params, variant)
    return engine.run(job, params.n_paths, seed=params.seed, dt=params.dt)


def gaussian_smoothing(expr, symbols: Sequence[sp.Symbol], tau) -> sp.Expr:
    """
    다항식의 정확한 열 반군 e^{τΔ/2} f = Σ_n (τ/2)^n Δ^n f / n!

    Args:
        expr: 다항식
        symbols: 변수 기호
        tau: 시간 (수 또는 sympy 기호)

    Returns:
        sp.Expr: 전개된 다항식
    """
    expr = _check_polynomial(expr, symbols)
    total, term, n = sp.Integer(0), expr, 0
    while term != 0:
        total += (sp.sympify(tau) / 2) ** n / sp.factorial(n) * term
        term = sp.expand(sum(sp.diff(term, s, 2) for s in symbols))
        n += 1
    return sp.expand(total)


class ClarkOconeJob(PathJob):
    """경로별 표현 결함 D = f(b_t) − E f(b_t) − Σ_k ⟨∇H(t_k, b_k), ΔB_k⟩"""

    labels = ['defect_sq', 'defect']

    def __init__(self, expression: str, dim: int, t: float, params: McParams):
        self.expression, self.dim, self.t, self.params = str(expression), int(dim), t, params
        self.antithetic = params.antithetic
        symbols = ambient_symbols(self.dim)
        f = _check_polynomial(_parse_expression(expression, symbols), symbols)
        tau = sp.Symbol('tau', nonnegative=True)
        H = gaussian_smoothing(f, symbols, tau)
        self.mean = float(H.subs({s: 0 for s in symbols}).subs(tau, t))
        self._f = lambdify_array([f], symbols)
        self._grad_H = lambdify_array([sp.diff(H, s) for s in symbols], list(symbols) + [tau])

    def __getstate__(self):
        return {'expression': self.expression, 'dim': self.dim, 't': self.t, 'params': self.params}

    def __setstate__(self, state):
        self.__init__(state['expression'], state['dim'], state['t'], state['params'])

    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        p = self.params
        driver = sample_drivers(self.dim, self.t, p.dt, p.seed, path_indices, antithetic=p.antithetic)
        b = driver.values()                                                  # (P, K+1, d)
        tau = np.broadcast_to(self.t - driver.times[:-1], (b.shape[0], driver.n_steps))
        integrand = self._grad_H(np.concatenate([b[:, :-1], tau[..., None]], axis=-1))
        integral = np.sum(integrand * driver.increments, axis=(-2, -1))
        defect = self._f(b[:, -1])[:, 0] - self.mean - integral
        return np.column_stack([defect ** 2, defect])

    def describe(self):
        return {'estimator': 'clark-ocone', 'function': self.expression, 'dim': self.dim,
                't': self.t, 'expected_value': self.mean}


def clark_ocone_check(expression, dim: int, t: float,
                      params: Optional[McParams] = None,
                      engine: Optional[MonteCarloEngine] = None) -> McEstimate:
    """
    평평한 Clark-Ocone 점검: E[(f(b_t) − E f(b_t) − ∫ a·db)²], a_s = ∇H(s, b_s)

    H(s, ·) = e^{(t−s)Δ/2} f 는 gaussian_smoothing 으로 닫힌 형태로 계산한다.

    Args:
        expression: b_t 의 다항식 f (x1..x_dim)
        dim: 브라운 운동 차원
        t: 시간 (> 0)

    Returns:
        McEstimate: 성분 defect_sq (Δ → 0 에서 0), defect

    Raises:
        NonPolynomialError: f 가 다항식이 아닐 때
    """
    if t <= 0:
        raise EstimatorError(f"t 는 양수여야 합니다: {t}")
    params = params or McParams.from_settings()
    engine = engine or MonteCarloEngine.from_settings()
    try:
        steps_for_horizon(t, params.dt)
    except ValueError as e:
        raise EstimatorError(str(e))
    job = ClarkOconeJob(expression, dim, t, params)
    return engine.run(job, params.n_paths, seed=params.seed, dt=params.dt)
