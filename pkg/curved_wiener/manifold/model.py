"""
Embedded manifold model
제약식 F(m)=0 으로 주어진 매장 다양체와 사영 연산자 P, Q

All point-wise operations accept arrays with arbitrary leading batch axes,
i.e. points of shape (..., N); the Monte Carlo layers rely on this.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp

from ..config.tolerances import NumericalTolerances, DEFAULT_TOLERANCES
from ..errors import OffManifoldError, RankDeficiencyError, RetractionError, GeometryError

ArrayMap = Callable[[np.ndarray], np.ndarray]


def _rebuild_model(spec: str, tolerances: NumericalTolerances) -> 'ManifoldModel':
    """워커 프로세스에서 스펙 문자열로 모델 재생성"""
    from .factory import make_manifold
    return make_manifold(spec, tolerances=tolerances)


@dataclass(frozen=True, eq=False)
class ManifoldModel:
    """
    매장 다양체 M ⊂ R^N 모델 (불변 객체, 워커 간 공유 가능)

    Attributes:
        name: 모델 이름 ('sphere' 등)
        ambient_dim: 주변 공간 차원 N
        manifold_dim: 다양체 차원 d
        scale: 특성 길이 (유한차분 스텝, tol_F 계산에 사용)
        constraint: F(x) -> (..., N-d)
        constraint_jacobian: F′(x) -> (..., N-d, N)
        constraint_hessian: F″(x)(v, w) -> (..., N-d)
        analytic_projection: Q(x) 해석식 (선택)
        analytic_dq: dQ(x, v) 해석식 (선택)
        analytic_retraction: 정확한 최근접점 사영 (선택)
        symbolic_projection: sympy 기호 -> Q(x) 다항식 행렬 (선택)
        sampler: 무작위 점 생성기 (테스트/기하 점검용)
        base_point: 기본 시작점 (CLI 에서 --origin 생략 시)
        spec: 재생성용 스펙 문자열
    """
    name: str
    ambient_dim: int
    manifold_dim: int
    scale: float = 1.0
    constraint: Optional[ArrayMap] = None
    constraint_jacobian: Optional[ArrayMap] = None
    constraint_hessian: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    analytic_projection: Optional[ArrayMap] = None
    analytic_dq: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    analytic_retraction: Optional[ArrayMap] = None
    symbolic_projection: Optional[Callable[[Sequence[sp.Symbol]], sp.Matrix]] = None
    sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    base_point: Optional[Sequence[float]] = None
    spec: str = ''
    tolerances: NumericalTolerances = field(default=DEFAULT_TOLERANCES)

    def __post_init__(self):
        if self.ambient_dim < 1 or not 1 <= self.manifold_dim <= self.ambient_dim:
            raise ValueError(
                f"잘못된 차원: N={self.ambient_dim}, d={self.manifold_dim}"
            )
        if self.scale <= 0:
            raise ValueError(f"scale 은 양수여야 합니다: {self.scale}")
        if self.codim > 0 and (self.constraint is None or self.constraint_jacobian is None):
            raise ValueError(f"{self.name}: 제약식과 야코비안이 필요합니다 (codim={self.codim})")

    def __reduce__(self):
        if not self.spec:
            raise TypeError(f"스펙 문자열이 없는 모델은 직렬화할 수 없습니다: {self.name}")
        return (_rebuild_model, (self.spec, self.tolerances))

    def __repr__(self) -> str:
        return f"ManifoldModel({self.spec or self.name}, N={self.ambient_dim}, d={self.manifold_dim})"

    # ------------------------------------------------------------------
    # 허용오차
    # ------------------------------------------------------------------
    @property
    def codim(self) -> int:
        return self.ambient_dim - self.manifold_dim

    @property
    def uses_finite_differences(self) -> bool:
        """dQ 를 유한차분으로 계산하는지 여부"""
        return self.codim > 0 and self.analytic_dq is None

    @property
    def tol_F(self) -> float:
        return self.tolerances.tol_F * self.scale

    @property
    def proj_tol(self) -> float:
        return self.tolerances.proj_tol(self.uses_finite_differences)

    @property
    def curv_tol(self) -> float:
        return self.tolerances.curv_tol(self.uses_finite_differences)

    # ------------------------------------------------------------------
    # 제약식
    # ------------------------------------------------------------------
    def as_points(self, x) -> np.ndarray:
        """입력을 (..., N) 실수 배열로 변환"""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.ambient_dim:
            raise ValueError(
                f"{self.name}: 마지막 축 길이는 N={self.ambient_dim} 이어야 합니다 (shape={arr.shape})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{self.name}: 유한하지 않은 좌표가 있습니다")
        return arr

    def constraint_value(self, x) -> np.ndarray:
        """F(x), shape (..., N-d)"""
        x = np.asarray(x, dtype=float)
        if self.codim == 0:
            return np.zeros(x.shape[:-1] + (0,))
        return np.asarray(self.constraint(x), dtype=float)

    def constraint_residual(self, x) -> np.ndarray:
        """‖F(x)‖, shape (...)"""
        return np.linalg.norm(self.constraint_value(x), axis=-1)

    def is_on_manifold(self, x) -> np.ndarray:
        return self.constraint_residual(x) <= self.tol_F

    def check_on_manifold(self, x, what: str = '점') -> np.ndarray:
        """다양체 위의 점인지 확인하고 배열로 반환"""
        x = self.as_points(x)
        if self.codim == 0:
            return x
        worst = float(np.max(self.constraint_residual(x)))
        if worst > self.tol_F:
            raise OffManifoldError(
                f"{what}이(가) {self.name} 위에 있지 않습니다: ‖F‖={worst:.3e} > tol_F={self.tol_F:.1e}"
            )
        return x

    # ------------------------------------------------------------------
    # 사영 연산자
    # ------------------------------------------------------------------
    def normal_projection(self, x, check: bool = True) -> np.ndarray:
        """Q(x), shape (..., N, N)"""
        x = self.check_on_manifold(x) if check else np.asarray(x, dtype=float)
        return self._normal_projection(x)

    def tangent_projection(self, x, check: bool = True) -> np.ndarray:
        """P(x) = I - Q(x), shape (..., N, N)"""
        return np.eye(self.ambient_dim) - self.normal_projection(x, check=check)

    def _normal_projection(self, x: np.ndarray) -> np.ndarray:
        N = self.ambient_dim
        if self.codim == 0:
            return np.zeros(x.shape[:-1] + (N, N))
        if self.analytic_projection is not None:
            return self.analytic_projection(x)
        # Q = F′ᵀ (F′F′ᵀ)⁻¹ F′
        J = np.asarray(self.constraint_jacobian(x), dtype=float)
        G = J @ np.swapaxes(J, -1, -2)
        smallest = np.sqrt(np.clip(np.linalg.eigvalsh(G)[..., 0], 0.0, None))
        if np.any(smallest <= self.tolerances.rank_tol):
            raise RankDeficiencyError(
                f"{self.name}: F′ 의 계수가 부족합니다 (최소 특이값 {float(np.min(smallest)):.3e})"
            )
        return np.swapaxes(J, -1, -2) @ np.linalg.solve(G, J)

    def directional_dq(self, x, v, check: bool = True) -> np.ndarray:
        """dQ(v_x), shape (..., N, N); x, v 는 브로드캐스트 가능"""
        x = self.check_on_manifold(x) if check else np.asarray(x, dtype=float)
        return self._dq(x, np.asarray(v, dtype=float))

    def _dq(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        N = self.ambient_dim
        x, v = np.broadcast_arrays(x, v)
        if self.codim == 0:
            return np.zeros(x.shape[:-1] + (N, N))
        if self.analytic_dq is not None:
            return self.analytic_dq(x, v)
        return self._finite_difference_dq(x, v)

    def _finite_difference_dq(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """수축된 곡선 s ↦ retract(x + s v̂) 위의 Q 중심차분"""
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(norm > 0, norm, 1.0)
        unit = v / safe
        h = self.tolerances.fd_step * self.scale
        q_plus = self._normal_projection(self._retract(x + h * unit))
        q_minus = self._normal_projection(self._retract(x - h * unit))
        dq = (q_plus - q_minus) / (2.0 * h) * norm[..., None]
        return 0.5 * (dq + np.swapaxes(dq, -1, -2))

    # ------------------------------------------------------------------
    # 수축
    # ------------------------------------------------------------------
    def retract(self, x) -> np.ndarray:
        """근접점 x 를 M 위로 되돌림 (‖F(m)‖ ≤ tol_F)"""
        return self._retract(self.as_points(x))

    def _retract(self, x: np.ndarray) -> np.ndarray:
        if self.codim == 0:
            return np.array(x, dtype=float, copy=True)
        basin = self.tolerances.retract_basin * self.scale
        residual = self.constraint_residual(x)
        if np.any(residual > basin):
            raise RetractionError(
                f"{self.name}: 수축 허용 영역 밖의 점입니다 (‖F‖={float(np.max(residual)):.3e} > {basin:.2e})"
            )
        if self.analytic_retraction is not None:
            return self.analytic_retraction(x)
        return self._gauss_newton(x)

    def _gauss_newton(self, x: np.ndarray) -> np.ndarray:
        """의사역행렬 기반 감쇠 Gauss-Newton"""
        shape = x.shape
        y = np.array(x, dtype=float, copy=True).reshape(-1, self.ambient_dim)
        F = self.constraint_value(y)
        r = np.linalg.norm(F, axis=-1)
        target = 1e-2 * self.tol_F
        damping = self.tolerances.retract_damping

        for _ in range(self.tolerances.max_retract_iters):
            active = np.flatnonzero(r > target)
            if active.size == 0:
                break
            ya = y[active]
            J = np.asarray(self.constraint_jacobian(ya), dtype=float)
            G = J @ np.swapaxes(J, -1, -2)
            step = np.einsum('pcn,pc->pn', J, np.linalg.solve(G, F[active][..., None])[..., 0])
            trial = ya - step
            F_trial = self.constraint_value(trial)
            r_trial = np.linalg.norm(F_trial, axis=-1)
            worse = r_trial > r[active]
            if np.any(worse):
                trial[worse] = ya[worse] - damping * step[worse]
                F_trial[worse] = self.constraint_value(trial[worse])
                r_trial[worse] = np.linalg.norm(F_trial[worse], axis=-1)
            y[active] = trial
            F[active] = F_trial
            r[active] = r_trial

        if np.any(r > self.tol_F):
            raise RetractionError(
                f"{self.name}: Gauss-Newton 이 {self.tolerances.max_retract_iters}회 안에 수렴하지 않았습니다 "
                f"(‖F‖={float(np.max(r)):.3e}); 상위 스텝 크기를 줄이세요"
            )
        return y.reshape(shape)

    # ------------------------------------------------------------------
    # 접공간 기저 / 표본
    # ------------------------------------------------------------------
    def tangent_basis(self, m) -> np.ndarray:
        """
        P(m) 의 열에 대한 피벗 Gram-Schmidt 로 얻은 정규직교 기저

        Args:
            m: 다양체 위의 한 점 (N,)

        Returns:
            np.ndarray: (N, d) 기저 행렬, 동률은 낮은 열 번호 우선
        """
        m = self.check_on_manifold(m)
        if m.ndim != 1:
            raise ValueError("tangent_basis 는 단일 점만 받습니다")
        residual = self.tangent_projection(m, check=False)
        columns = []
        for _ in range(self.manifold_dim):
            norms = np.linalg.norm(residual, axis=0)
            pivot = int(np.argmax(norms))
            if norms[pivot] <= self.tolerances.rank_tol:
                raise RankDeficiencyError(f"{self.name}: 접공간 기저를 만들 수 없습니다")
            e = residual[:, pivot] / norms[pivot]
            columns.append(e)
            residual = residual - np.outer(e, e @ residual)
        return np.column_stack(columns)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        """무작위 점 (sampler 가 있는 내장 모델)"""
        if self.sampler is None:
            raise NotImplementedError(f"{self.name}: 무작위 점 생성기가 없습니다")
        return self.retract(self.sampler(rng))

    def origin(self) -> np.ndarray:
        """기본 시작점 (base_point, 없으면 시드 0 무작위 점)"""
        if self.base_point is not None:
            return self.check_on_manifold(np.array(self.base_point, dtype=float), what='base_point')
        return self.random_point(np.random.default_rng(0))

    def random_tangent(self, m, rng: np.random.Generator) -> 'TangentVector':
        """m 에서의 무작위 접벡터"""
        m = self.check_on_manifold(m)
        return TangentVector(m, self.tangent_projection(m, check=False) @ rng.standard_normal(self.ambient_dim))


@dataclass(frozen=True)
class TangentVector:
    """기저점 base 와 접평면 위의 주변 벡터 vec"""
    base: np.ndarray
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'base', np.asarray(self.base, dtype=float))
        object.__setattr__(self, 'vec', np.asarray(self.vec, dtype=float))
        if self.base.shape != self.vec.shape:
            raise ValueError(f"base/vec shape 불일치: {self.base.shape} vs {self.vec.shape}")

    def validate(self, model: ManifoldModel) -> 'TangentVector':
        """‖Q(base) vec‖ ≤ tang_tol (1 + ‖vec‖) 확인"""
        Q = model.normal_projection(self.base)
        normal_part = float(np.linalg.norm(Q @ self.vec))
        bound = model.tolerances.tang_tol * (1.0 + float(np.linalg.norm(self.vec)))
        if normal_part > bound:
            raise GeometryError(f"접벡터가 아닙니다: ‖Q v‖={normal_part:.3e} > {bound:.1e}")
        return self


def tangent_project(model: ManifoldModel, m, v) -> TangentVector:
    """(m, P(m) v) 반환"""
    m = model.check_on_manifold(m)
    P = model.tangent_projection(m, check=False)
    return TangentVector(m, P @ np.asarray(v, dtype=float))


def dQ_dir(model: ManifoldModel, v: TangentVector) -> np.ndarray:
    """정사영 Q 의 방향 미분 dQ(v_m)"""
    v.validate(model)
    return model.directional_dq(v.base, v.vec, check=False)
