"""
Stratonovich SDE systems on manifolds
다양체 위 SDE 계 δΣ = X(Σ)δB + X₀(Σ)dt
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import RankDeficiencyError
from ..geometry.fields import PolynomialVectorField, VectorField, projection_fields
from ..manifold.model import ManifoldModel


@dataclass(eq=False)
class SdeSystem:
    """
    SDE 계

    Attributes:
        model: 다양체 모델
        fields: 확산 벡터장 X_1..X_n
        origin: 시작점 o
        drift: 표류 벡터장 X₀ (없으면 0)
        kind: 'projection' (X_i = P e_i), 'flat', 'generic'
        name: 내장 계 이름 (기록용)
    """
    model: ManifoldModel
    fields: List[VectorField]
    origin: np.ndarray
    drift: Optional[VectorField] = None
    kind: str = 'generic'
    name: str = ''

    def __post_init__(self):
        self.origin = self.model.check_on_manifold(self.origin, what='시작점')
        if not self.fields:
            raise ValueError("SDE 계에는 최소 하나의 벡터장이 필요합니다")

    @property
    def noise_dim(self) -> int:
        return len(self.fields)

    @property
    def is_polynomial(self) -> bool:
        fields = self.fields + ([self.drift] if self.drift is not None else [])
        return all(isinstance(f, PolynomialVectorField) for f in fields)

    def validate(self, points: Optional[np.ndarray] = None) -> 'SdeSystem':
        """표본 점(기본: 시작점)에서 모든 벡터장이 접하는지 확인"""
        points = self.origin if points is None else points
        for f in self.fields + ([self.drift] if self.drift is not None else []):
            f.check_tangent(points)
        return self

    def diffusion(self, x: np.ndarray) -> np.ndarray:
        """X(x), shape (..., N, n)"""
        return np.stack([f(x) for f in self.fields], axis=-1)

    def drift_value(self, x: np.ndarray) -> np.ndarray:
        if self.drift is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.drift(x)

    def diffusion_jacobian(self, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
        """Σ_i ω_i DX_i(x) + DX₀(x), shape (..., N, N)"""
        A = sum(w[..., None, None] * f.jacobian_matrix(x) for w, f in zip(np.moveaxis(omega, -1, 0), self.fields))
        if self.drift is not None:
            A = A + self.drift.jacobian_matrix(x)
        return A

    def check_surjective(self, points: np.ndarray) -> None:
        """X(m) 가 τ_mM 위로 전사인지 (계수 = d) 확인"""
        X = self.diffusion(np.atleast_2d(points))
        singular = np.linalg.svd(X, compute_uv=False)
        rank_tol = self.model.tolerances.malliavin_rank_tol
        ranks = np.sum(singular > rank_tol * singular[..., :1], axis=-1)
        if np.any(ranks < self.model.manifold_dim):
            raise RankDeficiencyError(
                f"X(m) 가 전사가 아닙니다 (계수 {int(np.min(ranks))} < d={self.model.manifold_dim})"
            )


def projection_bm_system(model: ManifoldModel, origin) -> SdeSystem:
    """X_i(m) = P(m) e_i, i = 1..N 인 사영 브라운 운동 계"""
    kind = 'flat' if model.codim == 0 else 'projection'
    return SdeSystem(model, projection_fields(model), np.asarray(origin, dtype=float), kind=kind,
                     name=f"projection:{model.spec}")
