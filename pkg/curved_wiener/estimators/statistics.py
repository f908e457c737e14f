"""
Monte Carlo statistics
몬테카를로 추정 결과와 스트리밍 평균/분산 누적
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import EstimatorError


@dataclass
class McEstimate:
    """
    몬테카를로 추정 결과

    Attributes:
        mean: 성분별 평균
        stderr: 성분별 표준오차 (sample_std / sqrt(n_paths))
        n_paths: 사용한 표본 수 (대칭 변량이면 짝 수)
        labels: 성분 이름
        seed: 마스터 시드
        dt: 격자 간격
        n_discarded: 버려진 경로 수 (NaN 행)
        metadata: 기타 (기저, 추정기 이름 등)
    """
    mean: np.ndarray
    stderr: np.ndarray
    n_paths: int
    labels: List[str] = field(default_factory=list)
    seed: int = 0
    dt: float = float('nan')
    n_discarded: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.stderr = np.atleast_1d(np.asarray(self.stderr, dtype=float))
        if not self.labels:
            self.labels = [str(i) for i in range(len(self.mean))]

    def __getitem__(self, label: str) -> tuple:
        """(평균, 표준오차) 를 성분 이름으로"""
        i = self.labels.index(label)
        return float(self.mean[i]), float(self.stderr[i])

    def within(self, target, n_sigma: float = 3.0, slack: float = 0.0) -> bool:
        """|mean − target| ≤ n_sigma·stderr + slack (모든 성분)"""
        return bool(np.all(np.abs(self.mean - np.asarray(target, dtype=float)) <= n_sigma * self.stderr + slack))

    def ambient(self) -> np.ndarray:
        """T_oM 기저 좌표 평균을 주변 벡터로 변환 (metadata['basis'] 필요)"""
        basis = self.metadata.get('basis')
        if basis is None:
            raise EstimatorError("기저 정보가 없는 추정치입니다")
        return np.asarray(basis) @ self.mean

    def to_frame(self, estimator: str) -> pd.DataFrame:
        """estimator, component, mean, stderr, n_paths, dt, seed 열 표"""
        return pd.DataFrame({
            'estimator': estimator,
            'component': self.labels,
            'mean': self.mean,
            'stderr': self.stderr,
            'n_paths': self.n_paths,
            'n_discarded': self.n_discarded,
            'dt': self.dt,
            'seed': self.seed,
        })

    @classmethod
    def from_samples(cls, values: np.ndarray, labels: Optional[Sequence[str]] = None,
                     **kwargs) -> 'McEstimate':
        """
        경로별 값 (P, k) 에서 추정치 생성 (NaN 행은 버림)
        """
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        keep = ~np.any(np.isnan(values), axis=1)
        kept = values[keep]
        n = kept.shape[0]
        if n < 2:
            raise EstimatorError(f"표본이 너무 적습니다 (n={n} < 2)")
        mean = kept.mean(axis=0)
        stderr = kept.std(axis=0, ddof=1) / np.sqrt(n)
        return cls(mean, stderr, n, labels=list(labels or []), n_discarded=int(np.sum(~keep)), **kwargs)


class RunningMoments:
    """
    스트리밍 평균/분산 누적 (Welford 갱신 + Chan 병합)
    """

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)
        self.discarded = 0

    def update(self, values: np.ndarray) -> 'RunningMoments':
        """블록 (n, dim) 추가 (NaN 행은 버림)"""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        keep = ~np.any(np.isnan(values), axis=1)
        self.discarded += int(np.sum(~keep))
        block = values[keep]
        if block.shape[0] == 0:
            return self
        other = RunningMoments(self.mean.shape[0])
        other.count = block.shape[0]
        other.mean = block.mean(axis=0)
        other.m2 = np.sum((block - other.mean) ** 2, axis=0)
        return self.merge(other)

    def merge(self, other: 'RunningMoments') -> 'RunningMoments':
        """두 누적기 병합 (in-place)"""
        if other.count == 0:
            self.discarded += other.discarded
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / total)
        self.m2 = self.m2 + other.m2 + delta ** 2 * (self.count * other.count / total)
        self.count = total
        self.discarded += other.discarded
        return self

    def variance(self) -> np.ndarray:
        if self.count < 2:
            raise EstimatorError(f"표본이 너무 적습니다 (n={self.count} < 2)")
        return self.m2 / (self.count - 1)

    def to_estimate(self, labels: Optional[Sequence[str]] = None, **kwargs) -> McEstimate:
        stderr = np.sqrt(self.variance() / self.count)
        return McEstimate(self.mean.copy(), stderr, self.count, labels=list(labels or []),
                          n_discarded=self.discarded, **kwargs)


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """log y = a + γ log x 최소제곱 기울기 γ"""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
