"""
Parallel Monte Carlo engine
경로 청크 단위 병렬 몬테카를로 엔진
"""

import os
import pickle
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from multiprocessing import Pool
from typing import Any, Dict, List, Optional

import numpy as np

from ..config.settings import get_settings
from ..errors import EstimatorError
from .statistics import McEstimate, RunningMoments


@dataclass(frozen=True)
class McParams:
    """
    몬테카를로 파라미터

    Attributes:
        dt: 격자 간격
        n_paths: 경로 수
        seed: 마스터 시드
        n_sub: Wong-Zakai 하위 스텝 수
        antithetic: 대칭 변량 짝짓기
    """
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 0
    n_sub: int = 4
    antithetic: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise EstimatorError(f"dt 는 양수여야 합니다: {self.dt}")
        if self.n_paths < 2:
            raise EstimatorError(f"n_paths 는 2 이상이어야 합니다: {self.n_paths}")
        if self.antithetic and self.n_paths % 2:
            raise EstimatorError(f"대칭 변량은 짝수 경로 수가 필요합니다: {self.n_paths}")

    @classmethod
    def from_settings(cls, **overrides) -> 'McParams':
        """config.yaml 기본값 + 덮어쓰기"""
        settings = get_settings()
        values = {
            'dt': float(settings.get_default('dt')),
            'n_paths': int(settings.get_default('paths')),
            'seed': settings.default_seed(),
            'n_sub': int(settings.get_default('n_sub')),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_(self, **changes) -> 'McParams':
        return replace(self, **changes)


class PathJob(ABC):
    """경로 번호 묶음을 받아 경로별 값 (P, k) 를 계산하는 작업 (피클 가능해야 병렬 실행)"""

    labels: List[str] = []
    antithetic: bool = False

    @abstractmethod
    def evaluate(self, path_indices: np.ndarray) -> np.ndarray:
        """경로별 값 (NaN 행 = 버린 경로)"""

    def describe(self) -> Dict[str, Any]:
        """결과 메타데이터"""
        return {}


def _evaluate_chunk(args):
    """워커 프로세스 진입점"""
    chunk_id, job, indices = args
    return chunk_id, np.asarray(job.evaluate(indices), dtype=float)


class MonteCarloEngine:
    """고정 크기 경로 청크 병렬 실행 엔진 (청크 구성은 워커 수와 무관)"""

    def __init__(self, workers: Optional[int] = None, chunk_size: int = 1000,
                 deterministic: bool = True, verbose: bool = False):
        """
        몬테카를로 엔진 초기화

        Args:
            workers: 프로세스 수 (None 이면 CPU 수)
            chunk_size: 청크당 경로 수
            deterministic: True 면 경로 순서 2-pass 축약 (비트 단위 재현)
            verbose: 진행 상황 출력
        """
        if chunk_size < 2:
            raise EstimatorError(f"chunk_size 는 2 이상이어야 합니다: {chunk_size}")
        self.workers = workers if workers is not None else (os.cpu_count() or 1)
        self.chunk_size = int(chunk_size)
        self.deterministic = deterministic
        self.verbose = verbose

    @classmethod
    def from_settings(cls, **overrides) -> 'MonteCarloEngine':
        settings = get_settings()
        values = {
            'workers': settings.get_default('workers'),
            'chunk_size': int(settings.get_default('chunk_size')),
            'deterministic': bool(settings.get_default('deterministic')),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def _chunks(self, n_paths: int, antithetic: bool) -> List[np.ndarray]:
        size = self.chunk_size + (self.chunk_size % 2 if antithetic else 0)
        return [np.arange(start, min(start + size, n_paths)) for start in range(0, n_paths, size)]

    def _picklable(self, job: PathJob) -> bool:
        try:
            pickle.dumps(job)
            return True
        except Exception as e:
            print(f"⚠️ 작업을 직렬화할 수 없어 단일 프로세스로 실행합니다: {e}")
            return False

    def _iter_chunks(self, job: PathJob, chunks: List[np.ndarray], ordered: bool):
        tasks = [(i, job, idx) for i, idx in enumerate(chunks)]
        n_procs = min(self.workers, len(tasks))
        if n_procs <= 1 or not self._picklable(job):
            for task in tasks:
                yield _evaluate_chunk(task)
            return
        with Pool(processes=n_procs) as pool:
            iterator = pool.imap(_evaluate_chunk, tasks) if ordered else pool.imap_unordered(_evaluate_chunk, tasks)
            for result in iterator:
                yield result

    @staticmethod
    def _pair_average(values: np.ndarray) -> np.ndarray:
        return 0.5 * (values[0::2] + values[1::2])

    def collect(self, job: PathJob, n_paths: int) -> np.ndarray:
        """
        경로별 값을 경로 번호 순서로 수집

        Returns:
            np.ndarray: (n_paths, k)
        """
        if n_paths < 1:
            raise EstimatorError(f"n_paths 는 1 이상이어야 합니다: {n_paths}")
        chunks = self._chunks(n_paths, job.antithetic)
        if self.verbose:
            print(f"🚀 몬테카를로 실행: {n_paths:,} 경로, {len(chunks)} 청크, 워커 {self.workers}")
        blocks: Dict[int, np.ndarray] = {}
        for chunk_id, values in self._iter_chunks(job, chunks, ordered=True):
            blocks[chunk_id] = values.reshape(len(chunks[chunk_id]), -1)
            if self.verbose:
                print(f"   📊 청크 {chunk_id + 1}/{len(chunks)} 완료")
        return np.concatenate([blocks[i] for i in range(len(chunks))], axis=0)

    def run(self, job: PathJob, n_paths: int, **estimate_kwargs) -> McEstimate:
        """
        경로 값의 평균과 표준오차

        결정 모드는 경로 순서로 모은 뒤 2-pass 로, 스트리밍 모드는 완료 순서대로
        Chan 병합으로 축약한다 (부동소수 결합법칙 범위에서 같은 값).
        """
        metadata = {**job.describe(), **estimate_kwargs.pop('metadata', {})}
        if self.deterministic:
            values = self.collect(job, n_paths)
            if job.antithetic:
                values = self._pair_average(values)
            estimate = McEstimate.from_samples(values, labels=job.labels, metadata=metadata, **estimate_kwargs)
        else:
            chunks = self._chunks(n_paths, job.antithetic)
            moments: Optional[RunningMoments] = None
            for _, values in self._iter_chunks(job, chunks, ordered=False):
                values = values.reshape(values.shape[0], -1)
                if job.antithetic:
                    values = self._pair_average(values)
                if moments is None:
                    moments = RunningMoments(values.shape[1])
                moments.update(values)
            estimate = moments.to_estimate(labels=job.labels, metadata=metadata, **estimate_kwargs)
        if self.verbose:
            print(f"✅ 추정 완료: n={estimate.n_paths:,}, 버린 경로 {estimate.n_discarded}")
        return estimate
