"""
Shared pytest fixtures
공통 테스트 픽스처
"""

import os

import numpy as np
import pytest

from curved_wiener.config import reset_settings
from curved_wiener.estimators import MonteCarloEngine
from curved_wiener.manifold import make_manifold

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture(autouse=True)
def project_settings(monkeypatch):
    """저장소 루트의 config.yaml 기준, CW_SEED 없이 실행"""
    monkeypatch.chdir(ROOT)
    monkeypatch.delenv('CW_SEED', raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def sphere3():
    return make_manifold('sphere:N=3,rho=1')


@pytest.fixture
def flat2():
    return make_manifold('flat:N=2')


@pytest.fixture
def engine():
    return MonteCarloEngine(workers=1, chunk_size=500)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
