"""
Development map and flows
전개 사상과 흐름 모듈
"""

from .flows import rk4_step, integrate_flow, TimeDependentField
from .rolling import EuclideanPath, develop, develop_batch, antidevelop

__all__ = [
    'rk4_step',
    'integrate_flow',
    'TimeDependentField',
    'EuclideanPath',
    'develop',
    'develop_batch',
    'antidevelop',
]
