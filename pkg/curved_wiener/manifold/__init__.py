"""
Embedded manifold models
매장 다양체 모듈
"""

from .model import ManifoldModel, TangentVector, tangent_project, dQ_dir
from .builtin import flat, sphere, cylinder, torus, sl2, so3
from .factory import ManifoldFactory, make_manifold, parse_manifold_spec

__all__ = [
    'ManifoldModel',
    'TangentVector',
    'tangent_project',
    'dQ_dir',
    'flat',
    'sphere',
    'cylinder',
    'torus',
    'sl2',
    'so3',
    'ManifoldFactory',
    'make_manifold',
    'parse_manifold_spec',
]
