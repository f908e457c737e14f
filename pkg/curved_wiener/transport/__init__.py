"""
Parallel transport
평행이동 모듈
"""

from .paths import DiscretePath, PathEnsemble, FramePath, velocities_from_points, hermite_stages, latitude_loop
from .parallel import (
    christoffel,
    polar_orthogonalize,
    orthogonality_drift,
    parallel_transport,
    inverse_parallel_transport,
    splitting_defect,
    holonomy,
)

__all__ = [
    'DiscretePath',
    'PathEnsemble',
    'FramePath',
    'velocities_from_points',
    'hermite_stages',
    'latitude_loop',
    'christoffel',
    'polar_orthogonalize',
    'orthogonality_drift',
    'parallel_transport',
    'inverse_parallel_transport',
    'splitting_defect',
    'holonomy',
]
