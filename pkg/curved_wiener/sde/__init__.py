"""
Stochastic differential equations on manifolds
다양체 위 SDE 모듈
"""

from .driver import CameronMartinPath, DrivingPath, sample_driver, sample_drivers, stream_seed
from .system import SdeSystem, projection_bm_system
from .simulate import (
    GeometricPath,
    simulate_sde,
    simulate_projection_bm,
    simulate_development_bm,
    quadratic_variation_check,
    JacobianFlow,
    simulate_jacobian_flow,
    MarkovCheck,
    markov_consistency,
)

__all__ = [
    'CameronMartinPath',
    'DrivingPath',
    'sample_driver',
    'sample_drivers',
    'stream_seed',
    'SdeSystem',
    'projection_bm_system',
    'GeometricPath',
    'simulate_sde',
    'simulate_projection_bm',
    'simulate_development_bm',
    'quadratic_variation_check',
    'JacobianFlow',
    'simulate_jacobian_flow',
    'MarkovCheck',
    'markov_consistency',
]
