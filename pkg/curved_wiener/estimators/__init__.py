"""
Monte Carlo estimators
몬테카를로 추정기 모듈
"""

from .statistics import McEstimate, RunningMoments, fit_loglog_slope
from .engine import McParams, PathJob, MonteCarloEngine
from .gradient import (
    HeatJob, BismutJob, ElworthyLiJob,
    heat_expectation, bismut_gradient, elworthy_li_gradient,
)
from .ibp import (
    IBP_VARIANTS, CylinderFunction, IbpJob, ClarkOconeJob,
    ibp_residual, gaussian_smoothing, clark_ocone_check,
)

__all__ = [
    'McEstimate',
    'RunningMoments',
    'fit_loglog_slope',
    'McParams',
    'PathJob',
    'MonteCarloEngine',
    'HeatJob',
    'BismutJob',
    'ElworthyLiJob',
    'heat_expectation',
    'bismut_gradient',
    'elworthy_li_gradient',
    'IBP_VARIANTS',
    'CylinderFunction',
    'IbpJob',
    'ClarkOconeJob',
    'ibp_residual',
    'gaussian_smoothing',
    'clark_ocone_check',
]
