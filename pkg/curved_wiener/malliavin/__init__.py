"""
Malliavin diagnostics
괄호 조건과 축약 말리아뱅 공분산 모듈
"""

from .brackets import BracketEntry, BracketTable, HormanderReport, bracket_table, hormander_rank
from .covariance import (
    MalliavinSample, CovarianceJob, reduced_covariance, reduced_covariance_path, check_monotone_in_time,
    check_fraction_monotone, nondegeneracy_report,
)
from .systems import SystemFactory, make_system

__all__ = [
    'BracketEntry',
    'BracketTable',
    'HormanderReport',
    'bracket_table',
    'hormander_rank',
    'MalliavinSample',
    'CovarianceJob',
    'reduced_covariance',
    'reduced_covariance_path',
    'check_monotone_in_time',
    'check_fraction_monotone',
    'nondegeneracy_report',
    'SystemFactory',
    'make_system',
]
