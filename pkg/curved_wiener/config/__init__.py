"""
Configuration management module
"""

from .tolerances import NumericalTolerances, get_tolerances, TOLERANCE_PRESETS, DEFAULT_TOLERANCES
from .settings import Settings, get_settings, reset_settings
from .run_settings import RunConfig, get_run_preset, RUN_PRESETS, SUBCOMMANDS

__all__ = [
    'NumericalTolerances',
    'get_tolerances',
    'TOLERANCE_PRESETS',
    'DEFAULT_TOLERANCES',
    'Settings',
    'get_settings',
    'reset_settings',
    'RunConfig',
    'get_run_preset',
    'RUN_PRESETS',
    'SUBCOMMANDS',
]
