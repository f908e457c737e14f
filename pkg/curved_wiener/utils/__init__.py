"""
Utility modules
"""

from .storage import write_results, read_results, read_metadata, read_table, format_metadata
from .validation import check_time_grid, check_positive, grid_index, steps_for_horizon

__all__ = [
    'write_results',
    'read_results',
    'read_metadata',
    'read_table',
    'format_metadata',
    'check_time_grid',
    'check_positive',
    'grid_index',
    'steps_for_horizon',
]
