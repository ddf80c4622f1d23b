"""
Utilities Module

Support code shared by the packages and the command-line runner: the error
hierarchy, key = value files, experiment configuration, result writers,
SVG heatmaps and the verdict ledger.

Available Utilities:
- Errors (MongeAmpereError and subclasses)
- Key-value files
- Verdict Runner

Configuration (utils.config), result saving (utils.save_results) and
heatmaps (utils.heatmap) are imported from their modules; they depend on
the solver and field packages, which themselves import utils.errors.
"""

from .errors import MongeAmpereError
from .keyvalue import format_value, read_key_values, write_key_values
from .verdicts import VerdictRunner

__all__ = [
    'MongeAmpereError',
    'format_value',
    'read_key_values',
    'write_key_values',
    'VerdictRunner',
]
