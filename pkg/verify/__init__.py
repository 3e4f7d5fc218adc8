"""Inequality verification, sweeps and the acceptance battery"""

from .experiments import (
    ShapeFamily,
    SweepResult,
    VerificationReport,
    convergence_study,
    sweep,
    verify_inequalities,
)
from .formatter import ReportFormatter, SuiteFormatter, TraceFormatter
from .suite import SuiteReport, SuiteSettings, run_suite

__all__ = [
    'ReportFormatter',
    'ShapeFamily',
    'SuiteFormatter',
    'SuiteReport',
    'SuiteSettings',
    'SweepResult',
    'TraceFormatter',
    'VerificationReport',
    'convergence_study',
    'run_suite',
    'sweep',
    'verify_inequalities',
]
