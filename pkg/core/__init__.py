"""Core geometry, quermassintegral and flow components"""

from .errors import (
    ConfigError,
    DomainError,
    FlowBreakdownError,
    GeometryError,
    PreconditionError,
    QuermassFlowError,
    SingularRatioError,
    StepRejectedError,
)
from .flow import FlowRunner, FlowSpec, run, speed_field, step
from .quermass import QuermassVector, quermass_vector, sphere_quermass
from .surface import GeometryFields, RadialGraph, RoundGrid, build_grid, compute_geometry
from .symfun import Spectrum
from .trace import FlowTrace, TracePoint
from .xi import XiFunction

__all__ = [
    'ConfigError',
    'DomainError',
    'FlowBreakdownError',
    'FlowRunner',
    'FlowSpec',
    'FlowTrace',
    'GeometryError',
    'GeometryFields',
    'PreconditionError',
    'QuermassFlowError',
    'QuermassVector',
    'RadialGraph',
    'RoundGrid',
    'SingularRatioError',
    'Spectrum',
    'StepRejectedError',
    'TracePoint',
    'XiFunction',
    'build_grid',
    'compute_geometry',
    'quermass_vector',
    'run',
    'speed_field',
    'sphere_quermass',
    'step',
]
