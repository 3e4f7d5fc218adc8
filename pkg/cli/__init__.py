"""Command-line front end"""

from .config import RunConfig, parse_config
from .main import dispatch, main

__all__ = [
    'RunConfig',
    'dispatch',
    'main',
    'parse_config',
]
