"""Exception hierarchy shared by the geometry, flow and verification layers"""

from typing import Any, Optional, Tuple


class QuermassFlowError(Exception):
    """Base class for all library errors"""


class DomainError(QuermassFlowError, ValueError):
    """Argument outside the range an operation is defined on"""


class SingularRatioError(DomainError):
    """sigma_k vanished in a sigma ratio (the spectrum left Gamma_k)"""


class PreconditionError(QuermassFlowError, ValueError):
    """Caller-side precondition not met"""


class GeometryError(QuermassFlowError):
    """Non-finite geometry at a grid node"""

    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message if node is None else f"{message} (node {node})")
        self.node = node


class StepRejectedError(QuermassFlowError):
    """A time step produced an invalid radial graph"""


class FlowBreakdownError(QuermassFlowError):
    """The flow left the admissible cone or could not continue"""

    def __init__(
        self,
        message: str,
        node: Optional[Tuple[int, ...]] = None,
        spectrum: Optional[Any] = None,
        trace: Optional[Any] = None,
    ):
        super().__init__(message)
        self.node = node
        self.spectrum = spectrum
        self.trace = trace


class ConfigError(QuermassFlowError):
    """Invalid run configuration"""

    def __init__(self, message: str, paths: Optional[list[str]] = None):
        super().__init__(message)
        self.paths = paths or []
