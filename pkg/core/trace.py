"""Flow trace recording, Q monitors and rate checks"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .quermass import QuermassVector, curvature_integrals, quermass_vector
from .surface import GeometryFields, RadialGraph, integrate
from .xi import XiFunction, xi_minkowski_sq, xi_parametric

logger = logging.getLogger(__name__)

MINKOWSKI_SQ = "minkowski_sq"


@dataclass
class TracePoint:
    """One recorded snapshot of a flow run"""

    t: float
    dt: float
    quermass: QuermassVector
    sigma_integrals: np.ndarray
    flux_integrals: np.ndarray
    min_curvature: float
    max_speed: float
    min_rho: float
    max_rho: float
    monitors: Dict[str, float] = field(default_factory=dict)
    theta: Optional[float] = None

    @property
    def n(self) -> int:
        return self.quermass.n

    def to_record(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "dt": self.dt,
            "quermass": self.quermass.to_record(),
            "sigma_integrals": self.sigma_integrals.tolist(),
            "flux_integrals": self.flux_integrals.tolist(),
            "min_curvature": self.min_curvature,
            "max_speed": self.max_speed,
            "min_rho": self.min_rho,
            "max_rho": self.max_rho,
            "monitors": dict(self.monitors),
            "theta": self.theta,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "TracePoint":
        return cls(
            t=float(record["t"]),
            dt=float(record["dt"]),
            quermass=QuermassVector.from_record(record["quermass"]),
            sigma_integrals=np.asarray(record["sigma_integrals"], dtype=float),
            flux_integrals=np.asarray(record["flux_integrals"], dtype=float),
            min_curvature=float(record["min_curvature"]),
            max_speed=float(record["max_speed"]),
            min_rho=float(record["min_rho"]),
            max_rho=float(record["max_rho"]),
            monitors={k: float(v) for k, v in record.get("monitors", {}).items()},
            theta=record.get("theta"),
        )


@dataclass
class FlowTrace:
    """Time series of trace points, strictly increasing in t"""

    n: int
    law: str
    k: int
    points: List[TracePoint] = field(default_factory=list)
    stop_reason: Optional[str] = None
    steps: int = 0
    rejections: int = 0

    def append(self, point: TracePoint):
        if self.points and not point.t > self.points[-1].t:
            raise DomainError(f"trace time {point.t} does not advance past {self.points[-1].t}")
        self.points.append(point)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @property
    def monitor_names(self) -> List[str]:
        return list(self.points[0].monitors) if self.points else []

    def quermass_series(self, k: int) -> np.ndarray:
        return np.array([p.quermass[k] for p in self.points])

    def sigma_series(self, j: int) -> np.ndarray:
        return np.array([p.sigma_integrals[j] for p in self.points])

    def flux_series(self, j: int) -> np.ndarray:
        return np.array([p.flux_integrals[j] for p in self.points])

    def monitor_series(self, name: str) -> np.ndarray:
        return np.array([p.monitors.get(name, math.nan) for p in self.points])

    def to_record(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "law": self.law,
            "k": self.k,
            "stop_reason": self.stop_reason,
            "steps": self.steps,
            "rejections": self.rejections,
            "points": [p.to_record() for p in self.points],
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "FlowTrace":
        trace = cls(
            n=int(record["n"]),
            law=record["law"],
            k=int(record["k"]),
            stop_reason=record.get("stop_reason"),
            steps=int(record.get("steps", 0)),
            rejections=int(record.get("rejections", 0)),
        )
        for p in record["points"]:
            trace.append(TracePoint.from_record(p))
        return trace


# --- Q monitors -------------------------------------------------------------------


def parse_monitor(name: str) -> Tuple[int, int]:
    """'minkowski_sq' -> (1, 0); 'k,l' -> (k, l)"""
    if name == MINKOWSKI_SQ:
        return 1, 0
    try:
        k, l = (int(part) for part in name.split(","))
    except ValueError:
        raise DomainError(f"monitor {name!r} is neither {MINKOWSKI_SQ!r} nor 'k,l'") from None
    if l != k - 2:
        raise DomainError(f"monitor pairs must be (k, k-2), got ({k},{l})")
    return k, l


def monitor_rate(n: int, name: str) -> float:
    """Exponential damping rate of a monitor"""
    if name == MINKOWSKI_SQ:
        return 2.0 * (n - 1) / n
    k, _ = parse_monitor(name)
    return k * (n - k) / (n - k + 1)


def monitor_xi(n: int, name: str) -> XiFunction:
    if name == MINKOWSKI_SQ:
        return xi_minkowski_sq(n)
    k, l = parse_monitor(name)
    return xi_parametric(n, k, l)


def raw_gap(n: int, name: str, point: TracePoint, xi: Optional[XiFunction] = None) -> float:
    """Undamped inequality gap of one monitor at a trace point"""
    xi = xi if xi is not None else monitor_xi(n, name)
    if name == MINKOWSKI_SQ:
        return float(point.sigma_integrals[1] ** 2 - xi(point.quermass[0] ** 2))
    k, l = parse_monitor(name)
    return float(point.quermass[k] - xi(point.quermass[l]))


def q_monitor(n: int, k_pair: str, point: TracePoint, xi: Optional[XiFunction] = None) -> float:
    """e^{-lambda t} times the gap; lambda from the pair (see monitor_rate)"""
    return math.exp(-monitor_rate(n, k_pair) * point.t) * raw_gap(n, k_pair, point, xi)


def default_monitors(n: int, law: str, k: int) -> List[str]:
    if law != "gerhardt":
        return []
    if k == 1:
        return [MINKOWSKI_SQ, "1,-1"] if n >= 2 else []
    # xi_{n,n-2} does not exist: A_n is not a quermassintegral
    return [f"{k},{k - 2}"] if k <= n - 1 else []


class MonitorSet:
    """Named monitors with their xi functions built once per run"""

    def __init__(self, n: int, names: Sequence[str]):
        self.n = n
        self.xi = {name: monitor_xi(n, name) for name in names}

    @property
    def names(self) -> List[str]:
        return list(self.xi)

    def evaluate(self, point: TracePoint) -> Dict[str, float]:
        values = {}
        for name, xi in self.xi.items():
            try:
                values[name] = q_monitor(self.n, name, point, xi)
            except DomainError as exc:
                logger.warning("monitor %s left its xi domain at t=%.6g: %s", name, point.t, exc)
                values[name] = math.nan
        return values


# --- recorder ---------------------------------------------------------------------


class TraceRecorder:
    """Builds trace points from flow snapshots and notifies listeners"""

    def __init__(
        self,
        trace: FlowTrace,
        monitors: Optional[MonitorSet] = None,
        envelope: Optional[Callable[[float], float]] = None,
    ):
        self.trace = trace
        self.monitors = monitors
        self.envelope = envelope

        # Callbacks
        self.on_record: Optional[Callable[[TracePoint], None]] = None

    def record(
        self, t: float, dt: float, fields: GeometryFields, speed: np.ndarray
    ) -> TracePoint:
        g: RadialGraph = fields.graph
        n = fields.n
        sig = fields.sigma
        point = TracePoint(
            t=t,
            dt=dt,
            quermass=quermass_vector(g, fields),
            sigma_integrals=curvature_integrals(fields),
            flux_integrals=np.array([integrate(fields, speed * sig[..., j]) for j in range(n + 1)]),
            min_curvature=fields.min_curvature,
            max_speed=float(np.max(np.abs(speed))),
            min_rho=float(g.rho.min()),
            max_rho=float(g.rho.max()),
        )
        if self.monitors is not None:
            point.monitors = self.monitors.evaluate(point)
        if self.envelope is not None:
            point.theta = self.envelope(t)
        self.trace.append(point)
        logger.debug(
            "t=%.6g dt=%.3g min_kappa=%.6g max|f|=%.3g", t, dt, point.min_curvature, point.max_speed
        )

        if self.on_record:
            self.on_record(point)
        return point


# --- rate checks ------------------------------------------------------------------

RATE_QUANTITIES = ("A", "volume", "sigma")


@dataclass
class RateReport:
    """Finite-difference rates of a traced quantity against its flux quadrature"""

    quantity: str
    index: int
    times: np.ndarray
    observed: np.ndarray
    predicted: np.ndarray
    scale: float

    @property
    def mismatch(self) -> np.ndarray:
        return np.abs(self.observed - self.predicted) / self.scale

    @property
    def max_relative_mismatch(self) -> float:
        return float(np.max(self.mismatch)) if len(self.times) else math.nan

    def to_record(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "index": self.index,
            "scale": self.scale,
            "max_relative_mismatch": self.max_relative_mismatch,
        }


def predicted_rate(trace: FlowTrace, quantity: str, index: int) -> np.ndarray:
    """Right-hand sides of the first-variation formulas with K = 1"""
    n = trace.n
    if quantity == "volume" or (quantity == "A" and index == -1):
        return trace.flux_series(0)
    if quantity == "A":
        if not 0 <= index <= n - 1:
            raise DomainError(f"A_{index} rate needs 0 <= index <= n-1")
        return (index + 1) * trace.flux_series(index + 1)
    if quantity == "sigma":
        if not 0 <= index <= n:
            raise DomainError(f"int sigma_{index} rate needs 0 <= index <= n")
        upper = (index + 1) * trace.flux_series(index + 1) if index < n else 0.0
        lower = (n - index + 1) * trace.flux_series(index - 1) if index >= 1 else 0.0
        return upper - lower
    raise DomainError(f"unknown rate quantity {quantity!r}; expected one of {RATE_QUANTITIES}")


def observed_series(trace: FlowTrace, quantity: str, index: int) -> np.ndarray:
    if quantity == "volume":
        return trace.quermass_series(-1)
    if quantity == "A":
        return trace.quermass_series(index)
    return trace.sigma_series(index)


def rate_check(
    trace: FlowTrace, quantity: str, index: int = -1, scale: Optional[float] = None
) -> RateReport:
    """Compare d/dt of A_l, Vol or int sigma_l along the trace with the flux integrals

    The derivative is numpy.gradient on the recorded times; the two end points
    are excluded. ``scale`` defaults to the largest predicted rate.
    """
    if len(trace) < 3:
        raise DomainError(f"rate check needs at least 3 trace points, got {len(trace)}")
    predicted = np.broadcast_to(predicted_rate(trace, quantity, index), (len(trace),))
    observed = np.gradient(observed_series(trace, quantity, index), trace.times)
    dts = np.array([p.dt for p in trace.points[1:]])
    gaps = np.diff(trace.times)
    if np.any(gaps > 10.0 * np.maximum(dts, 1e-300)):
        logger.warning("trace records are sparser than 10 steps; rate check is unreliable")
    if scale is None:
        scale = float(np.max(np.abs(predicted[1:-1])))
        scale = scale if scale > 0.0 else 1.0
    return RateReport(quantity, index, trace.times[1:-1], observed[1:-1], predicted[1:-1], scale)
