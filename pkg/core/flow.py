"""Curvature flows of radial graphs: speeds, RK2 stepping and the adaptive runner

Every law moves the hypersurface with normal speed f; as a radial graph this
is d rho/dt = f v with v = sqrt(phi^2 + |grad rho|^2)/phi.

* gerhardt -- f = sigma_{k-1}/sigma_k, expands to the equator;
* cgls     -- f = c phi' - (sigma_{k+1}/sigma_k) u;
* cgls0    -- f = n phi' - u sigma_1, volume preserving.
"""

import asyncio
import logging
import math
from typing import Callable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import (
    DomainError,
    FlowBreakdownError,
    GeometryError,
    StepRejectedError,
)
from .quermass import eta_k, quermass_vector
from .surface import HALF_PI, GeometryFields, RadialGraph, compute_geometry, polar_filter
from .symfun import (
    Spectrum,
    c_nk,
    cgls_coefficient,
    in_gamma_cone_field,
    sigma_complement,
)
from .trace import FlowTrace, MonitorSet, TracePoint, TraceRecorder, default_monitors

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 20


class StepControl(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt_init: float = Field(1e-3, gt=0.0)
    cfl_safety: float = Field(0.4, gt=0.0, lt=1.0)
    dt_min: float = Field(1e-12, gt=0.0)
    dt_max: float = Field(1e-2, gt=0.0)
    adaptive: bool = True
    polar_filter: bool = True


class StopCriteria(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_max: float = Field(20.0, gt=0.0)
    equator_tol: float = Field(1e-3, gt=0.0, lt=HALF_PI)
    stationarity_tol: float = Field(1e-6, gt=0.0)


class FlowSpec(BaseModel):
    """Flow law, curvature index, step control and stopping rules"""

    model_config = ConfigDict(extra="forbid")

    law: Literal["gerhardt", "cgls", "cgls0"] = "gerhardt"
    k: int = Field(1, ge=0)
    coefficient: Literal["stationary", "printed"] = "stationary"
    step: StepControl = Field(default_factory=StepControl)
    stop: StopCriteria = Field(default_factory=StopCriteria)
    record_every: int = Field(1, ge=1)
    monitors: Optional[List[str]] = None
    conserve_volume: bool = False

    @model_validator(mode="after")
    def _check_index(self):
        if self.law == "gerhardt" and self.k < 1:
            raise ValueError("gerhardt flows need k >= 1")
        if self.law == "cgls" and self.coefficient == "printed" and self.k < 1:
            raise ValueError("the printed cgls coefficient needs k >= 1; use cgls0 for k = 0")
        if self.step.dt_min > self.step.dt_max:
            raise ValueError("step.dt_min exceeds step.dt_max")
        if self.conserve_volume and not self.preserves_volume:
            raise ValueError("conserve_volume applies to cgls0 and cgls with k = 0 only")
        return self

    def check_dimension(self, n: int):
        """Range of k against the hypersurface dimension"""
        if self.law == "gerhardt" and not 1 <= self.k <= n:
            raise DomainError(f"gerhardt k={self.k} outside [1, {n}]")
        if self.law == "cgls" and not 0 <= self.k <= n - 1:
            raise DomainError(f"cgls k={self.k} outside [0, {n - 1}]")

    def cgls_constant(self, n: int) -> float:
        if self.coefficient == "printed":
            return c_nk(n, self.k)
        return cgls_coefficient(n, self.k)

    @property
    def preserves_volume(self) -> bool:
        return self.law == "cgls0" or (self.law == "cgls" and self.k == 0)

    @property
    def cone_index(self) -> int:
        """Gamma cone the speed needs"""
        if self.law == "gerhardt":
            return self.k
        if self.law == "cgls":
            return self.k + 1
        return 1


# --- speeds -----------------------------------------------------------------------


def _cone_violation(spec: FlowSpec, fields: GeometryFields) -> FlowBreakdownError:
    ok = in_gamma_cone_field(spec.cone_index, fields.sigma)
    flat = int(np.flatnonzero(~ok.ravel())[0])
    node = tuple(int(i) for i in np.unravel_index(flat, ok.shape))
    spectrum = Spectrum.of(fields.kappa[node])
    return FlowBreakdownError(
        f"{spec.law} k={spec.k}: spectrum left Gamma_{spec.cone_index} at node {node}",
        node=node,
        spectrum=spectrum,
    )


def speed_field(spec: FlowSpec, fields: GeometryFields) -> np.ndarray:
    """Normal speed f at every node"""
    n = fields.n
    spec.check_dimension(n)
    sig = fields.sigma
    if spec.law == "cgls0":
        return n * fields.phi_prime - fields.u * sig[..., 1]

    if not np.all(in_gamma_cone_field(spec.cone_index, sig)):
        raise _cone_violation(spec, fields)
    k = spec.k
    if spec.law == "gerhardt":
        return sig[..., k - 1] / sig[..., k]
    if k == 0:
        return spec.cgls_constant(n) * fields.phi_prime - fields.u * sig[..., 1]
    return spec.cgls_constant(n) * fields.phi_prime - sig[..., k + 1] / sig[..., k] * fields.u


def flow_speed(spec: FlowSpec, fields: GeometryFields) -> np.ndarray:
    """Speed actually integrated: `speed_field`, minus its dmu-mean under conserve_volume

    The discrete volume changes at exactly sum(f dmu), so removing the mean
    holds it fixed up to the RK2 splitting error instead of letting the
    quadrature error of the Minkowski identity accumulate.
    """
    f = speed_field(spec, fields)
    if spec.conserve_volume:
        f = f - np.sum(f * fields.dmu) / np.sum(fields.dmu)
    return f


def speed_sensitivity(spec: FlowSpec, fields: GeometryFields) -> np.ndarray:
    """df/dkappa_i at every node, shape (..., n)"""
    sig = fields.sigma
    n = fields.n
    if spec.law == "cgls0" or (spec.law == "cgls" and spec.k == 0):
        return -fields.u[..., None] * np.ones(n)
    comp = sigma_complement(fields.kappa)
    k = spec.k
    sk = sig[..., k][..., None]
    if spec.law == "gerhardt":
        d_lower = comp[..., k - 2] if k >= 2 else 0.0
        return (d_lower * sk - sig[..., k - 1][..., None] * comp[..., k - 1]) / sk**2
    d_upper = comp[..., k]
    d_lower = comp[..., k - 1]
    ratio = (d_upper * sk - sig[..., k + 1][..., None] * d_lower) / sk**2
    return -fields.u[..., None] * ratio


def diffusion_scale(spec: FlowSpec, fields: GeometryFields) -> float:
    """max over nodes of v sum_i |df/dkappa_i| / phi^2

    The sum, not the largest entry: at a pole every principal direction
    reduces to a second difference along the same stencil.
    """
    sens = np.sum(np.abs(speed_sensitivity(spec, fields)), axis=-1)
    return float(np.max(fields.v * sens / fields.phi**2))


def stable_spacing(spec: FlowSpec, fields: GeometryFields) -> float:
    grid = fields.grid
    if grid.mode == "full2d" and spec.step.polar_filter:
        return grid.h_theta
    return grid.min_spacing()


def cfl_step(spec: FlowSpec, fields: GeometryFields) -> float:
    h = stable_spacing(spec, fields)
    scale = diffusion_scale(spec, fields)
    return math.inf if scale <= 0.0 else spec.step.cfl_safety * h**2 / scale


# --- stepping ---------------------------------------------------------------------


def _advance(g: RadialGraph, rho: np.ndarray) -> RadialGraph:
    try:
        return g.with_rho(rho)
    except DomainError as exc:
        raise StepRejectedError(str(exc)) from exc


def graph_velocity(spec: FlowSpec, fields: GeometryFields, speed: np.ndarray) -> np.ndarray:
    """d rho/dt = f v, polar-filtered on full2d grids"""
    velocity = speed * fields.v
    if spec.step.polar_filter:
        velocity = polar_filter(velocity, fields.grid)
    return velocity


def _velocity(spec: FlowSpec, g: RadialGraph) -> np.ndarray:
    try:
        fields = compute_geometry(g)
    except GeometryError as exc:
        raise StepRejectedError(str(exc)) from exc
    return graph_velocity(spec, fields, flow_speed(spec, fields))


def step(
    g: RadialGraph, spec: FlowSpec, dt: float, velocity: Optional[np.ndarray] = None
) -> RadialGraph:
    """One explicit midpoint (RK2) step of d rho/dt = f v

    A cone violation at the midpoint is reported as a rejected step; one at
    the start point is a breakdown of the flow itself.
    """
    if dt == 0.0:
        return g
    k1 = velocity if velocity is not None else _velocity(spec, g)
    mid = _advance(g, g.rho + 0.5 * dt * k1)
    try:
        k2 = _velocity(spec, mid)
    except FlowBreakdownError as exc:
        raise StepRejectedError(f"midpoint: {exc}") from exc
    return _advance(g, g.rho + dt * k2)


# --- sphere trajectories ----------------------------------------------------------


def gerhardt_rate(n: int, k: int) -> float:
    """lambda with sin rho(t) = sin rho0 e^{lambda t} on geodesic spheres"""
    if not 1 <= k <= n:
        raise DomainError(f"gerhardt k={k} outside [1, {n}]")
    return k / (n - k + 1)


def sphere_arrival_time(n: int, k: int, rho0: float) -> float:
    """T* at which a geodesic sphere reaches the equator"""
    if not 0.0 < rho0 < HALF_PI:
        raise DomainError(f"sphere radius {rho0} outside (0, pi/2)")
    return -math.log(math.sin(rho0)) / gerhardt_rate(n, k)


def sphere_radius_at(n: int, k: int, rho0: float, t: float) -> float:
    """Exact radius of a geodesic sphere under the gerhardt flow"""
    if not 0.0 <= t <= sphere_arrival_time(n, k, rho0):
        raise DomainError(f"t={t} outside [0, T*]")
    return math.asin(min(1.0, math.sin(rho0) * math.exp(gerhardt_rate(n, k) * t)))


def equator_envelope(n: int, k: int, t_star: float):
    """Theta(t) = arccos e^{lambda (t - T*)}, the equator distance of a sphere"""
    lam = gerhardt_rate(n, k)
    return lambda t: math.acos(min(1.0, math.exp(lam * (t - t_star))))


# --- runner -----------------------------------------------------------------------


class FlowRunner:
    """Adaptive-step driver producing a FlowTrace"""

    def __init__(self, spec: FlowSpec, monitors: Optional[List[str]] = None):
        self.spec = spec
        self.monitor_names = monitors if monitors is not None else spec.monitors

        # Callbacks
        self.on_record: Optional[Callable[[TracePoint], None]] = None

    def _recorder(self, g: RadialGraph, trace: FlowTrace) -> TraceRecorder:
        spec = self.spec
        names = self.monitor_names
        if names is None:
            names = default_monitors(g.n, spec.law, spec.k)
        monitors = MonitorSet(g.n, names) if names else None
        envelope = None
        if spec.law == "gerhardt":
            # sphere with the same A_{k-1} sets the arrival time
            try:
                a = quermass_vector(g)[spec.k - 1]
                t_star = sphere_arrival_time(g.n, spec.k, eta_k(g.n, spec.k - 1, a))
                envelope = equator_envelope(g.n, spec.k, t_star)
            except DomainError as exc:
                logger.warning("no equator envelope: %s", exc)
        recorder = TraceRecorder(trace, monitors, envelope)
        recorder.on_record = self.on_record
        return recorder

    def _stop_reason(self, t: float, g: RadialGraph, speed: np.ndarray) -> Optional[str]:
        stop = self.spec.stop
        if self.spec.law == "gerhardt":
            if g.rho.min() > HALF_PI - stop.equator_tol:
                return "equator"
        elif np.max(np.abs(speed)) < stop.stationarity_tol:
            return "stationary"
        if t >= stop.t_max * (1.0 - 1e-12):
            return "t_max"
        return None

    def run(self, g: RadialGraph) -> FlowTrace:
        spec = self.spec
        spec.check_dimension(g.n)
        trace = FlowTrace(n=g.n, law=spec.law, k=spec.k)
        fields = compute_geometry(g)
        if not fields.is_convex:
            logger.warning("initial hypersurface not convex, min kappa %.6g", fields.min_curvature)
        recorder = self._recorder(g, trace)
        logger.info("flow %s k=%d n=%d started, t_max=%g", spec.law, spec.k, g.n, spec.stop.t_max)

        t, dt_used = 0.0, 0.0
        while True:
            try:
                speed = flow_speed(spec, fields)
            except FlowBreakdownError as exc:
                exc.trace = trace
                trace.stop_reason = "breakdown"
                logger.warning("flow breakdown at t=%.6g: %s", t, exc)
                raise

            reason = self._stop_reason(t, g, speed)
            if reason or trace.steps % spec.record_every == 0:
                if not trace.points or t > trace.points[-1].t:
                    recorder.record(t, dt_used, fields, speed)
            if reason:
                trace.stop_reason = reason
                break

            g, dt_used = self._advance(g, fields, speed, t, trace)
            t += dt_used
            trace.steps += 1
            try:
                fields = compute_geometry(g)
            except GeometryError as exc:
                trace.stop_reason = "breakdown"
                node = None if exc.node is None else (exc.node,)
                raise FlowBreakdownError(str(exc), node=node, trace=trace) from exc

        logger.info(
            "flow %s k=%d stopped (%s) at t=%.6g after %d steps",
            spec.law,
            spec.k,
            trace.stop_reason,
            t,
            trace.steps,
        )
        return trace

    def _advance(
        self, g: RadialGraph, fields: GeometryFields, speed: np.ndarray, t: float, trace: FlowTrace
    ):
        control = self.spec.step
        dt = control.dt_init
        if control.adaptive:
            dt = min(control.dt_max, cfl_step(self.spec, fields))
        dt = min(dt, self.spec.stop.t_max - t)
        velocity = graph_velocity(self.spec, fields, speed)
        for _ in range(MAX_REJECTIONS):
            if dt < control.dt_min:
                break
            try:
                return step(g, self.spec, dt, velocity), dt
            except StepRejectedError as exc:
                trace.rejections += 1
                logger.warning("step rejected at t=%.6g with dt=%.3g: %s", t, dt, exc)
                dt *= 0.5
        trace.stop_reason = "breakdown"
        logger.warning("step halving exhausted at t=%.6g", t)
        raise FlowBreakdownError(
            f"no admissible step at t={t:.6g} (dt={dt:.3g})", trace=trace
        )

    async def run_async(self, g: RadialGraph) -> FlowTrace:
        return await asyncio.to_thread(self.run, g)


def run(g: RadialGraph, spec: FlowSpec, monitors: Optional[List[str]] = None) -> FlowTrace:
    """Integrate `spec` from g until a stop criterion or breakdown"""
    return FlowRunner(spec, monitors).run(g)
