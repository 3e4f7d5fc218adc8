"""Acceptance battery: ten numbered criteria run against the library

Each criterion returns a CriterionResult; `run_suite` gathers them into a
SuiteReport. ``tolerance_scale`` multiplies every numerical tolerance, so
0.01 tightens the whole battery a hundredfold.
"""

import asyncio
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.errors import QuermassFlowError
from core.flow import (
    FlowSpec,
    StepControl,
    StopCriteria,
    run,
    sphere_arrival_time,
    sphere_radius_at,
)
from core.quermass import quermass_vector, sphere_quermass
from core.surface import build_grid, geodesic_sphere, perturbed_sphere
from core.xi import (
    minkowski_sq_residual,
    xi_20,
    xi_20_residual,
    xi_closed_20,
    xi_closed_minkowski_sq,
    xi_minkowski_sq,
    xi_ode,
    xi_ode_residual,
    xi_parametric,
)

from .experiments import convergence_study, rigidity_slope, verify_inequalities

logger = logging.getLogger(__name__)

CRITERIA = tuple(range(1, 11))
SPHERE_RADII = (math.pi / 8, math.pi / 4, 3 * math.pi / 8)
RIGIDITY_EPS = (0.02, 0.04, 0.08, 0.16)
RIGIDITY_SLOPE = (1.9, 2.1)
Q_CASES = ((2, 1, "full2d", "minkowski_sq"), (3, 2, "axisym", "2,0"), (4, 3, "axisym", "3,1"))


class SuiteSettings(BaseModel):
    """Resolutions and knobs of the acceptance battery"""

    model_config = ConfigDict(extra="forbid")

    criteria: List[int] = Field(default_factory=lambda: list(CRITERIA))
    tolerance_scale: float = Field(1.0, gt=0.0)
    full2d_resolution: List[int] = Field(default_factory=lambda: [128, 256])
    axisym_resolution: int = Field(2048, ge=16)
    minkowski_resolutions: List[int] = Field(default_factory=lambda: [256, 512, 1024, 2048])
    flow_resolution: int = Field(128, ge=16)
    flow_full2d_resolution: List[int] = Field(default_factory=lambda: [64, 128])
    volume_flow_resolution: int = Field(64, ge=16)
    conserve_volume: bool = True
    record_every: int = Field(10, ge=1)
    knots: int = Field(2000, ge=200)
    samples: int = Field(1000, ge=10)
    workers: int = Field(1, ge=1)

    @field_validator("criteria")
    @classmethod
    def _known(cls, value: List[int]) -> List[int]:
        unknown = sorted(set(value) - set(CRITERIA))
        if unknown:
            raise ValueError(f"unknown criteria {unknown}; expected numbers 1..10")
        return sorted(set(value))

    def tol(self, value: float) -> float:
        return value * self.tolerance_scale


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0
    error: Optional[str] = None

    def to_record(self) -> Dict[str, Any]:
        return {
            "criterion": self.number,
            "title": self.title,
            "pass": self.passed,
            "seconds": self.seconds,
            "error": self.error,
            "details": self.details,
        }


@dataclass
class SuiteReport:
    settings: SuiteSettings
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_record(self) -> Dict[str, Any]:
        return {
            "pass": self.passed,
            "settings": self.settings.model_dump(),
            "criteria": [r.to_record() for r in self.results],
        }


def _worst(values) -> float:
    arr = np.asarray(list(values), dtype=float)
    return float(np.max(arr)) if arr.size else 0.0


def _grid_for(settings: SuiteSettings, n: int, mode: Optional[str] = None):
    mode = mode or ("full2d" if n == 2 else "axisym")
    if mode == "full2d":
        return build_grid("full2d", n, settings.full2d_resolution)
    return build_grid("axisym", n, settings.axisym_resolution)


# --- criteria ---------------------------------------------------------------------


def sphere_oracle(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """Discrete quermassintegrals of geodesic spheres against the closed forms"""
    bound = settings.tol(1e-9)
    errors = {}
    for n in (2, 3, 4):
        grid = _grid_for(settings, n)
        for rho in SPHERE_RADII:
            q = quermass_vector(geodesic_sphere(grid, rho))
            for k in range(-1, n):
                exact = sphere_quermass(n, rho, k)
                errors[f"n={n} rho={rho:.6g} A_{k}"] = abs(q[k] - exact) / abs(exact)
    worst = _worst(errors.values())
    return worst <= bound, {"max_relative_error": worst, "bound": bound, "errors": errors}


def _closed_scale(f, s: np.ndarray) -> np.ndarray:
    return np.abs(f.derivative(s)) + np.abs(f(s)) / s


def closed_forms(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """Closed-form xi functions against their ODEs and the worked values"""
    bound = settings.tol(1e-9)
    worst: Dict[str, float] = {}
    for n in (2, 3, 4, 5):
        s, _ = xi_minkowski_sq(n).samples(settings.samples)
        res = np.abs(minkowski_sq_residual(n, s)) / (n**2 * s)
        worst[f"minkowski_sq n={n}"] = float(res.max())
    for n in (3, 4, 5):
        for variant, reading in (("sphere", "factored"), ("printed", "printed")):
            f = xi_20(n, variant)
            s, _ = f.samples(settings.samples)
            res = np.abs(xi_20_residual(n, s, reading, variant)) / _closed_scale(f, s)
            worst[f"xi_2,0[{variant}] n={n}"] = float(res.max())

    worked = {
        "xi_minkowski_sq(4pi^2), n=2": (
            xi_closed_minkowski_sq(2, 4 * math.pi**2),
            16 * math.pi**2,
        ),
        "xi_2,0(2pi^2), n=3": (xi_closed_20(3, 2 * math.pi**2), 4 * math.pi**2),
    }
    worked_err = {k: abs(v - e) / e for k, (v, e) in worked.items()}
    ok = _worst(worst.values()) <= bound and _worst(worked_err.values()) <= settings.tol(1e-12)
    return ok, {"residuals": worst, "bound": bound, "worked_values": worked_err}


def triple_agreement(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """Closed, parametric and ODE xi_{2,0} on the middle 80% of the domain"""
    bound = settings.tol(1e-7)
    worst = {}
    for n in (3, 4, 5):
        closed = xi_20(n, "sphere")
        s, ref = closed.samples(settings.samples, margin=0.1)
        param = np.asarray(xi_parametric(n, 2, 0, settings.knots)(s))
        ode = np.asarray(xi_ode(n, "factored")(s))
        worst[f"n={n} parametric"] = float(np.max(np.abs(param - ref) / np.abs(ref)))
        worst[f"n={n} ode"] = float(np.max(np.abs(ode - ref) / np.abs(ref)))
    top = _worst(worst.values())
    return top <= bound, {"max_relative_difference": top, "bound": bound, "pairs": worst}


def recursion_check(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """xi_{4,2} against its recursion through xi_{2,0}^{-1}"""
    bound = settings.tol(1e-5)
    worst = {}
    for n in (5, 6):
        upper = xi_parametric(n, 4, 2, settings.knots)
        lower = xi_parametric(n, 2, 0, settings.knots)
        s, _ = upper.samples(101, margin=0.1)
        rel = [
            abs(xi_ode_residual(n, 4, upper, lower, float(x))) / abs(upper.derivative(float(x)))
            for x in s
        ]
        worst[f"n={n}"] = max(rel)
    top = _worst(worst.values())
    return top <= bound, {"max_relative_residual": top, "bound": bound, "cases": worst}


def _order_ok(order) -> bool:
    return order == "saturated" or order >= 1.8


def minkowski_identity(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """Discrete Minkowski identities and the support-gradient identity under refinement"""
    bound = settings.tol(1e-6)
    details: Dict[str, Any] = {"bound": bound}
    ok = True
    for n in (2, 3, 4):
        mink = convergence_study("minkowski_residual", settings.minkowski_resolutions, n=n)
        grad = convergence_study("support_gradient_residual", settings.minkowski_resolutions, n=n)
        finest = mink.rows[-1].residual
        ok &= finest <= bound and _order_ok(mink.order) and _order_ok(grad.order)
        details[f"n={n}"] = {
            "finest_relative_residual": finest,
            "minkowski": mink.to_record(),
            "support_gradient": grad.to_record(),
        }
    return ok, details


def sphere_flow(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """gerhardt k=1 on B_{pi/6}: radius at t=1 and the arrival time"""
    n, k, rho0 = 2, 1, math.pi / 6
    grid = build_grid("axisym", n, settings.flow_resolution)
    g = geodesic_sphere(grid, rho0)

    fixed = FlowSpec(
        law="gerhardt",
        k=k,
        step=StepControl(dt_init=1e-3, adaptive=False),
        stop=StopCriteria(t_max=1.0),
        record_every=100,
    )
    last = run(g, fixed, monitors=[]).points[-1]
    exact = sphere_radius_at(n, k, rho0, 1.0)
    radius_err = max(abs(last.min_rho - exact), abs(last.max_rho - exact)) / exact

    adaptive = FlowSpec(law="gerhardt", k=k, record_every=100)
    trace = run(g, adaptive, monitors=[])
    t_star = sphere_arrival_time(n, k, rho0)
    arrival = float(trace.times[-1])
    ok = (
        radius_err <= settings.tol(1e-6)
        and trace.stop_reason == "equator"
        and abs(arrival - t_star) <= 5e-2
    )
    return ok, {
        "radius_relative_error": radius_err,
        "arrival_time": arrival,
        "expected_arrival": t_star,
        "stop_reason": trace.stop_reason,
        "steps": trace.steps,
    }


def _flow_grid(settings: SuiteSettings, n: int, mode: str):
    if mode == "full2d":
        return build_grid("full2d", n, settings.flow_full2d_resolution)
    return build_grid("axisym", n, settings.flow_resolution)


def q_monotonicity(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """Q monitors along gerhardt flows decrease and vanish at the equator"""
    step_tol, final_tol = settings.tol(1e-7), settings.tol(1e-3)
    details: Dict[str, Any] = {}
    ok = True
    for n, k, mode, monitor in Q_CASES:
        g = perturbed_sphere(_flow_grid(settings, n, mode), math.pi / 4, 0.05, 2)
        spec = FlowSpec(law="gerhardt", k=k, record_every=settings.record_every)
        trace = run(g, spec, monitors=[monitor])
        q = trace.monitor_series(monitor)
        q0 = abs(q[0])
        rise = float(np.max(np.diff(q))) if len(q) > 1 else 0.0
        case_ok = (
            bool(np.all(np.isfinite(q)))
            and rise <= step_tol * q0
            and abs(q[-1]) <= final_tol * q0
            and trace.stop_reason == "equator"
        )
        ok &= case_ok
        details[f"n={n} k={k} {monitor}"] = {
            "pass": case_ok,
            "Q0": float(q[0]),
            "Q_final": float(q[-1]),
            "max_increase": rise,
            "stop_reason": trace.stop_reason,
            "records": len(trace),
        }
    return ok, details


def _volume_drift(trace) -> float:
    vol = trace.quermass_series(-1)
    return float(np.max(np.abs(vol - vol[0])) / vol[0])


def volume_flow_case(
    settings: SuiteSettings, n: int, t_max: float = 20.0
) -> Tuple[bool, Dict[str, Any]]:
    """One cgls0 run from pi/4 + 0.05 P_2: volume drift, A_m decrease, final speed

    With ``conserve_volume`` the projected run is judged and an unprojected run
    is recorded next to it; its drift is the discretisation error of the law.
    """
    vol_tol, mono_tol, speed_tol = settings.tol(1e-7), settings.tol(1e-8), settings.tol(1e-6)
    grid = build_grid("axisym", n, settings.volume_flow_resolution)
    g = perturbed_sphere(grid, math.pi / 4, 0.05, 2)

    def spec(conserve: bool) -> FlowSpec:
        return FlowSpec(
            law="cgls0",
            conserve_volume=conserve,
            stop=StopCriteria(t_max=t_max, stationarity_tol=speed_tol),
            record_every=10 * settings.record_every,
        )

    trace = run(g, spec(settings.conserve_volume), monitors=[])
    drift = _volume_drift(trace)
    rises = {}
    for m in range(n):
        a = trace.quermass_series(m)
        rises[f"A_{m}"] = float(np.max(np.diff(a)) / abs(a[0])) if len(a) > 1 else 0.0
    final_speed = trace.points[-1].max_speed
    ok = (
        drift <= vol_tol
        and _worst(rises.values()) <= mono_tol
        and final_speed < speed_tol
        and trace.stop_reason == "stationary"
    )
    details: Dict[str, Any] = {
        "pass": ok,
        "volume_drift": drift,
        "max_relative_increase": rises,
        "final_max_speed": final_speed,
        "stop_reason": trace.stop_reason,
        "t_final": float(trace.times[-1]),
    }
    if settings.conserve_volume:
        details["volume_drift_unprojected"] = _volume_drift(run(g, spec(False), monitors=[]))
    return ok, details


def volume_flow(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """cgls0 keeps the enclosed volume, lowers every A_m and comes to rest by t = 20"""
    details: Dict[str, Any] = {}
    ok = True
    for n in (2, 3):
        case_ok, details[f"n={n}"] = volume_flow_case(settings, n)
        ok &= case_ok
    return ok, details


def inequality_gaps(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """Equality on spheres, strict gaps and quadratic rigidity on perturbations"""
    details: Dict[str, Any] = {}
    ok = True
    tolerance = settings.tol(1e-8)
    for n in (2, 3):
        grid = build_grid("axisym", n, settings.axisym_resolution)
        for rho in SPHERE_RADII:
            report = verify_inequalities(
                geodesic_sphere(grid, rho), f"n{n}-sphere{rho:.6g}", tolerance=tolerance
            )
            ok &= report.passed
            details[report.experiment_id] = {"pass": report.passed}

        gaps: Dict[str, List[float]] = {}
        positive = True
        for eps in RIGIDITY_EPS:
            g = perturbed_sphere(grid, math.pi / 4, eps, 2)
            report = verify_inequalities(g, f"n{n}-eps{eps}", tolerance=tolerance)
            for row in report.rows:
                if row.family == "gauss_bonnet":
                    continue
                positive &= row.gap > 0.0
                gaps.setdefault(row.name, []).append(row.gap)
        slopes = {}
        for name, values in gaps.items():
            try:
                slopes[name] = rigidity_slope(RIGIDITY_EPS, values)
            except QuermassFlowError:
                slopes[name] = math.nan
        lo, hi = RIGIDITY_SLOPE
        slopes_ok = all(lo <= s <= hi for s in slopes.values())
        ok &= positive and slopes_ok
        details[f"n={n} rigidity"] = {"all_positive": positive, "slopes": slopes}
    return ok, details


def mode_agreement(settings: SuiteSettings) -> Tuple[bool, Dict[str, Any]]:
    """full2d and axisym grids on the same axisymmetric shape"""
    bound = settings.tol(1e-8)
    n_theta = settings.full2d_resolution[0]
    shapes = [
        perturbed_sphere(build_grid(mode, 2, res), math.pi / 4, 0.05, 2)
        for mode, res in (("full2d", settings.full2d_resolution), ("axisym", n_theta))
    ]
    full, axi = (quermass_vector(g) for g in shapes)
    diff = {f"A_{k}": abs(full[k] - axi[k]) / abs(axi[k]) for k in range(-1, 2)}
    top = _worst(diff.values())
    return top <= bound, {"max_relative_difference": top, "bound": bound, "quermass": diff}


CHECKS: Dict[int, Tuple[str, Callable[[SuiteSettings], Tuple[bool, Dict[str, Any]]]]] = {
    1: ("sphere quermassintegrals", sphere_oracle),
    2: ("closed-form xi functions", closed_forms),
    3: ("closed/parametric/ODE xi_2,0 agreement", triple_agreement),
    4: ("xi_4,2 recursion", recursion_check),
    5: ("Minkowski identities", minkowski_identity),
    6: ("gerhardt flow of a geodesic sphere", sphere_flow),
    7: ("Q monotonicity", q_monotonicity),
    8: ("volume-preserving flow", volume_flow),
    9: ("inequality gaps", inequality_gaps),
    10: ("full2d against axisym", mode_agreement),
}


# --- driver -----------------------------------------------------------------------


def run_criterion(number: int, settings: SuiteSettings) -> CriterionResult:
    title, check = CHECKS[number]
    started = time.perf_counter()
    try:
        passed, details = check(settings)
        result = CriterionResult(number, title, bool(passed), details)
    except QuermassFlowError as exc:
        logger.warning("criterion %d (%s) raised: %s", number, title, exc)
        result = CriterionResult(number, title, False, error=f"{type(exc).__name__}: {exc}")
    result.seconds = time.perf_counter() - started
    logger.info(
        "criterion %d %s: %s in %.1fs",
        number,
        title,
        "pass" if result.passed else "FAIL",
        result.seconds,
    )
    return result


def plan(settings: SuiteSettings) -> List[Dict[str, Any]]:
    """What `run_suite` would execute, without computing anything"""
    grids = {
        1: f"full2d {settings.full2d_resolution} (n=2), axisym {settings.axisym_resolution}",
        2: f"{settings.samples} samples per closed form",
        3: f"{settings.samples} samples, {settings.knots} knots",
        4: f"101 samples, {settings.knots} knots, n=5,6",
        5: f"axisym {settings.minkowski_resolutions}, n=2,3,4",
        6: f"axisym {settings.flow_resolution}, n=2",
        7: f"full2d {settings.flow_full2d_resolution} / axisym {settings.flow_resolution}",
        8: f"axisym {settings.volume_flow_resolution}, n=2,3, t_max=20",
        9: f"axisym {settings.axisym_resolution}, eps {list(RIGIDITY_EPS)}",
        10: f"full2d {settings.full2d_resolution} vs axisym {settings.full2d_resolution[0]}",
    }
    return [
        {"criterion": i, "title": CHECKS[i][0], "runs": grids[i]} for i in settings.criteria
    ]


async def run_suite(settings: SuiteSettings) -> SuiteReport:
    """Run the selected criteria, at most `settings.workers` at a time"""
    limit = asyncio.Semaphore(settings.workers)

    async def one(number: int) -> CriterionResult:
        async with limit:
            return await asyncio.to_thread(run_criterion, number, settings)

    results = await asyncio.gather(*(one(i) for i in settings.criteria))
    report = SuiteReport(settings, list(results))
    logger.info("suite: %d/%d criteria pass", sum(r.passed for r in results), len(results))
    return report
