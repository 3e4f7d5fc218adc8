"""Inequality experiments over shape families"""

import asyncio
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.errors import DomainError, PreconditionError, QuermassFlowError
from core.flow import FlowSpec, StepControl, StopCriteria, run
from core.quermass import curvature_integrals, eta_k, quermass_vector, s_k
from core.surface import (
    RadialGraph,
    build_grid,
    compute_geometry,
    integrate,
    minkowski_residual,
    perturbed_sphere,
    support_gradient_residual,
)
from core.symfun import Spectrum, gauss_bonnet_field, gauss_bonnet_Lk
from core.trace import rate_check
from core.xi import xi_minkowski_sq, xi_parametric

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
SATURATION_FLOOR = 1e-13
CHECKS = ("minkowski_residual", "support_gradient_residual", "rate_check")


@dataclass
class InequalityRow:
    """One evaluated inequality lhs >= rhs"""

    name: str
    family: str
    lhs: float
    rhs: float
    scale: float
    status: str
    passed: Optional[bool]
    message: str = ""

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    @property
    def gap_ratio(self) -> float:
        return self.gap / self.scale

    def to_record(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "family": self.family,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "gap_ratio": self.gap_ratio,
            "scale": self.scale,
            "status": self.status,
            "pass": self.passed,
            "message": self.message,
        }


@dataclass
class ConvergenceRow:
    resolution: float
    spacing: float
    residual: float

    def to_record(self) -> Dict[str, Any]:
        return {"resolution": self.resolution, "spacing": self.spacing, "residual": self.residual}


@dataclass
class ConvergenceResult:
    """Residuals under refinement and the fitted order"""

    check: str
    rows: List[ConvergenceRow]
    order: Union[float, str]

    @property
    def saturated(self) -> bool:
        return self.order == "saturated"

    def to_record(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "order": self.order,
            "rows": [r.to_record() for r in self.rows],
        }


@dataclass
class VerificationReport:
    """Inequality rows for one shape, plus optional convergence tables"""

    experiment_id: str
    n: int
    mode: str
    resolution: List[int]
    shape: Dict[str, Any]
    rows: List[InequalityRow] = field(default_factory=list)
    convergence: List[ConvergenceResult] = field(default_factory=list)
    environment: Dict[str, Any] = field(default_factory=dict)
    convex: bool = True

    @property
    def passed(self) -> bool:
        return all(row.passed is not False for row in self.rows)

    def to_record(self) -> Dict[str, Any]:
        return {
            "experiment_id": self.experiment_id,
            "n": self.n,
            "mode": self.mode,
            "resolution": list(self.resolution),
            "shape": dict(self.shape),
            "convex": self.convex,
            "pass": self.passed,
            "rows": [r.to_record() for r in self.rows],
            "convergence": [c.to_record() for c in self.convergence],
            "environment": dict(self.environment),
        }


def classify(gap: float, scale: float, tolerance: float, convex: bool):
    """(status, pass flag) for a gap measured against tolerance * scale"""
    if not math.isfinite(gap):
        return "error", False
    if not convex:
        return "hypothesis violated", None
    if abs(gap) <= tolerance * scale:
        return "equality (numerical)", True
    if gap > 0.0:
        return "pass", True
    return "fail", False


def _row(name, family, lhs_fn, rhs_fn, scale, tolerance, convex) -> InequalityRow:
    try:
        lhs, rhs = float(lhs_fn()), float(rhs_fn())
    except DomainError as exc:
        logger.warning("%s: %s", name, exc)
        return InequalityRow(name, family, math.nan, math.nan, scale, "error", False, str(exc))
    status, passed = classify(lhs - rhs, scale, tolerance, convex)
    return InequalityRow(name, family, lhs, rhs, scale, status, passed)


def _gauss_bonnet_rows(n: int, fields, area: float) -> List[InequalityRow]:
    rows = []
    rho_eq = eta_k(n, 0, area) if 0.0 < area < s_k(n, 0) else None
    for k in range(1, n // 2 + 1):
        value = integrate(fields, gauss_bonnet_field(k, fields.sigma))
        sphere = math.nan
        if rho_eq is not None:
            cot = math.cos(rho_eq) / math.sin(rho_eq)
            sphere = gauss_bonnet_Lk(n, k, Spectrum.isotropic(n, cot)) * area
        # evaluation only; the sphere value is the comparison reference
        scale = abs(sphere) if math.isfinite(sphere) and sphere != 0.0 else 1.0
        rows.append(
            InequalityRow(f"int L_{k}", "gauss_bonnet", value, sphere, scale, "info", None)
        )
    return rows


def verify_inequalities(
    g: RadialGraph,
    experiment_id: str = "single",
    shape: Optional[Dict[str, Any]] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    knots: int = 2000,
) -> VerificationReport:
    """Evaluate every inequality applicable to g's dimension"""
    n = g.n
    fields = compute_geometry(g)
    convex = fields.is_convex
    q = quermass_vector(g, fields)
    integrals = curvature_integrals(fields)
    if not convex:
        logger.warning(
            "%s: min kappa %.6g, hypothesis violated", experiment_id, fields.min_curvature
        )

    report = VerificationReport(
        experiment_id=experiment_id,
        n=n,
        mode=g.grid.mode,
        resolution=list(g.grid.resolution),
        shape=shape or {},
        convex=convex,
        environment={"tolerance": tolerance, "knots": knots, "seed": None},
    )
    rows = report.rows
    for k in range(1, n):
        xi = xi_parametric(n, k, k - 2, knots)
        rows.append(
            _row(
                f"A_{k} >= xi_{k},{k - 2}(A_{k - 2})",
                "quermass",
                lambda k=k: q[k],
                lambda k=k, xi=xi: xi(q[k - 2]),
                s_k(n, k),
                tolerance,
                convex,
            )
        )
    for m in range(0, n):
        xi = xi_parametric(n, m, -1, knots)
        rows.append(
            _row(
                f"A_{m} >= xi_{m},-1(A_-1)",
                "volume",
                lambda m=m: q[m],
                lambda xi=xi: xi(q[-1]),
                s_k(n, m),
                tolerance,
                convex,
            )
        )
    if n >= 2:
        xi_sq = xi_minkowski_sq(n)
        rows.append(
            _row(
                "(int sigma_1)^2 >= xi(A_0^2)",
                "minkowski_sq",
                lambda: integrals[1] ** 2,
                lambda: xi_sq(q[0] ** 2),
                s_k(n, 0) ** 2,
                tolerance,
                convex,
            )
        )
    rows.extend(_gauss_bonnet_rows(n, fields, q[0]))
    logger.info("%s: %d rows, pass=%s", experiment_id, len(rows), report.passed)
    return report


def rigidity_slope(eps: Sequence[float], gaps: Sequence[float]) -> float:
    """Least-squares slope of log gap against log eps"""
    eps_arr = np.asarray(eps, dtype=float)
    gap_arr = np.asarray(gaps, dtype=float)
    if len(eps_arr) < 2 or np.any(gap_arr <= 0.0):
        raise PreconditionError("rigidity fit needs at least two strictly positive gaps")
    slope, _ = np.polyfit(np.log(eps_arr), np.log(gap_arr), 1)
    return float(slope)


# --- sweeps -----------------------------------------------------------------------


class ShapeFamily(BaseModel):
    """Cartesian family of perturbed spheres"""

    model_config = ConfigDict(extra="forbid")

    n: List[int] = Field(default_factory=lambda: [2])
    rho0: List[float] = Field(default_factory=lambda: [math.pi / 4])
    eps: List[float] = Field(default_factory=list)
    ell: List[int] = Field(default_factory=lambda: [2])
    resolutions: List[int] = Field(default_factory=lambda: [256])
    mode: Literal["axisym", "full2d"] = "axisym"

    def members(self) -> List[Dict[str, Any]]:
        return [
            {"n": n, "resolution": res, "rho0": r, "ell": ell, "eps": e}
            for n, res, r, ell, e in itertools.product(
                self.n, self.resolutions, self.rho0, self.ell, self.eps
            )
        ]


def experiment_id(mode: str, member: Dict[str, Any]) -> str:
    return (
        f"n{member['n']}-{mode}{member['resolution']}-rho{member['rho0']:.6g}"
        f"-l{member['ell']}-eps{member['eps']:.6g}"
    )


@dataclass
class SweepResult:
    reports: List[VerificationReport]
    failures: List[Dict[str, str]]

    @property
    def summary(self) -> Dict[str, Any]:
        return {
            "experiments": len(self.reports) + len(self.failures),
            "passed": sum(r.passed for r in self.reports),
            "failed": sum(not r.passed for r in self.reports),
            "errors": len(self.failures),
            "all_pass": not self.failures and all(r.passed for r in self.reports),
        }

    def to_record(self) -> Dict[str, Any]:
        return {
            "summary": self.summary,
            "reports": [r.to_record() for r in self.reports],
            "failures": list(self.failures),
        }


def run_member(
    mode: str, member: Dict[str, Any], tolerance: float = DEFAULT_TOLERANCE
) -> VerificationReport:
    grid = build_grid(mode, member["n"], member["resolution"])
    g = perturbed_sphere(grid, member["rho0"], member["eps"], member["ell"])
    return verify_inequalities(g, experiment_id(mode, member), member, tolerance)


async def sweep(
    family: ShapeFamily, workers: int = 1, tolerance: float = DEFAULT_TOLERANCE
) -> SweepResult:
    """Run the family concurrently; individual failures are recorded, not raised"""
    members = family.members()
    limit = asyncio.Semaphore(max(1, workers))

    async def one(member):
        async with limit:
            try:
                return await asyncio.to_thread(run_member, family.mode, member, tolerance)
            except QuermassFlowError as exc:
                logger.warning("%s failed: %s", experiment_id(family.mode, member), exc)
                return {"experiment_id": experiment_id(family.mode, member), "error": str(exc)}

    results = await asyncio.gather(*(one(m) for m in members))
    reports = [r for r in results if isinstance(r, VerificationReport)]
    failures = [r for r in results if isinstance(r, dict)]
    return SweepResult(reports, failures)


# --- convergence ------------------------------------------------------------------


def fitted_order(spacing: Sequence[float], residuals: Sequence[float]) -> Union[float, str]:
    res = np.abs(np.asarray(residuals, dtype=float))
    if np.any(res < SATURATION_FLOOR):
        return "saturated"
    slope, _ = np.polyfit(np.log(np.asarray(spacing, dtype=float)), np.log(res), 1)
    return float(slope)


def _check_doubling(resolutions: Sequence[int]):
    if len(resolutions) < 3:
        raise PreconditionError(f"convergence study needs >= 3 resolutions, got {len(resolutions)}")
    for a, b in zip(resolutions, resolutions[1:]):
        if b != 2 * a:
            raise PreconditionError(f"resolutions must double: {list(resolutions)}")


def minkowski_relative_residual(g: RadialGraph, k: Optional[int] = None) -> float:
    """max over k of |residual| / ((n-k) int phi' sigma_k)"""
    fields = compute_geometry(g)
    indices = range(g.n) if k is None else [k]
    worst = 0.0
    for j in indices:
        rhs = (g.n - j) * integrate(fields, fields.phi_prime * fields.sigma[..., j])
        worst = max(worst, abs(minkowski_residual(fields, j)) / abs(rhs))
    return worst


def _rate_residual(
    g: RadialGraph,
    steps_per_unit: int,
    t_max: float,
    law: str,
    flow_k: int,
    quantity: str,
    index: int,
) -> float:
    spec = FlowSpec(
        law=law,
        k=flow_k,
        step=StepControl(dt_init=1.0 / steps_per_unit, adaptive=False, dt_max=1.0),
        stop=StopCriteria(t_max=t_max, stationarity_tol=1e-300),
    )
    trace = run(g, spec, monitors=[])
    return rate_check(trace, quantity, index).max_relative_mismatch


def convergence_study(
    check: str,
    resolutions: Sequence[int],
    n: int = 2,
    mode: str = "axisym",
    rho0: float = math.pi / 4,
    eps: float = 0.05,
    ell: int = 2,
    k: Optional[int] = None,
    grid_resolution: int = 32,
    t_max: float = 0.2,
    law: str = "gerhardt",
    flow_k: int = 1,
    quantity: str = "volume",
    index: int = -1,
) -> ConvergenceResult:
    """Observed order of a residual under doubling refinement

    Grid checks refine the colatitude count. ``rate_check`` keeps the grid at
    ``grid_resolution`` and refines the number of fixed steps per unit time;
    the default enclosed-volume rate has an exact discrete chain rule, so only
    the time error remains.
    """
    if check not in CHECKS:
        raise PreconditionError(f"unknown check {check!r}; expected one of {CHECKS}")
    _check_doubling(resolutions)
    rows = []
    for res in resolutions:
        if check == "rate_check":
            g = perturbed_sphere(build_grid(mode, n, grid_resolution), rho0, eps, ell)
            residual = _rate_residual(g, res, t_max, law, flow_k, quantity, index)
            spacing = 1.0 / res
        else:
            g = perturbed_sphere(build_grid(mode, n, res), rho0, eps, ell)
            spacing = g.grid.h_theta
            if check == "minkowski_residual":
                residual = minkowski_relative_residual(g, k)
            else:
                residual = support_gradient_residual(compute_geometry(g))
        logger.debug("%s at %s: %.6g", check, res, residual)
        rows.append(ConvergenceRow(res, spacing, residual))
    order = fitted_order([r.spacing for r in rows], [r.residual for r in rows])
    return ConvergenceResult(check, rows, order)
