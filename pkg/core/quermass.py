"""Quermassintegrals of domains bounded by radial graphs, and sphere oracles"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from scipy import optimize

from .errors import DomainError
from .surface import (
    HALF_PI,
    GeometryFields,
    RadialGraph,
    cap_integral,
    compute_geometry,
    integrate,
    sphere_area,
)

K_CURVATURE = 1.0

ArrayLike = Union[float, np.ndarray]


def radial_volume_integral(n: int, rho: ArrayLike) -> ArrayLike:
    """int_0^rho sin^n r dr, valid on [0, pi/2]"""
    return cap_integral(n, np.asarray(rho, dtype=float))


def quermass_chain(
    n: int, volume: ArrayLike, area: ArrayLike, curvature_integral: Callable[[int], ArrayLike]
) -> Dict[int, ArrayLike]:
    """A_{-1}..A_{n-1} from volume, area and int sigma_k (k >= 1)

    A_1 uses int sigma_1 + nK Vol; A_k for k >= 2 recurses on A_{k-2}, so the
    even chain ends at A_0 and the odd chain at A_1.
    """
    values: Dict[int, ArrayLike] = {-1: volume, 0: area}
    for k in range(1, n):
        if k == 1:
            values[1] = curvature_integral(1) + n * K_CURVATURE * volume
        else:
            values[k] = curvature_integral(k) + K_CURVATURE * (n - k + 1) / (k - 1) * values[k - 2]
    return values


@dataclass
class QuermassVector:
    """A_{-1}, ..., A_{n-1} of one enclosed domain"""

    n: int
    values: Dict[int, float]
    K: float = K_CURVATURE

    def __post_init__(self):
        expected = set(range(-1, self.n))
        if set(self.values) != expected:
            raise DomainError(f"quermass indices {sorted(self.values)} != {sorted(expected)}")
        if not all(math.isfinite(v) for v in self.values.values()):
            raise DomainError(f"non-finite quermassintegral in {self.values}")

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def as_list(self) -> list[float]:
        return [self.values[k] for k in range(-1, self.n)]

    def w(self, k: int) -> float:
        """Mixed volume W_{k+1} of the domain"""
        return wk_from_ak(self.n, k, self.values[k])

    def to_record(self) -> Dict[str, Any]:
        return {"n": self.n, "K": self.K, "A": {str(k): v for k, v in self.values.items()}}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "QuermassVector":
        values = {int(k): float(v) for k, v in record["A"].items()}
        return cls(int(record["n"]), values, float(record.get("K", K_CURVATURE)))


def enclosed_volume(g: RadialGraph) -> float:
    """Vol = int_{S^n} int_0^{rho(z)} sin^n r dr dz"""
    return float(np.sum(g.grid.weights * radial_volume_integral(g.n, g.rho)))


def curvature_integrals(fields: GeometryFields) -> np.ndarray:
    """int sigma_j dmu for j = 0..n"""
    return np.array([integrate(fields, fields.sigma[..., j]) for j in range(fields.n + 1)])


def quermass_vector(
    g: RadialGraph, fields: Optional[GeometryFields] = None
) -> QuermassVector:
    """Quermassintegrals of the domain enclosed by g"""
    fields = fields if fields is not None else compute_geometry(g)
    integrals = curvature_integrals(fields)
    values = quermass_chain(g.n, enclosed_volume(g), integrals[0], lambda j: integrals[j])
    return QuermassVector(g.n, {k: float(v) for k, v in values.items()})


# --- geodesic-sphere closed forms ---------------------------------------------


def _check_quermass_index(n: int, k: int):
    if not -1 <= k <= n - 1:
        raise DomainError(f"quermass index k={k} outside [-1, {n - 1}]")


def sphere_curvature_integral(n: int, rho: ArrayLike, j: int) -> ArrayLike:
    """int sigma_j over the geodesic sphere of radius rho: C(n,j) |S^n| cos^j sin^(n-j)"""
    rho = np.asarray(rho, dtype=float)
    return math.comb(n, j) * sphere_area(n) * np.cos(rho) ** j * np.sin(rho) ** (n - j)


def sphere_chain(n: int, rho: ArrayLike) -> Dict[int, ArrayLike]:
    """Every A_k of the geodesic sphere of radius rho, keyed by k"""
    return quermass_chain(
        n,
        sphere_area(n) * radial_volume_integral(n, rho),
        sphere_curvature_integral(n, rho, 0),
        lambda j: sphere_curvature_integral(n, rho, j),
    )


def sphere_quermass(n: int, rho: ArrayLike, k: int) -> ArrayLike:
    """A_k(B_rho) in closed form"""
    _check_quermass_index(n, k)
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0) or np.any(r > HALF_PI):
        raise DomainError(f"sphere radius outside (0, pi/2]: {rho}")
    value = sphere_chain(n, r)[k]
    return float(value) if np.ndim(value) == 0 else value


def sphere_quermass_derivative(n: int, rho: ArrayLike, k: int) -> ArrayLike:
    """d/drho A_k(B_rho) = (k+1) int sigma_{k+1}; the area for k = -1"""
    _check_quermass_index(n, k)
    if k == -1:
        return sphere_curvature_integral(n, rho, 0)
    return (k + 1) * sphere_curvature_integral(n, rho, k + 1)


def s_k(n: int, k: int) -> float:
    """A_k of the hemisphere B_{pi/2}"""
    return sphere_quermass(n, HALF_PI, k)


def wk_from_ak(n: int, k: int, a: float) -> float:
    """W_{k+1} = A_k / ((n+1) C(n,k))"""
    if not 0 <= k <= n - 1:
        raise DomainError(f"W conversion needs 0 <= k <= n-1, got k={k}")
    return a / ((n + 1) * math.comb(n, k))


def eta_k(n: int, k: int, a: float) -> float:
    """Radius of the geodesic sphere with A_k = a"""
    _check_quermass_index(n, k)
    top = s_k(n, k)
    if not 0.0 < a < top:
        raise DomainError(f"A_{k}={a} outside (0, s_{k}={top})")
    return optimize.brentq(
        lambda r: float(sphere_chain(n, r)[k]) - a, 0.0, HALF_PI, xtol=1e-14
    )
