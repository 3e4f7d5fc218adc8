"""Comparison functions xi_{k,l}: A_k(B_rho) = xi_{k,l}(A_l(B_rho))

Three independent constructions are offered:

* parametric -- a sweep over geodesic spheres, inverted through a monotone
  table and polished with Newton steps on the closed sphere forms;
* closed forms -- the squared Minkowski bound and xi_{2,0};
* ode -- xi_{2,0} integrated from its linear ODE, started on a sphere.

The parametric construction is the reference; the others cross-check it.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import DomainError
from .quermass import eta_k, s_k, sphere_chain, sphere_quermass_derivative
from .surface import HALF_PI, sphere_area

logger = logging.getLogger(__name__)

KINDS = ("parametric", "closed_minkowski_sq", "closed_20", "ode")
XI_20_VARIANTS = ("sphere", "printed")
XI_20_READINGS = ("printed", "factored")

EDGE = 1e-3
DEFAULT_KNOTS = 2000
NEWTON_ITERATIONS = 4

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(values: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


@dataclass(frozen=True, eq=False)
class XiFunction:
    """A strictly increasing comparison function on the open interval `domain`

    ``squared`` marks the Minkowski kind, which maps A_0^2 to (int sigma_1)^2
    rather than A_l to A_k.
    """

    n: int
    k: int
    l: int
    kind: str
    domain: Tuple[float, float]
    value_range: Tuple[float, float]
    evaluate: Callable[[np.ndarray], np.ndarray]
    slope: Callable[[np.ndarray], np.ndarray]
    squared: bool = False
    table: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def _checked(self, s: ArrayLike) -> np.ndarray:
        arr = np.asarray(s, dtype=float)
        lo, hi = self.domain
        if np.any(~np.isfinite(arr)) or np.any(arr <= lo) or np.any(arr >= hi):
            raise DomainError(f"{self.label} evaluated outside its domain ({lo}, {hi}): {s}")
        return arr

    @property
    def label(self) -> str:
        return f"xi[{self.kind}]_{{{self.k},{self.l}}}(n={self.n})"

    def __call__(self, s: ArrayLike) -> ArrayLike:
        return _scalar_or_array(self.evaluate(self._checked(s)), s)

    def derivative(self, s: ArrayLike) -> ArrayLike:
        return _scalar_or_array(self.slope(self._checked(s)), s)

    def samples(self, count: int, margin: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """(s, xi(s)) on `count` evenly spaced interior points"""
        lo, hi = self.domain
        width = hi - lo
        s = np.linspace(lo + margin * width, hi - margin * width, count + 2)[1:-1]
        return s, np.asarray(self.evaluate(s))


# --- parametric ---------------------------------------------------------------


def _chebyshev_radii(knots: int) -> np.ndarray:
    a, b = EDGE, HALF_PI - EDGE
    j = np.arange(knots)
    return 0.5 * (a + b) - 0.5 * (b - a) * np.cos(math.pi * j / (knots - 1))


def _check_pair(n: int, k: int, l: int):
    if not -1 <= l < k <= n - 1:
        raise DomainError(f"xi_{{{k},{l}}} needs -1 <= l < k <= n-1 (n={n})")


@lru_cache(maxsize=64)
def xi_parametric(n: int, k: int, l: int, knots: int = DEFAULT_KNOTS) -> XiFunction:
    """xi_{k,l} from a Chebyshev sweep of geodesic spheres"""
    _check_pair(n, k, l)
    if knots < 200:
        raise DomainError(f"parametric xi needs at least 200 knots, got {knots}")

    rho = _chebyshev_radii(knots)
    chain = sphere_chain(n, rho)
    x = np.asarray(chain[l])
    # A_l flattens near the equator; drop knots that no longer increase
    keep = x > np.concatenate([[-np.inf], np.maximum.accumulate(x)[:-1]])
    rho, x = rho[keep], x[keep]
    y = np.asarray(chain[k])[keep]
    rho_of_x = interpolate.PchipInterpolator(x, rho, extrapolate=False)
    top = s_k(n, l)
    logger.debug("xi_{%d,%d} n=%d: %d of %d knots kept", k, l, n, len(x), knots)

    def radius(s: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(s)
        out = np.empty_like(s)
        inside = (s >= x[0]) & (s <= x[-1])
        if np.any(inside):
            si = s[inside]
            idx = np.clip(np.searchsorted(x, si), 1, len(x) - 1)
            lo, hi = rho[idx - 1], rho[idx]
            r = rho_of_x(si)
            for _ in range(NEWTON_ITERATIONS):
                resid = np.asarray(sphere_chain(n, r)[l]) - si
                r = np.clip(r - resid / sphere_quermass_derivative(n, r, l), lo, hi)
            out[inside] = r
        for i in np.flatnonzero(~inside):
            out[i] = eta_k(n, l, float(s[i]))
        return out

    def evaluate(s: np.ndarray) -> np.ndarray:
        shape = np.shape(s)
        return np.asarray(sphere_chain(n, radius(s))[k]).reshape(shape)

    def slope(s: np.ndarray) -> np.ndarray:
        shape = np.shape(s)
        r = radius(s)
        ratio = sphere_quermass_derivative(n, r, k) / sphere_quermass_derivative(n, r, l)
        return np.asarray(ratio).reshape(shape)

    return XiFunction(
        n=n,
        k=k,
        l=l,
        kind="parametric",
        domain=(0.0, top),
        value_range=(0.0, s_k(n, k)),
        evaluate=evaluate,
        slope=slope,
        table=(x, y),
    )


# --- closed forms ---------------------------------------------------------------


def _minkowski_sq_parts(n: int) -> Tuple[float, float]:
    return n**2 * sphere_area(n) ** (2.0 / n), float(n**2)


def _closed_eval(f: XiFunction, s: ArrayLike) -> ArrayLike:
    """Closed forms extend to the right end of the domain, the hemisphere value"""
    arr = np.asarray(s, dtype=float)
    top = f.domain[1]
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr > top):
        raise DomainError(f"{f.label} evaluated outside (0, {top}]: {s}")
    return _scalar_or_array(f.evaluate(arr), s)


def xi_closed_minkowski_sq(n: int, s: ArrayLike) -> ArrayLike:
    """n^2 |S^n|^{2/n} s^{(n-1)/n} - n^2 s on (0, s_0^2]"""
    return _closed_eval(xi_minkowski_sq(n), s)


def xi_minkowski_sq(n: int) -> XiFunction:
    """Squared Minkowski bound, (int sigma_1)^2 >= xi(A_0^2)"""
    if n < 2:
        raise DomainError(f"squared Minkowski bound needs n >= 2, got n={n}")
    a, b = _minkowski_sq_parts(n)
    p = (n - 1) / n
    peak = (a * p / b) ** n
    return XiFunction(
        n=n,
        k=1,
        l=0,
        kind="closed_minkowski_sq",
        domain=(0.0, sphere_area(n) ** 2),
        value_range=(0.0, a * peak**p - b * peak),
        evaluate=lambda s: a * s**p - b * s,
        slope=lambda s: a * p * s ** (p - 1.0) - b,
        squared=True,
    )


def minkowski_sq_residual(n: int, s: ArrayLike) -> ArrayLike:
    """2((n-1)/n) xi(s) - (2n + 2 xi'(s)) s with the analytic derivative"""
    f = xi_minkowski_sq(n)
    s = np.asarray(s, dtype=float)
    return 2.0 * (n - 1) / n * f(s) - (2.0 * n + 2.0 * f.derivative(s)) * s


def _xi_20_parts(n: int, variant: str) -> Tuple[float, float]:
    if variant not in XI_20_VARIANTS:
        raise DomainError(f"unknown xi_2,0 variant {variant!r}; expected one of {XI_20_VARIANTS}")
    a = math.comb(n, 2) * sphere_area(n) ** (2.0 / n)
    b = (n - 1) * (n - 2) / 2.0 if variant == "sphere" else (n - 1) / 2.0
    return a, b


def xi_20(n: int, variant: str = "sphere") -> XiFunction:
    """Closed-form xi_{2,0}; ``variant="printed"`` keeps the -(n-1)/2 s tail"""
    if n < 3:
        raise DomainError(f"xi_2,0 needs n >= 3, got n={n}")
    a, b = _xi_20_parts(n, variant)
    p = (n - 2) / n
    top = sphere_area(n)
    return XiFunction(
        n=n,
        k=2,
        l=0,
        kind="closed_20",
        domain=(0.0, top),
        value_range=(0.0, a * top**p - b * top),
        evaluate=lambda s: a * s**p - b * s,
        slope=lambda s: a * p * s ** (p - 1.0) - b,
    )


def xi_closed_20(n: int, s: ArrayLike, variant: str = "sphere") -> ArrayLike:
    return _closed_eval(xi_20(n, variant), s)


def _xi_20_rhs(n: int, s: ArrayLike, xi: ArrayLike, reading: str) -> ArrayLike:
    if reading == "printed":
        return ((n - 2) * xi - (n - 1) * s) / (n * s)
    if reading == "factored":
        return (n - 2) * (xi - (n - 1) * s) / (n * s)
    raise DomainError(f"unknown xi_2,0 ODE reading {reading!r}; expected one of {XI_20_READINGS}")


def xi_20_residual(
    n: int, s: ArrayLike, reading: str = "factored", variant: str = "sphere"
) -> ArrayLike:
    """xi'(s) - rhs(s, xi(s)) for the chosen closed form and ODE reading

    The sphere variant satisfies the factored reading (n-2)(xi-(n-1)s)/(ns);
    the printed variant satisfies ((n-2)xi-(n-1)s)/(ns). Both coincide at n=3.
    """
    f = xi_20(n, variant)
    s = np.asarray(s, dtype=float)
    return f.derivative(s) - _xi_20_rhs(n, s, f(s), reading)


# --- ODE integration --------------------------------------------------------------


@lru_cache(maxsize=16)
def xi_ode(n: int, reading: str = "factored", start: float = 0.25 * math.pi) -> XiFunction:
    """xi_{2,0} integrated with DOP853 from the sphere value at rho = start"""
    if n < 3:
        raise DomainError(f"xi_2,0 needs n >= 3, got n={n}")
    if reading not in XI_20_READINGS:
        raise DomainError(f"unknown xi_2,0 ODE reading {reading!r}")
    s0 = float(sphere_chain(n, start)[0])
    y0 = float(sphere_chain(n, start)[2])
    top = sphere_area(n)
    bottom = 1e-6 * top

    def rhs(s, y):
        return [_xi_20_rhs(n, s, y[0], reading)]

    opts = dict(method="DOP853", rtol=1e-13, atol=1e-14 * top, dense_output=True)
    up = integrate.solve_ivp(rhs, (s0, top), [y0], **opts)
    down = integrate.solve_ivp(rhs, (s0, bottom), [y0], **opts)
    if not (up.success and down.success):
        raise DomainError(f"xi_2,0 ODE integration failed: {up.message} / {down.message}")

    def evaluate(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.where(s >= s0, up.sol(s)[0], down.sol(s)[0])

    def slope(s: np.ndarray) -> np.ndarray:
        return _xi_20_rhs(n, s, evaluate(s), reading)

    return XiFunction(
        n=n,
        k=2,
        l=0,
        kind="ode",
        domain=(bottom, top),
        value_range=(float(down.sol(bottom)[0]), float(up.sol(top)[0])),
        evaluate=evaluate,
        slope=slope,
    )


def xi_ode_residual(
    n: int, k: int, xi_kk2: XiFunction, xi_k2k4: XiFunction, s: float
) -> float:
    """Residual of the xi'_{k,k-2} recursion at s, with a centred-difference slope

    xi' = (n-k)/(n-k+2) (xi - (n-k+1)/(k-1) s) / (s - (n-k+3)/(k-3) xi^{-1}_{k-2,k-4}(s))
    """
    if k < 4:
        raise DomainError(f"the xi_{{k,k-2}} recursion is stated for k >= 4, got k={k}")
    if (xi_kk2.k, xi_kk2.l) != (k, k - 2) or (xi_k2k4.k, xi_k2k4.l) != (k - 2, k - 4):
        raise DomainError("xi arguments must be xi_{k,k-2} and xi_{k-2,k-4}")
    h = 1e-6 * s
    slope = (xi_kk2(s + h) - xi_kk2(s - h)) / (2.0 * h)
    num = xi_kk2(s) - (n - k + 1) / (k - 1) * s
    den = s - (n - k + 3) / (k - 3) * xi_inverse(xi_k2k4, s)
    return float(slope - (n - k) / (n - k + 2) * num / den)


def xi_inverse(f: XiFunction, y: float) -> float:
    """s with f(s) = y, by bracketing on the domain"""
    if f.squared:
        raise DomainError("the squared Minkowski bound is not monotone and has no inverse")
    lo, hi = f.domain
    y_lo, y_hi = f.value_range
    if not y_lo < y < y_hi:
        raise DomainError(f"{y} outside the range ({y_lo}, {y_hi}) of {f.label}")

    def gap(s: float) -> float:
        if s <= lo:
            return y_lo - y
        if s >= hi:
            return y_hi - y
        return float(f.evaluate(np.asarray(s))) - y

    return optimize.brentq(gap, lo, hi, xtol=1e-15 * hi, maxiter=500)


def build_xi(n: int, k: int, l: int, kind: str = "parametric", **options) -> XiFunction:
    """Factory used by the CLI and the verification layer"""
    if kind == "parametric":
        return xi_parametric(n, k, l, options.get("knots", DEFAULT_KNOTS))
    if kind == "closed_minkowski_sq":
        return xi_minkowski_sq(n)
    if (k, l) != (2, 0):
        raise DomainError(f"kind {kind!r} exists only for (k,l) = (2,0), got ({k},{l})")
    if kind == "closed_20":
        return xi_20(n, options.get("variant", "sphere"))
    if kind == "ode":
        return xi_ode(n, options.get("reading", "factored"))
    raise DomainError(f"unknown xi kind {kind!r}; expected one of {KINDS}")
