"""Radial graphs over the round sphere and their pointwise geometry

A star-shaped hypersurface of the upper hemisphere is written as
{(rho(z), z) : z in S^n} in the metric dr^2 + sin^2(r) dz^2. Two
discretisations of S^n are supported:

* ``full2d`` -- colatitude/longitude grid on S^2 (n = 2 only);
* ``axisym`` -- colatitude profile on S^n for any n, the hypersurface being
  invariant under rotations fixing the polar axis.

Colatitude nodes sit at cell midpoints, so the poles are never nodes. Pole
ghosts come from the geometric parity of the sphere (longitude shifted by pi
for full2d, even reflection for axisym) and every stencil is second order.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from .errors import DomainError, GeometryError
from .symfun import elementary_symmetric

HALF_PI = 0.5 * math.pi
MIN_NODES = 16
MODES = ("full2d", "axisym")


def sphere_area(n: int) -> float:
    """|S^n| = (n+1) omega_{n+1}"""
    return 2.0 * math.pi ** ((n + 1) / 2) / special.gamma((n + 1) / 2)


def cap_integral(m: int, theta: np.ndarray) -> np.ndarray:
    """int_0^theta sin^m t dt through the regularised incomplete beta"""
    a = 0.5 * (m + 1)
    total = special.beta(a, 0.5)
    lower = 0.5 * total * special.betainc(a, 0.5, np.sin(theta) ** 2)
    return np.where(theta <= HALF_PI, lower, total - lower)


@dataclass(frozen=True, eq=False)
class RoundGrid:
    """Quadrature grid on the round S^n"""

    mode: str
    n: int
    theta: np.ndarray
    weights: np.ndarray
    resolution: Tuple[int, ...]
    lon: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.weights.shape

    @property
    def h_theta(self) -> float:
        return math.pi / len(self.theta)

    @property
    def h_lon(self) -> Optional[float]:
        return None if self.lon is None else 2.0 * math.pi / len(self.lon)

    def colatitude(self) -> np.ndarray:
        """Colatitude broadcast to the field shape"""
        return self.theta[:, None] if self.mode == "full2d" else self.theta

    def min_spacing(self) -> float:
        """Smallest geodesic node spacing on S^n"""
        if self.mode == "axisym":
            return self.h_theta
        return min(self.h_theta, self.h_lon * math.sin(self.theta[0]))

    def longitude_cutoffs(self) -> Optional[np.ndarray]:
        """Highest longitude wavenumber kept per colatitude row by `polar_filter`"""
        if self.mode == "axisym":
            return None
        cut = np.floor(2.0 * np.sin(self.theta) / self.h_theta).astype(int)
        return np.clip(cut, 1, len(self.lon) // 2)

    def total_measure(self) -> float:
        return float(np.sum(self.weights))


def build_grid(mode: str, n: int, resolution: Union[int, Sequence[int]]) -> RoundGrid:
    """Build a full2d (n = 2) or axisym (n >= 1) grid"""
    if mode not in MODES:
        raise DomainError(f"unknown grid mode {mode!r}; expected one of {MODES}")
    res = (int(resolution),) if np.isscalar(resolution) else tuple(int(r) for r in resolution)

    if mode == "full2d":
        if n != 2:
            raise DomainError(f"full2d grids exist for n=2 only, got n={n}")
        if len(res) == 1:
            res = (res[0], 2 * res[0])
        n_theta, n_lon = res
        if n_theta < MIN_NODES or n_lon < MIN_NODES:
            raise DomainError(f"resolution {res} below {MIN_NODES} nodes per direction")
        if n_lon % 2:
            raise DomainError("full2d longitude count must be even (pole parity)")
        h = math.pi / n_theta
        h_lon = 2.0 * math.pi / n_lon
        theta = (np.arange(n_theta) + 0.5) * h
        lon = np.arange(n_lon) * h_lon
        band = 2.0 * np.sin(theta) * math.sin(0.5 * h)
        weights = np.outer(band, np.full(n_lon, h_lon))
        return RoundGrid(mode, n, theta, weights, (n_theta, n_lon), lon)

    if n < 1:
        raise DomainError(f"axisym grids need n >= 1, got n={n}")
    if len(res) != 1 or res[0] < MIN_NODES:
        raise DomainError(f"axisym resolution must be one count >= {MIN_NODES}, got {res}")
    n_theta = res[0]
    h = math.pi / n_theta
    theta = (np.arange(n_theta) + 0.5) * h
    edges = np.arange(n_theta + 1) * h
    cap = cap_integral(n - 1, edges)
    orbit = sphere_area(n - 1) if n > 1 else 2.0
    weights = orbit * np.diff(cap)
    return RoundGrid(mode, n, theta, weights, (n_theta,))


@dataclass(frozen=True, eq=False)
class RadialGraph:
    """Radius field rho over a RoundGrid, 0 < rho < pi/2 at every node"""

    grid: RoundGrid
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != self.grid.shape:
            raise DomainError(f"rho has shape {rho.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(rho)):
            raise DomainError("rho contains non-finite values")
        if rho.min() <= 0.0 or rho.max() >= HALF_PI:
            raise DomainError(
                f"rho range [{rho.min():.6g}, {rho.max():.6g}] leaves the open hemisphere (0, pi/2)"
            )
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.grid.n

    def with_rho(self, rho: np.ndarray) -> "RadialGraph":
        return RadialGraph(self.grid, rho)

    def to_record(self) -> Dict[str, Any]:
        return {
            "mode": self.grid.mode,
            "n": self.grid.n,
            "resolution": list(self.grid.resolution),
            "rho": self.rho.ravel().tolist(),
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "RadialGraph":
        grid = build_grid(record["mode"], int(record["n"]), record["resolution"])
        rho = np.asarray(record["rho"], dtype=float).reshape(grid.shape)
        return cls(grid, rho)

    def save(self, path: Path):
        Path(path).write_text(json.dumps(self.to_record()), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "RadialGraph":
        return cls.from_record(json.loads(Path(path).read_text(encoding="utf-8")))


def geodesic_sphere(grid: RoundGrid, rho0: float) -> RadialGraph:
    """Constant radius field rho = rho0"""
    if not 0.0 < rho0 < HALF_PI:
        raise DomainError(f"geodesic sphere radius {rho0} outside (0, pi/2)")
    return RadialGraph(grid, np.full(grid.shape, float(rho0)))


def _harmonic(grid: RoundGrid, ell: int, order: int) -> np.ndarray:
    x = np.cos(grid.colatitude())
    if order == 0:
        return special.eval_legendre(ell, x) * np.ones(grid.shape)
    dense = special.lpmv(order, ell, np.cos(np.linspace(0.0, math.pi, 4097)))
    scale = np.max(np.abs(dense))
    return special.lpmv(order, ell, x) * np.cos(order * grid.lon)[None, :] / scale


def perturbed_sphere(
    grid: RoundGrid, rho0: float, eps: float, ell: int, order: int = 0
) -> RadialGraph:
    """rho = rho0 + eps * Y_ell, Y the Legendre polynomial P_ell(cos theta)

    On full2d grids ``order`` > 0 selects the real harmonic
    P_ell^order(cos theta) cos(order * lon), scaled to unit maximum.
    """
    if ell < 1:
        raise DomainError(f"harmonic degree must be >= 1, got {ell}")
    if order and grid.mode != "full2d":
        raise DomainError("azimuthal order needs a full2d grid")
    if not 0 <= order <= ell:
        raise DomainError(f"azimuthal order {order} outside [0, {ell}]")
    rho = rho0 + eps * _harmonic(grid, ell, order)
    return RadialGraph(grid, rho)


# --- finite differences -------------------------------------------------------


def _pad_theta(field: np.ndarray, grid: RoundGrid) -> np.ndarray:
    if grid.mode == "axisym":
        return np.concatenate([field[:1], field, field[-1:]])
    half = field.shape[1] // 2
    top = np.roll(field[:1], -half, axis=1)
    bottom = np.roll(field[-1:], -half, axis=1)
    return np.concatenate([top, field, bottom], axis=0)


def _d_theta(field: np.ndarray, grid: RoundGrid) -> Tuple[np.ndarray, np.ndarray]:
    ext = _pad_theta(field, grid)
    h = grid.h_theta
    first = (ext[2:] - ext[:-2]) / (2.0 * h)
    second = (ext[2:] - 2.0 * field + ext[:-2]) / h**2
    return first, second


def _d_lon(field: np.ndarray, h_lon: float) -> Tuple[np.ndarray, np.ndarray]:
    fwd = np.roll(field, -1, axis=1)
    bwd = np.roll(field, 1, axis=1)
    return (fwd - bwd) / (2.0 * h_lon), (fwd - 2.0 * field + bwd) / h_lon**2


def _d_theta_lon(field: np.ndarray, grid: RoundGrid) -> np.ndarray:
    ext = _pad_theta(field, grid)
    ext_lon, _ = _d_lon(ext, grid.h_lon)
    return (ext_lon[2:] - ext_lon[:-2]) / (2.0 * grid.h_theta)


def polar_filter(field: np.ndarray, grid: RoundGrid) -> np.ndarray:
    """Drop longitude modes too fine for the colatitude spacing near the poles

    Row j keeps wavenumbers m <= 2 sin(theta_j) / h_theta, so no mode is
    stiffer than the colatitude stencil and explicit steps scale with
    h_theta^2 instead of (h_lon sin theta_0)^2. Axisym fields pass through.
    """
    if grid.mode == "axisym":
        return field
    spectrum = np.fft.rfft(field, axis=1)
    m = np.arange(spectrum.shape[1])
    spectrum[m[None, :] > grid.longitude_cutoffs()[:, None]] = 0.0
    return np.fft.irfft(spectrum, n=field.shape[1], axis=1)


def _generalized_eigvalsh(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Eigenvalues of h x = kappa g x for stacks of symmetric 2x2 pairs"""
    chol = np.linalg.cholesky(g)
    inv = np.linalg.inv(chol)
    reduced = inv @ h @ np.swapaxes(inv, -1, -2)
    return np.linalg.eigvalsh(0.5 * (reduced + np.swapaxes(reduced, -1, -2)))


# --- geometry -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeometryFields:
    """Per-node geometry of a radial graph.

    Tensors are expressed in the orthonormal frame of the round metric
    (d_theta, d_lon / sin theta); ``grad_rho`` stacks the frame components.
    """

    graph: RadialGraph
    phi: np.ndarray
    phi_prime: np.ndarray
    grad_rho: np.ndarray
    grad_norm2: np.ndarray
    v: np.ndarray
    u: np.ndarray
    kappa: np.ndarray
    sigma: np.ndarray
    dmu: np.ndarray
    kappa_profile: Optional[np.ndarray] = None
    h_frame: Optional[np.ndarray] = None
    g_frame: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def grid(self) -> RoundGrid:
        return self.graph.grid

    @property
    def min_curvature(self) -> float:
        return float(self.kappa.min())

    @property
    def is_convex(self) -> bool:
        return self.min_curvature > 0.0


def compute_geometry(g: RadialGraph) -> GeometryFields:
    """Support function, principal curvatures, sigma_k and area element"""
    grid = g.grid
    n = grid.n
    rho = g.rho
    phi = np.sin(rho)
    dphi = np.cos(rho)
    theta = grid.colatitude()
    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    r_t, r_tt = _d_theta(rho, grid)

    kappa_profile = h_frame = g_frame = None
    if grid.mode == "axisym":
        grad = r_t[..., None]
        grad2 = r_t**2
        w = np.sqrt(phi**2 + grad2)
        kappa_profile = (phi**2 * dphi + 2.0 * dphi * r_t**2 - phi * r_tt) / w**3
        k_orbit = (phi * dphi - r_t * cos_t / sin_t) / (w * phi)
        kappa = np.stack([kappa_profile] + [k_orbit] * (n - 1), axis=-1)
    else:
        r_l, r_ll = _d_lon(rho, grid.h_lon)
        r_tl = _d_theta_lon(rho, grid)
        a = r_t
        b = r_l / sin_t
        grad = np.stack([a, b], axis=-1)
        grad2 = a**2 + b**2
        w = np.sqrt(phi**2 + grad2)
        hess = np.empty(rho.shape + (2, 2))
        hess[..., 0, 0] = r_tt
        hess[..., 0, 1] = hess[..., 1, 0] = (r_tl - cos_t / sin_t * r_l) / sin_t
        hess[..., 1, 1] = (r_ll + sin_t * cos_t * r_t) / sin_t**2
        outer = grad[..., :, None] * grad[..., None, :]
        eye = np.eye(2)
        h_frame = (
            (phi**2 * dphi)[..., None, None] * eye
            + 2.0 * dphi[..., None, None] * outer
            - phi[..., None, None] * hess
        ) / w[..., None, None]
        g_frame = (phi**2)[..., None, None] * eye + outer
        kappa = _generalized_eigvalsh(h_frame, g_frame)

    kappa = np.sort(kappa, axis=-1)
    u = phi**2 / w
    v = w / phi
    dmu = phi ** (n - 1) * w * grid.weights

    bad = ~(np.all(np.isfinite(kappa), axis=-1) & np.isfinite(u) & np.isfinite(dmu))
    if np.any(bad):
        node = int(np.flatnonzero(bad)[0])
        raise GeometryError("non-finite geometry", node=node)

    return GeometryFields(
        graph=g,
        phi=phi,
        phi_prime=dphi,
        grad_rho=grad,
        grad_norm2=grad2,
        v=v,
        u=u,
        kappa=kappa,
        sigma=elementary_symmetric(kappa),
        dmu=dmu,
        kappa_profile=kappa_profile,
        h_frame=h_frame,
        g_frame=g_frame,
    )


def integrate(f: GeometryFields, field: Union[float, np.ndarray]) -> float:
    """Quadrature of a node field against the induced area element"""
    values = np.broadcast_to(np.asarray(field, dtype=float), f.dmu.shape)
    return float(np.sum(values * f.dmu))


def minkowski_residual(f: GeometryFields, k: int) -> float:
    """(k+1) int sigma_{k+1} u - (n-k) int phi' sigma_k"""
    n = f.n
    if not 0 <= k <= n - 1:
        raise DomainError(f"Minkowski identity index k={k} outside [0, {n - 1}]")
    lhs = (k + 1) * integrate(f, f.sigma[..., k + 1] * f.u)
    rhs = (n - k) * integrate(f, f.phi_prime * f.sigma[..., k])
    return lhs - rhs


def support_gradient_residual(f: GeometryFields) -> float:
    """Max over nodes of |grad u - h(grad Phi)|, Phi = 1 - cos rho"""
    grid = f.grid
    u_t, _ = _d_theta(f.u, grid)
    grad_phi = f.phi[..., None] * f.grad_rho
    if grid.mode == "axisym":
        res = u_t - f.kappa_profile * grad_phi[..., 0]
        return float(np.max(np.abs(res)))
    u_l, _ = _d_lon(f.u, grid.h_lon)
    grad_u = np.stack([u_t, u_l / np.sin(grid.colatitude())], axis=-1)
    raised = np.linalg.solve(f.g_frame, grad_phi[..., None])
    res = grad_u - (f.h_frame @ raised)[..., 0]
    return float(np.max(np.linalg.norm(res, axis=-1)))
