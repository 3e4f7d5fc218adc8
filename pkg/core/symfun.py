"""Elementary symmetric functions of principal-curvature spectra

Scalar operations take a `Spectrum`; the `*_field` helpers work on arrays of
spectra with the curvature index on the last axis, which is how the surface
and flow layers call them.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import DomainError, SingularRatioError


@dataclass(frozen=True)
class Spectrum:
    """Principal curvatures kappa_1..kappa_n at one point"""

    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) < 1:
            raise DomainError("spectrum needs at least one principal curvature")
        if not all(math.isfinite(v) for v in self.values):
            raise DomainError(f"non-finite principal curvature in {self.values}")

    @classmethod
    def of(cls, values: Iterable[float]) -> "Spectrum":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def isotropic(cls, n: int, c: float) -> "Spectrum":
        return cls((float(c),) * n)

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def elementary_symmetric(kappa: np.ndarray) -> np.ndarray:
    """sigma_0..sigma_n for every spectrum in `kappa` (shape (..., n)).

    One-pass recurrence e_j <- e_j + lambda * e_{j-1}, O(nk) per spectrum.
    """
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1]
    out = np.zeros(kappa.shape[:-1] + (n + 1,))
    out[..., 0] = 1.0
    for i in range(n):
        lam = kappa[..., i]
        for j in range(i + 1, 0, -1):
            out[..., j] += lam * out[..., j - 1]
    return out


def sigma_complement(kappa: np.ndarray) -> np.ndarray:
    """sigma_j(kappa | i) for j = 0..n-1, shape (..., n, n).

    Entry [..., i, j] is the j-th symmetric function of the spectrum with
    kappa_i removed, i.e. the derivative of sigma_{j+1} along kappa_i.
    """
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1]
    reduced = np.stack([np.delete(kappa, i, axis=-1) for i in range(n)], axis=-2)
    if n == 1:
        return np.ones(kappa.shape[:-1] + (1, 1))
    return elementary_symmetric(reduced)


def _check_index(k: int, lo: int, hi: int, what: str = "k"):
    if not lo <= k <= hi:
        raise DomainError(f"{what}={k} outside [{lo}, {hi}]")


def sigma(k: int, s: Spectrum) -> float:
    """k-th elementary symmetric function; sigma_0 = 1"""
    _check_index(k, 0, s.n)
    return float(elementary_symmetric(s.as_array())[k])


def sigma_by_subsets(k: int, values: Iterable[float]) -> float:
    """Subset-enumeration oracle for `sigma` (exponential, small n only)"""
    values = list(values)
    _check_index(k, 0, len(values))
    return float(sum(math.prod(c) for c in itertools.combinations(values, k)))


def sigma_ratio(k: int, s: Spectrum) -> float:
    """sigma_{k+1} / sigma_k"""
    _check_index(k, 0, s.n - 1)
    sig = elementary_symmetric(s.as_array())
    if sig[k] == 0.0:
        raise SingularRatioError(f"sigma_{k} vanishes for spectrum {s.values}")
    return float(sig[k + 1] / sig[k])


def in_gamma_cone(k: int, s: Spectrum) -> bool:
    """True iff sigma_1..sigma_k are all positive"""
    _check_index(k, 1, s.n)
    sig = elementary_symmetric(s.as_array())
    return bool(np.all(sig[1 : k + 1] > 0.0))


def in_gamma_cone_field(k: int, sig: np.ndarray) -> np.ndarray:
    """Node-wise Gamma_k membership from a sigma array of shape (..., n+1)"""
    _check_index(k, 1, sig.shape[-1] - 1)
    return np.all(sig[..., 1 : k + 1] > 0.0, axis=-1)


def newton_maclaurin_margin(k: int, s: Spectrum) -> float:
    """k(n-k) sigma_k^2 - (n-k+1)(k+1) sigma_{k-1} sigma_{k+1}"""
    n = s.n
    _check_index(k, 1, n - 1)
    sig = elementary_symmetric(s.as_array())
    return float(k * (n - k) * sig[k] ** 2 - (n - k + 1) * (k + 1) * sig[k - 1] * sig[k + 1])


def c_nk(n: int, k: int) -> float:
    """sigma_k^{(k+1)/k} / sigma_{k+1} at the identity spectrum"""
    _check_index(k, 1, n - 1)
    return math.comb(n, k) ** ((k + 1) / k) / math.comb(n, k + 1)


def maclaurin_constant(n: int, k: int) -> float:
    """Sharp constant in sigma_{k+1} <= C sigma_k^{(k+1)/k}, equality at cI"""
    return 1.0 / c_nk(n, k)


def cgls_coefficient(n: int, k: int) -> float:
    """sigma_{k+1}(I) / sigma_k(I) = (n-k)/(k+1); equals n at k = 0"""
    _check_index(k, 0, n - 1)
    return math.comb(n, k + 1) / math.comb(n, k)


def _gauss_bonnet_terms(n: int, k: int) -> list[Tuple[int, float]]:
    if 2 * k > n or k < 0:
        raise DomainError(f"Gauss-Bonnet curvature L_{k} needs 0 <= 2k <= n (n={n})")
    lead = math.comb(n, 2 * k) * math.factorial(2 * k)
    return [
        (2 * k - 2 * i, lead * (-1) ** i * math.comb(k, i) / math.comb(n, 2 * k - 2 * i))
        for i in range(k + 1)
    ]


def gauss_bonnet_Lk(n: int, k: int, s: Spectrum) -> float:
    """L_k = C(n,2k)(2k)! sum_i C(k,i)/C(n,2k-2i) (-1)^i sigma_{2k-2i}"""
    if s.n != n:
        raise DomainError(f"spectrum has {s.n} entries, expected n={n}")
    sig = elementary_symmetric(s.as_array())
    return float(sum(coef * sig[j] for j, coef in _gauss_bonnet_terms(n, k)))


def gauss_bonnet_field(k: int, sig: np.ndarray) -> np.ndarray:
    """L_k node-wise from a sigma array of shape (..., n+1)"""
    n = sig.shape[-1] - 1
    return sum(coef * sig[..., j] for j, coef in _gauss_bonnet_terms(n, k))
