"""Euclidean Matérn kernel, its tail envelope and the torus normalization.

The torus covariance is the image sum of the Euclidean kernel divided by the
constant ``P = sum_n k_nu(|n|) / sigma2``, so its value at lag zero is exactly
``sigma2``.  Spectral weights carry the same factor.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import bessel
from .errors import BudgetError


def shell_count(m, dim: int):
    """Lattice points with sup-norm exactly ``m``."""
    m = np.asarray(m, dtype=np.float64)
    return np.where(m == 0, 1.0, (2 * m + 1) ** dim - (2 * m - 1) ** dim)


def geometric_tail(term, start: int, ratio_bound, rel: float = 1e-17) -> float:
    """``sum_{m >= start} term(m)`` given ``term(m+1) <= ratio_bound(m) term(m)``.

    ``ratio_bound`` must be nonincreasing in ``m``.  Terms are summed
    explicitly until the geometric remainder is negligible.
    """
    total = 0.0
    m = start
    while True:
        t = term(m)
        total += t
        q = ratio_bound(m)
        if q < 1.0 and (t == 0.0 or t * q / (1.0 - q) <= rel * total):
            return total + (t * q / (1.0 - q) if t else 0.0)
        m += 1
        if m > start + 100000:
            raise BudgetError("tail series did not settle")


def kernel_values(r: np.ndarray, nu: float, rho: float, sigma2: float) -> np.ndarray:
    """``sigma2 2^(1-nu)/Gamma(nu) z^nu K_nu(z)`` with ``z = r sqrt(2 nu)/rho``."""
    r = np.asarray(r, dtype=np.float64)
    out = np.full(r.shape, float(sigma2))
    pos = r > 0
    if np.any(pos):
        z = math.sqrt(2.0 * nu) * r[pos] / rho
        log_pref = math.log(sigma2) + (1.0 - nu) * math.log(2.0) - math.lgamma(nu)
        out[pos] = np.exp(log_pref + nu * np.log(z) + np.log(bessel.kve(nu, z)) - z)
    return out


def kernel_envelope(nu, rho, sigma2, r0: float):
    """Upper bound function for ``k_nu(r)``, valid for ``r >= r0``."""
    c = math.sqrt(2.0 * nu) / rho
    A = bessel.asymptotic_envelope(nu, c * r0)
    log_pref = math.log(sigma2) + (1.0 - nu) * math.log(2.0) - math.lgamma(nu)

    def bound(r):
        z = c * r
        return A * math.exp(log_pref + nu * math.log(z) + 0.5 * math.log(math.pi / (2 * z)) - z)

    return bound


def raw_image_tail_bound(nu: float, rho: float, sigma2: float, dim: int, N: int) -> float:
    """Bound on ``sum_{||n||_inf > N} k_nu(|h + n|)`` uniform over ``h``.

    With ``h`` reduced to ``[-1/2, 1/2)^d``, every image on shell ``m`` is at
    distance at least ``m - 1/2``.
    """
    env = kernel_envelope(nu, rho, sigma2, N + 0.5)
    c = math.sqrt(2.0 * nu) / rho

    def term(m):
        return float(shell_count(m, dim)) * env(m - 0.5)

    def ratio(m):
        poly = max(1.0, ((m + 0.5) / (m - 0.5)) ** (nu - 0.5))
        return float(shell_count(m + 1, dim) / shell_count(m, dim)) * poly * math.exp(-c)

    return geometric_tail(term, N + 1, ratio)


def image_offsets(N: int, dim: int) -> np.ndarray:
    axis = np.arange(-N, N + 1)
    return np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)


@lru_cache(maxsize=256)
def periodization_constant(nu: float, rho: float, dim: int) -> float:
    """``sum_n k_nu(|n|)`` for unit variance; always ``>= 1``.

    Shells are added until the certified remainder is below ``1e-17``
    relative, so the constant is exact to rounding.
    """
    N = 0
    while raw_image_tail_bound(nu, rho, 1.0, dim, N) > 1e-17:
        N += 1
        if N > 4096:
            raise BudgetError("periodization constant needs too many image shells")
    r = np.linalg.norm(image_offsets(N, dim).astype(np.float64), axis=-1)
    return math.fsum(kernel_values(r, nu, rho, 1.0).tolist())
