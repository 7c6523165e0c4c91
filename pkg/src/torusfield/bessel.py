"""Modified Bessel function of the second kind, K_nu(z), for real nu and z > 0.

Half-integer orders use the terminating closed form.  General orders use

    K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt

evaluated in exponentially scaled form (``exp(z) K_nu(z)``) with composite
Gauss-Legendre quadrature on ``[0, T]``, where ``T`` is where the integrand
drops below 1e-18 of its peak.
"""
from __future__ import annotations

import math

import numpy as np

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_PANELS = 24
_LOG_CUTOFF = math.log(1e18)


def _is_half_integer(nu: float) -> bool:
    return abs(nu) % 1.0 == 0.5


def _kve_half_integer(nu: float, z: np.ndarray) -> np.ndarray:
    n = int(abs(nu) - 0.5)
    total = np.zeros_like(z)
    for j in range(n + 1):
        coef = math.factorial(n + j) / (math.factorial(j) * math.factorial(n - j))
        total = total + coef / (2.0 * z) ** j
    return np.sqrt(math.pi / (2.0 * z)) * total


def _log_integrand(nu: float, t, z):
    return nu * t - z * (np.cosh(t) - 1.0)


def _upper_limit(nu: float, z: np.ndarray) -> np.ndarray:
    # log integrand (scaled) f(t) = nu t - z (cosh t - 1) peaks at sinh t* = nu/z
    t_peak = np.arcsinh(nu / z) if nu > 0 else np.zeros_like(z)
    level = _log_integrand(nu, t_peak, z) - _LOG_CUTOFF
    lo, hi = t_peak.copy(), t_peak + 1.0
    above = _log_integrand(nu, hi, z) > level
    while np.any(above):
        lo = np.where(above, hi, lo)
        hi = np.where(above, 2.0 * hi + 1.0, hi)
        above = _log_integrand(nu, hi, z) > level
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        up = _log_integrand(nu, mid, z) > level
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return hi


def _kve_integral(nu: float, z: np.ndarray) -> np.ndarray:
    flat = z.ravel()
    T = _upper_limit(nu, flat)
    edges = np.linspace(0.0, 1.0, _PANELS + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    out = np.empty_like(flat)
    step = 4096
    for i in range(0, flat.size, step):
        zz = flat[i:i + step, None]
        t = T[i:i + step, None] * s[None, :]
        damp = -zz * (np.cosh(t) - 1.0)
        integrand = 0.5 * (np.exp(nu * t + damp) + np.exp(-nu * t + damp))
        out[i:i + step] = T[i:i + step] * (integrand @ w)
    return out.reshape(z.shape)


def kve(nu: float, z):
    """Exponentially scaled ``exp(z) * K_nu(z)`` for ``z > 0``."""
    nu = abs(float(nu))
    zarr = np.asarray(z, dtype=np.float64)
    if np.any(zarr <= 0):
        raise ValueError("K_nu requires z > 0")
    if _is_half_integer(nu):
        out = _kve_half_integer(nu, zarr)
    else:
        out = _kve_integral(nu, zarr)
    return float(out) if np.ndim(z) == 0 else out


def kv(nu: float, z):
    """``K_nu(z)``; underflows to 0 for very large ``z``."""
    zarr = np.asarray(z, dtype=np.float64)
    out = kve(nu, zarr) * np.exp(-zarr)
    return float(out) if np.ndim(z) == 0 else out


def log_kv(nu: float, z):
    zarr = np.asarray(z, dtype=np.float64)
    out = np.log(kve(nu, zarr)) - zarr
    return float(out) if np.ndim(z) == 0 else out


def asymptotic_envelope(nu: float, z0: float) -> float:
    """Smallest ``A`` with ``K_nu(z) <= A sqrt(pi/(2z)) exp(-z)`` for all ``z >= z0``.

    ``sqrt(z) e^z K_nu(z)`` is nonincreasing for ``|nu| >= 1/2`` and
    nondecreasing towards ``sqrt(pi/2)`` for ``|nu| < 1/2``.
    """
    nu = abs(float(nu))
    if nu < 0.5:
        return 1.0
    return max(1.0, kve(nu, z0) / math.sqrt(math.pi / (2.0 * z0)))
