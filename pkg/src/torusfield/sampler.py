"""Gaussian field samples on regular torus grids by spectral synthesis.

A field on the ``n^d`` grid is ``f(x) = sum_k c_k exp(2 pi i k.x)`` over the
frequency box ``{-floor(n/2), ..., ceil(n/2)-1}^d`` with independent
Hermitian-paired coefficients, ``E|c_k|^2 = mu(k)``.  Frequencies outside the
box are dropped, not folded, so the exact covariance is the band-limited
spectral series.

Draws are keyed by ``(seed, k)`` through a SplitMix64 hash, so the result does
not depend on traversal order or thread count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.special import ndtri

from .config import thread_count
from .covariance import spectral_tail_bound
from .errors import DivergenceError, PreconditionError, SymmetryError, WeightError
from .spectral import FOUR_PI_SQ, SpectralMeasure, as_lattice, fft_frequencies

SPACINGS = ("angular", "unit")

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


# ---------------------------------------------------------------------------
# keyed RNG
# ---------------------------------------------------------------------------

def _mix(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 arithmetic wraps mod 2^64
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _zigzag(k: np.ndarray) -> np.ndarray:
    k = k.astype(np.int64)
    return ((k << 1) ^ (k >> 63)).view(np.uint64)


def keyed_uniforms(seed: int, k: np.ndarray, stream: int) -> np.ndarray:
    """Uniforms in (0, 1), one per lattice point in ``k`` (shape ``(..., d)``).

    The value for a given ``k`` depends only on ``(seed, k, stream)``.
    """
    k = np.asarray(k, dtype=np.int64)
    with np.errstate(over="ignore"):
        h = np.full(k.shape[:-1], np.uint64(int(seed) & _MASK64), dtype=np.uint64)
        h = _mix(h + _GOLDEN)
        for j in range(k.shape[-1]):
            h = _mix((h ^ _zigzag(k[..., j])) + _GOLDEN)
        h = _mix((h ^ np.uint64(stream)) + _GOLDEN)
    # top 53 bits, centred in their cell so 0 and 1 never occur
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def keyed_normals(seed: int, k: np.ndarray, stream: int) -> np.ndarray:
    return ndtri(keyed_uniforms(seed, k, stream))


# ---------------------------------------------------------------------------
# grid fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridField:
    """Field values on the ``n^d`` grid, flattened in row-major axis order."""

    dim: int
    n: int
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def as_grid(self) -> np.ndarray:
        return self.values.reshape((self.n,) * self.dim)

    def at(self, index) -> float:
        idx = tuple(int(i) % self.n for i in np.atleast_1d(index))
        return float(self.as_grid()[idx])


def _box_cutoff(n: int) -> int:
    # largest K with the whole sup-norm ball of radius K inside the box
    return (n + 1) // 2 - 1


def neglected_tail_bound(mu: SpectralMeasure, n: int) -> float | None:
    """Certified bound on the spectral mass outside the grid frequency box."""
    K = _box_cutoff(n)
    if mu.tail_decay is None or K < 1:
        return None
    try:
        return spectral_tail_bound(mu.tail_decay, mu.dim, K)
    except DivergenceError:
        return None


def _mirror_index(n: int, dim: int) -> np.ndarray:
    # flat index of -k mod n for every flat grid index
    idx = np.indices((n,) * dim).reshape(dim, -1)
    return np.ravel_multi_index((-idx) % n, (n,) * dim)


def spectral_coefficients(mu: SpectralMeasure, n: int, seed: int) -> np.ndarray:
    """Hermitian-symmetric coefficients in FFT order, shape ``(n,)*d``."""
    if n < 2:
        raise PreconditionError("grid size n must be >= 2")
    d = mu.dim
    freqs = fft_frequencies(n, d).reshape(-1, d)
    w = np.asarray(mu.weight_fn(freqs), dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(w)):
        raise WeightError("spectral weight is not finite on the frequency box")
    if np.any(w < 0):
        raise WeightError("spectral weight is negative on the frequency box")
    w_neg = np.asarray(mu.weight_fn(-freqs), dtype=np.float64).reshape(-1)
    scale = max(float(np.max(np.abs(w))), 1e-300)
    if np.max(np.abs(w - w_neg)) > 1e-12 * scale:
        raise SymmetryError("spectral weight is not even on the frequency box")

    flat = np.arange(freqs.shape[0])
    mirror = _mirror_index(n, d)
    rep = np.minimum(flat, mirror)
    self_conj = flat == mirror
    key = freqs[rep]
    z1 = keyed_normals(seed, key, 0)
    z2 = keyed_normals(seed, key, 1)
    wr = w[rep]
    coeff = np.where(self_conj, np.sqrt(wr) * z1, np.sqrt(wr / 2.0) * (z1 + 1j * z2))
    coeff = np.where((flat > mirror), np.conj(coeff), coeff)
    return coeff.reshape((n,) * d)


def sample_field(mu: SpectralMeasure, n: int, seed: int) -> GridField:
    """Deterministic Gaussian draw with band-limited covariance from ``mu``."""
    d = mu.dim
    coeff = spectral_coefficients(mu, n, seed)
    raw = scipy.fft.ifftn(coeff, workers=thread_count()) * float(n) ** d
    vals = raw.real
    peak = float(np.max(np.abs(vals))) if vals.size else 0.0
    residue = float(np.max(np.abs(raw.imag))) if vals.size else 0.0
    if residue > 1e-12 * max(peak, 1e-300) and residue > 0:
        raise SymmetryError(f"synthesized field has imaginary residue {residue:.3e}")
    vals = np.ascontiguousarray(vals.reshape(-1))
    vals.setflags(write=False)
    prov = {
        "measure": dict(mu.description),
        "seed": int(seed),
        "synthesis_cutoff": _box_cutoff(n),
        "frequency_box": [-(n // 2), (n + 1) // 2 - 1],
        "neglected_tail_bound": neglected_tail_bound(mu, n),
    }
    return GridField(dim=d, n=n, values=vals, provenance=prov)


# ---------------------------------------------------------------------------
# discrete canonical field
# ---------------------------------------------------------------------------

def _spacing(n: int, spacing: str) -> float:
    if spacing == "angular":
        return 2.0 * math.pi / n
    if spacing == "unit":
        return 1.0 / n
    raise PreconditionError(f"spacing must be one of {SPACINGS}")


def _laplacian_array(n: int, k: np.ndarray, spacing: str) -> np.ndarray:
    h = _spacing(n, spacing)
    s = np.sin(math.pi * np.asarray(k, dtype=np.float64) / n) ** 2
    return (4.0 / h**2) * np.sum(s, axis=-1)


def discrete_laplacian_eigenvalue(n: int, d: int, k, spacing: str = "angular") -> float:
    """``(4/h^2) sum_j sin^2(pi k_j/n)``; ``h = 2 pi/n`` ("angular") or ``1/n`` ("unit")."""
    arr = as_lattice(k, d)
    if arr.ndim != 1:
        raise PreconditionError("expected a single frequency index")
    if np.any(arr < 0) or np.any(arr >= n):
        raise PreconditionError(f"frequency index {arr.tolist()} outside [0, {n})")
    return float(_laplacian_array(n, arr, spacing))


def discrete_canonical_measure(n: int, d: int, spacing: str = "angular") -> SpectralMeasure:
    """Pseudo-inverse weights ``1/lambda_k`` (0 on ``k = 0 mod n``).

    Defined for every integer ``k`` and ``n``-periodic, so signed box
    frequencies and ``0 <= k < n`` indices give the same values.
    """
    if n < 2:
        raise PreconditionError("grid size n must be >= 2")
    _spacing(n, spacing)

    def weight(k):
        lam = _laplacian_array(n, k, spacing)
        zero = np.all(np.asarray(k) % n == 0, axis=-1)
        safe = np.where(zero, 1.0, lam)
        return np.where(zero, 0.0, 1.0 / safe)

    return SpectralMeasure(dim=d, weight_fn=weight, tail_decay=None, growth_exponent=0,
                           description={"measure": "discrete-canonical", "n": n,
                                        "dim": d, "spacing": spacing})


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    mu_n: float
    limit: float
    ratio: float
    mu_n_unit: float
    ratio_unit: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Both spacing normalizations side by side.

    ``ratio`` uses the angular spacing ``h = 2 pi/n`` and tends to ``4 pi^2``; ``ratio_unit``
    uses ``h = 1/n`` and tends to 1.  The two differ by exactly ``4 pi^2``, so
    the fitted order is the same for both.
    """

    dim: int
    k: tuple
    rows: tuple
    order: float | None
    angular_limit_ratio: float = FOUR_PI_SQ

    def to_dict(self) -> dict:
        return {
            "dim": self.dim, "k": list(self.k), "order": self.order,
            "angular_limit_ratio": self.angular_limit_ratio,
            "rows": [r.__dict__ for r in self.rows],
        }


def discrete_convergence_report(d: int, k, n_list) -> ConvergenceReport:
    arr = as_lattice(k, d)
    if arr.ndim != 1:
        raise PreconditionError("expected a single frequency index")
    if not np.any(arr):
        raise PreconditionError("k = 0 has no limit: the pseudo-inverse weight is 0")
    k2 = float(np.sum(arr.astype(np.float64) ** 2))
    limit = 1.0 / (FOUR_PI_SQ * k2)
    rows = []
    for n in n_list:
        n = int(n)
        if n <= 2 * int(np.max(np.abs(arr))):
            raise PreconditionError(f"n={n} must exceed 2*max|k_j|")
        mu_p = 1.0 / _laplacian_array(n, arr, "angular")
        mu_u = 1.0 / _laplacian_array(n, arr, "unit")
        rows.append(ConvergenceRow(n, float(mu_p), limit, float(mu_p / limit),
                                   float(mu_u), float(mu_u / limit)))
    order = None
    if len(rows) >= 2:
        ns = np.array([r.n for r in rows], dtype=np.float64)
        err = np.abs(np.array([r.ratio_unit for r in rows]) - 1.0)
        if np.all(err > 0):
            slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
            order = float(-slope)
    return ConvergenceReport(dim=d, k=tuple(int(v) for v in arr), rows=tuple(rows), order=order)
