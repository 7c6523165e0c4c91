"""Covariance evaluation on the unit torus with certified truncation bounds.

Three routes compute the same covariances and check each other:

* :func:`spectral_cov` sums the spectral series ``sum_k mu(k) cos(2 pi k.h)``
  over a lattice box, bounded by a power-law tail comparison.
* :func:`periodized_matern_cov` sums Matérn images ``sum_n k_nu(|h + n|)``,
  bounded with the Bessel asymptotic envelope.
* :func:`canonical_matern_cov_conv` sums the convolution terms ``I_n`` of
  the canonical and Matérn covariances, bounded by an exponential shell sum.

Range convention for the convolution route: its ``rho`` is given on the
``2 pi``-periodic torus and is mapped to the unit torus by
:func:`unit_torus_range` (``rho / 2 pi``).  The image decay rate per shell is
then ``2 pi sqrt(2 nu) / rho``.  Every other function reads ``rho`` directly
as a unit-torus length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from . import bessel
from .errors import (
    BudgetError,
    DimensionMismatchError,
    DivergenceError,
    FamilyMismatchError,
    PreconditionError,
)
from .matern import (
    geometric_tail as _geometric_tail,
    image_offsets as _image_offsets,
    kernel_values as _matern_kernel_values,
    periodization_constant,
    raw_image_tail_bound,
    shell_count as _shell_count,
)
from .spectral import (
    CovarianceModel,
    SpectralMeasure,
    Symbol,
    TailDecay,
    FOUR_PI_SQ,
    _canonical_array,
    _matern_amplitude,
    _matern_weight_array,
    fft_frequencies,
    white_noise_measure,
)

DEFAULT_MAX_IMAGES = 64
DEFAULT_MAX_SPECTRAL_CUTOFF = {1: 1 << 22, 2: 2048, 3: 128}
CONV_SAFETY = 4.0


@dataclass(frozen=True)
class TruncationBudget:
    tol: float | None
    cutoff: int
    certified_bound: float | None

    def to_dict(self):
        return {"tol": self.tol, "cutoff": self.cutoff,
                "certified_bound": self.certified_bound}


# ---------------------------------------------------------------------------
# torus geometry
# ---------------------------------------------------------------------------

def _lags(h, dim: int) -> np.ndarray:
    arr = np.asarray(h, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != dim:
        if dim == 1:
            arr = arr[..., None]
        else:
            raise PreconditionError(f"lag must have {dim} components")
    return arr


def _pack(vals: np.ndarray, h):
    if vals.size == 1 and np.ndim(h) <= 1:
        return float(vals.reshape(-1)[0])
    return vals


def torus_reduce(h) -> np.ndarray:
    """Representative of ``h`` in ``[-1/2, 1/2)`` per axis."""
    h = np.asarray(h, dtype=np.float64)
    return h - np.floor(h + 0.5)


def torus_distance(h) -> np.ndarray:
    """Per-axis torus distance ``min(|h_j|, 1 - |h_j|)``."""
    return np.abs(torus_reduce(h))


# ---------------------------------------------------------------------------
# Matérn kernel
# ---------------------------------------------------------------------------

def _matern_params(model: CovarianceModel):
    if model.family not in ("matern", "canonical-matern"):
        raise FamilyMismatchError("Matérn kernel needs a matern or canonical-matern model")
    return model.nu, model.rho, model.sigma2


def matern_kernel(r, model: CovarianceModel):
    """``sigma2 2^(1-nu)/Gamma(nu) z^nu K_nu(z)`` with ``z = r sqrt(2 nu)/rho``."""
    nu, rho, s2 = _matern_params(model)
    arr = np.asarray(r, dtype=np.float64)
    if np.any(arr < 0):
        raise PreconditionError("r must be nonnegative")
    out = _matern_kernel_values(arr, nu, rho, s2)
    return float(out) if np.ndim(r) == 0 else out


def matern_tail_constant(model: CovarianceModel, z0: float = 10.0) -> float:
    """Constant ``C`` with ``k_nu(r) <= C r^(nu-1/2) exp(-r sqrt(2nu)/rho)``
    for ``r >= z0 rho / sqrt(2 nu)``.

    The ``(1 + delta)`` slack of the asymptotic argument is taken as the
    exact Bessel envelope on ``z >= z0``.
    """
    nu, rho, s2 = _matern_params(model)
    c = math.sqrt(2.0 * nu) / rho
    base = (s2 * 2.0 ** (1.0 - nu) / math.gamma(nu)
            * math.sqrt(math.pi * rho / (2.0 * math.sqrt(2.0 * nu))) * c**nu)
    return base * bessel.asymptotic_envelope(nu, z0)


# ---------------------------------------------------------------------------
# periodized Matérn (image sum)
# ---------------------------------------------------------------------------

def image_tail_bound(model: CovarianceModel, N: int) -> float:
    """Bound on the image-sum remainder beyond sup-norm shell ``N``, uniform over ``h``.

    Refers to the normalized covariance of :func:`periodized_matern_cov`.
    """
    nu, rho, s2 = _matern_params(model)
    return raw_image_tail_bound(nu, rho, s2, model.dim, N) / periodization_constant(
        nu, rho, model.dim)


def periodized_matern_cov(h, model: CovarianceModel, tol: float = 1e-10,
                          max_cutoff: int = DEFAULT_MAX_IMAGES, cutoff: int | None = None):
    """Normalized image sum of the Matérn kernel at lag(s) ``h``.

    The sum is divided by :func:`periodization_constant` so the value at
    ``h = 0`` is ``sigma2``.

    Returns ``(value, TruncationBudget)``; ``value`` is a float for a single
    lag and an array for a stack of lags.
    """
    if tol is not None and not tol > 0:
        raise PreconditionError("tol must be > 0")
    nu, rho, s2 = _matern_params(model)
    lags = torus_reduce(_lags(h, model.dim))
    if cutoff is None:
        N = 0
        while image_tail_bound(model, N) > tol:
            N += 1
            if N > max_cutoff:
                raise BudgetError(f"tol {tol:g} needs more than {max_cutoff} image shells")
    else:
        N = int(cutoff)
    bound = image_tail_bound(model, N)
    offsets = _image_offsets(N, model.dim)
    flat = lags.reshape(-1, model.dim)
    r = np.linalg.norm(flat[:, None, :] + offsets[None, :, :], axis=-1)
    vals = _matern_kernel_values(r, nu, rho, s2).sum(axis=1).reshape(lags.shape[:-1])
    vals = vals / periodization_constant(nu, rho, model.dim)
    return _pack(vals, h), TruncationBudget(tol, N, bound)


# ---------------------------------------------------------------------------
# spectral series
# ---------------------------------------------------------------------------

def spectral_tail_bound(tail: TailDecay, dim: int, K: int) -> float:
    """Bound on ``sum_{||k||_inf > K} mu(k)`` from ``mu(k) <= C |k|^-2a``."""
    p = 2.0 * tail.a - dim
    if p <= 0:
        raise DivergenceError(f"tail exponent a={tail.a} <= d/2: series not summable")
    return (tail.C * dim * 2.0**dim * (1.0 + 1.0 / (2 * K + 2)) ** (dim - 1)
            * float(K) ** (-p) / p)


def _cutoff_for(tail: TailDecay, dim: int, tol: float, cap: int) -> int:
    """Smallest ``K <= cap`` whose tail bound is ``<= tol``."""
    if spectral_tail_bound(tail, dim, cap) > tol:
        raise BudgetError(f"tol {tol:g} is not certifiable with spectral cutoff <= {cap}")
    if spectral_tail_bound(tail, dim, 1) <= tol:
        return 1
    lo, hi = 1, cap
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if spectral_tail_bound(tail, dim, mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def _resolve_cutoff(mu: SpectralMeasure, tol, cutoff, max_cutoff):
    cap = max_cutoff or DEFAULT_MAX_SPECTRAL_CUTOFF.get(mu.dim, 64)
    if mu.tail_decay is None:
        if cutoff is None:
            raise PreconditionError("measure has no tail record: pass an explicit cutoff")
        return int(cutoff), None
    if 2.0 * mu.tail_decay.a <= mu.dim:
        raise DivergenceError(
            f"tail exponent a={mu.tail_decay.a} <= d/2={mu.dim / 2}: spectral series diverges")
    if cutoff is None:
        if tol is None or not tol > 0:
            raise PreconditionError("tol must be > 0")
        K = _cutoff_for(mu.tail_decay, mu.dim, tol, cap)
    else:
        K = int(cutoff)
    return K, spectral_tail_bound(mu.tail_decay, mu.dim, K)


def _box_rows(K: int, dim: int, rows: int):
    """Yield the lattice box ``[-K, K]^d`` in chunks along the first axis."""
    axis = np.arange(-K, K + 1)
    rest = (np.stack(np.meshgrid(*([axis] * (dim - 1)), indexing="ij"), axis=-1)
            .reshape(-1, dim - 1) if dim > 1 else np.zeros((1, 0), dtype=np.int64))
    for i in range(0, axis.size, rows):
        first = axis[i:i + rows]
        block = np.concatenate(
            [np.repeat(first, rest.shape[0])[:, None], np.tile(rest, (first.size, 1))], axis=1)
        yield block


def spectral_cov(mu: SpectralMeasure, h, tol: float | None = 1e-8, cutoff: int | None = None,
                 max_cutoff: int | None = None):
    """Spectral series ``sum_{||k||_inf <= K} mu(k) cos(2 pi k.h)`` at arbitrary lags.

    The bound is ``None`` (unverified) when the measure carries no tail record.
    """
    K, bound = _resolve_cutoff(mu, tol, cutoff, max_cutoff)
    lags = _lags(h, mu.dim)
    flat = lags.reshape(-1, mu.dim)
    acc = np.zeros(flat.shape[0])
    rows = max(1, (1 << 18) // max(1, (2 * K + 1) ** (mu.dim - 1) * max(1, flat.shape[0] // 64)))
    for block in _box_rows(K, mu.dim, rows):
        w = np.asarray(mu.weight_fn(block), dtype=np.float64)
        phase = block.astype(np.float64) @ flat.T
        phase -= np.round(phase)
        acc += w @ np.cos(2.0 * np.pi * phase)
    vals = acc.reshape(lags.shape[:-1])
    return _pack(vals, h), TruncationBudget(tol, K, bound)


def spectral_cov_grid(mu: SpectralMeasure, M: int, tol: float | None = 1e-8,
                      cutoff: int | None = None, max_cutoff: int | None = None):
    """Spectral series evaluated at every lag ``j/M`` of the ``M^d`` grid.

    Box frequencies are folded modulo ``M`` (exact for grid lags) and
    transformed once, so the cost is independent of the number of lags.
    """
    K, bound = _resolve_cutoff(mu, tol, cutoff, max_cutoff)
    d = mu.dim
    folded = np.zeros(M**d)
    strides = M ** np.arange(d - 1, -1, -1)
    rows = max(1, (1 << 20) // (2 * K + 1) ** (d - 1))
    for block in _box_rows(K, d, rows):
        w = np.asarray(mu.weight_fn(block), dtype=np.float64)
        idx = (np.mod(block, M) * strides).sum(axis=1)
        folded += np.bincount(idx, weights=w, minlength=M**d)
    grid = np.fft.fftn(folded.reshape((M,) * d)).real
    return grid, TruncationBudget(tol, K, bound)


# ---------------------------------------------------------------------------
# canonical field
# ---------------------------------------------------------------------------

def canonical_cov_closed_1d(h, dim: int = 1):
    """``pi^2/3 - pi theta + theta^2/2`` with ``theta = 2 pi * torus distance``."""
    if dim != 1:
        raise PreconditionError("closed form exists only for d = 1")
    arr = np.asarray(h, dtype=np.float64)
    if arr.ndim >= 1 and arr.shape[-1:] == (1,):
        arr = arr[..., 0]
    theta = 2.0 * np.pi * torus_distance(arr)
    out = np.pi**2 / 3.0 - np.pi * theta + theta**2 / 2.0
    return float(out) if np.ndim(out) == 0 else out


def _cos_inv_square_derivative(n: int, c: float, t: float) -> float:
    # d^n/dt^n [cos(c t) t^-2] via Leibniz
    total = 0.0
    for j in range(n + 1):
        trig = c**j * math.cos(c * t + j * math.pi / 2.0)
        m = n - j
        power = (-1) ** m * math.factorial(m + 1) * t ** (-2 - m)
        total += math.comb(n, j) * trig * power
    return total


def _em_tail_cos_inv_square(c: float, K: int, terms: int = 10):
    """Euler-Maclaurin estimate of ``sum_{k > K} cos(c k) / k^2`` for ``0 <= c <= pi``.

    Returns ``(estimate, remainder_bound)``.
    """
    if c == 0.0:
        integral = 1.0 / K
    else:
        si, _ = special.sici(c * K)
        integral = math.cos(c * K) / K - c * (math.pi / 2.0 - si)
    est = integral - math.cos(c * K) / K**2 / 2.0
    bern = special.bernoulli(2 * terms + 2)
    for j in range(1, terms + 1):
        est -= bern[2 * j] / math.factorial(2 * j) * _cos_inv_square_derivative(2 * j - 1, c, K)
    # |R| <= 2 zeta(2p)/(2pi)^(2p) int_K^inf |g^(2p)|, with p = terms + 1
    p2 = 2 * terms + 2
    integral_bound = 0.0
    for j in range(p2 + 1):
        m = p2 - j
        integral_bound += math.comb(p2, j) * c**j * math.factorial(m + 1) * K ** (-1 - m) / (m + 1)
    rem = 2.0 * special.zeta(p2, 1) / (2.0 * math.pi) ** p2 * integral_bound
    return est, rem


def canonical_cov_series_1d(h, cutoff: int = 100_000, tail_correction: bool = True):
    """Canonical covariance in d = 1 from its spectral series.

    The partial sum over ``1 <= |k| <= cutoff`` is computed directly; with
    ``tail_correction`` the remainder is added by Euler-Maclaurin and the
    returned bound is the Euler-Maclaurin remainder bound, otherwise the
    bound is the plain tail ``2 / cutoff``.  Both include a floating-point
    rounding allowance.
    """
    arr = np.atleast_1d(np.asarray(h, dtype=np.float64))
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    dist = torus_distance(arr)
    K = int(cutoff)
    acc = np.zeros(dist.shape)
    for start in range(1, K + 1, 1 << 14):
        k = np.arange(start, min(K, start + (1 << 14) - 1) + 1, dtype=np.float64)
        phase = np.outer(dist, k)
        phase -= np.round(phase)
        acc += np.cos(2.0 * np.pi * phase) @ (1.0 / k**2)
    vals = 2.0 * acc
    # floating-point allowance: each chunked dot product of length <= 2^14
    # and the chunk accumulation, against sum |terms| <= pi^2/3
    rounding = (2**14 + K // 2**14 + 8) * np.finfo(float).eps * math.pi**2 / 3.0
    if tail_correction:
        bound = 0.0
        for i, x in enumerate(dist):
            est, rem = _em_tail_cos_inv_square(2.0 * math.pi * float(x), K)
            vals[i] += 2.0 * est
            bound = max(bound, 2.0 * rem)
    else:
        bound = 2.0 / K
    bound += rounding
    value = float(vals[0]) if np.ndim(h) == 0 else vals
    return value, TruncationBudget(None, K, bound)


def _theta(t: float, x: float) -> float:
    """``sum_n exp(-t n^2) cos(2 pi n x)``, using the Jacobi transform for small ``t``."""
    if t >= math.pi:
        n = np.arange(1, int(math.sqrt(40.0 / t)) + 3)
        return 1.0 + 2.0 * float(np.sum(np.exp(-t * n**2) * np.cos(2.0 * math.pi * n * x)))
    x = x - math.floor(x + 0.5)
    m = np.arange(-6, 7)
    return math.sqrt(math.pi / t) * float(np.sum(np.exp(-(math.pi**2) * (x + m) ** 2 / t)))


def canonical_cov_heat(h, dim: int, scale: float = 1.0, epsabs: float = 1e-13) -> float:
    """Canonical covariance ``scale * sum_{k != 0} |k|^-2 cos(2 pi k.h)`` for ``h != 0``.

    Uses ``|k|^-2 = int_0^inf exp(-t |k|^2) dt`` so the lattice sum becomes
    ``int_0^inf (prod_j theta(t, h_j) - 1) dt``.  This is the Abel value of
    the series, which for ``d >= 2`` is not absolutely summable.
    """
    hv = torus_reduce(np.asarray(h, dtype=np.float64).reshape(-1))
    if hv.size != dim:
        raise PreconditionError(f"lag must have {dim} components")
    r2 = float(np.sum(hv**2))
    if r2 == 0.0:
        raise PreconditionError("canonical covariance is singular at h = 0 for d >= 2")

    def f(t):
        return math.prod(_theta(t, float(x)) for x in hv) - 1.0

    t_lo = math.pi**2 * r2 / 120.0
    t_hi = 60.0
    # below t_lo the theta product is < e^-120 (pi/t)^(d/2): integrand is -1
    lo_part = -t_lo
    hi_part = 2.0 * dim * math.exp(-t_hi)
    breaks = np.geomspace(t_lo, t_hi, 40)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=epsabs / 40, epsrel=1e-13, limit=200)
        total += val
    return scale * (total + lo_part + hi_part)


@dataclass(frozen=True)
class AsymptoticsReport:
    dim: int
    lags: list
    values: list
    slope: float
    expected: float
    kind: str  # "log" (d = 2) or "power" (d >= 3)

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.expected) / abs(self.expected)

    @property
    def absolute_error(self) -> float:
        return abs(self.slope - self.expected)

    def to_dict(self):
        return {"dim": self.dim, "lags": self.lags, "values": self.values,
                "slope": self.slope, "expected": self.expected, "kind": self.kind,
                "relative_error": self.relative_error, "absolute_error": self.absolute_error}


def canonical_asymptotics_check(dim: int, h_list=None) -> AsymptoticsReport:
    """Fit the small-lag singularity of the canonical covariance.

    Uses the Laplacian Green's-function normalization ``(4 pi^2 |k|^2)^-1``.
    For d = 2 the slope of ``rho`` against ``log|h|`` is compared with
    ``-1/(2 pi)``; for d >= 3 the log-log slope is compared with ``-(d-2)``.
    Lags are taken along the first axis.
    """
    if dim < 2:
        raise PreconditionError("asymptotics check needs d >= 2 (d = 1 has a closed form)")
    if h_list is None:
        h_list = 2.0 ** -np.arange(10, 3, -1) if dim == 2 else 2.0 ** -np.arange(12, 6, -1)
    hs = np.sort(np.asarray(h_list, dtype=np.float64))
    if hs.size < 3 or hs[-1] / hs[0] < 4.0 or hs[0] <= 0:
        raise PreconditionError("need at least 3 positive lags spanning a factor >= 4")
    scale = 1.0 / (4.0 * math.pi**2)
    vals = np.array([canonical_cov_heat(np.r_[x, np.zeros(dim - 1)], dim, scale) for x in hs])
    if dim == 2:
        slope = float(np.polyfit(np.log(hs), vals, 1)[0])
        expected, kind = -1.0 / (2.0 * math.pi), "log"
    else:
        slope = float(np.polyfit(np.log(hs), np.log(vals), 1)[0])
        expected, kind = -(dim - 2.0), "power"
    return AsymptoticsReport(dim, hs.tolist(), vals.tolist(), slope, expected, kind)


# ---------------------------------------------------------------------------
# canonical-Matérn convolution route
# ---------------------------------------------------------------------------

def unit_torus_range(rho: float) -> float:
    """Map a range given on the ``2 pi``-periodic torus to the unit torus."""
    return rho / (2.0 * math.pi)


def conv_decay_rate(model: CovarianceModel) -> float:
    """Per-shell exponential decay rate ``2 pi sqrt(2 nu) / rho`` of ``I_n``."""
    nu, rho, _ = _matern_params(model)
    return 2.0 * math.pi * math.sqrt(2.0 * nu) / rho


def _kinked_cell_1d(res: int, kinks):
    """Composite trapezoid nodes/weights on ``[-1/2, 1/2]`` with the given kinks as breakpoints.

    Both factors of the integrand are smooth between kinks, so the error is a
    clean ``O(res^-2)`` and halving the resolution gives a safe estimate.
    """
    cuts = sorted({-0.5, 0.5, *(float(k) for k in kinks if -0.5 < k < 0.5)})
    ys, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(2, int(round(res * (b - a))))
        y = np.linspace(a, b, m + 1)
        w = np.full(m + 1, (b - a) / m)
        w[[0, -1]] *= 0.5
        ys.append(y)
        ws.append(w)
    return np.concatenate(ys), np.concatenate(ws)


def _canonical_on_cell(res: int, dim: int):
    """Canonical covariance on a periodic cell grid, centered at the origin (d >= 2)."""
    # band-limited synthesis on a res^d grid; rectangle rule is trapezoid on the periodic cell
    k = fft_frequencies(res, dim)
    cb = np.fft.ifftn(_canonical_array(k)).real * res**dim
    cb = np.fft.fftshift(cb)
    axis = (np.arange(res) - res // 2) / res
    y = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return y, cb.reshape(-1), np.full(y.shape[0], 1.0 / res**dim)


def _conv_term_raw(n, x, model: CovarianceModel, res: int) -> float:
    nu, rho, s2 = _matern_params(model)
    d = model.dim
    xv = _lags(x, d).reshape(d)
    shift = xv + np.asarray(n, dtype=np.float64)
    if d == 1:
        # kinks: C_B at y = 0, the Matérn factor at y = x + n
        y, w = _kinked_cell_1d(res, (0.0, float(shift[0])))
        y = y[:, None]
        cb = canonical_cov_closed_1d(y[:, 0])
    else:
        y, cb, w = _canonical_on_cell(res, d)
    r = np.linalg.norm(shift[None, :] - y, axis=1)
    kv = _matern_kernel_values(r, nu, unit_torus_range(rho), s2)
    return float(np.dot(w, cb * kv))


class ConvTerm(NamedTuple):
    value: float
    quadrature_error: float


def canonical_matern_conv_term(n, x, model: CovarianceModel, resolution: int = 1024,
                               with_error: bool = False):
    """``I_n(x) = int C_B(y) k_nu(|x - y + n|) dy`` over the centered unit cell.

    Composite trapezoidal rule (breakpoints at the kinks in d = 1, a periodic
    grid in d = 2); the quadrature estimate is the change from half the
    resolution.
    """
    d = model.dim
    if d > 2:
        raise PreconditionError("convolution terms are implemented for d <= 2")
    if resolution < 64:
        raise PreconditionError("resolution must be >= 64")
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if n.size != d:
        raise PreconditionError(f"image index must have {d} components")
    val = _conv_term_raw(n, x, model, resolution)
    if not with_error:
        return val
    coarse = _conv_term_raw(n, x, model, resolution // 2)
    return ConvTerm(val, abs(val - coarse))


def conv_tail_bound(model: CovarianceModel, K_prime: float, N: int) -> float:
    """``4 K' sum_{m > N} #shell(m) m^p exp(-r m)``, ``p = max(nu - 1/2, 0)``."""
    nu = model.nu
    d = model.dim
    r = conv_decay_rate(model)
    p = max(nu - 0.5, 0.0)

    def term(m):
        return CONV_SAFETY * K_prime * float(_shell_count(m, d)) * m**p * math.exp(-r * m)

    def ratio(m):
        return float(_shell_count(m + 1, d) / _shell_count(m, d)) * ((m + 1) / m) ** p * math.exp(-r)

    return _geometric_tail(term, N + 1, ratio)


@dataclass(frozen=True)
class ConvResult:
    value: float
    budget: TruncationBudget
    quadrature_error: float
    K_prime: float


def canonical_matern_cov_conv(x, model: CovarianceModel, tol: float = 1e-10,
                              resolution: int = 1024, max_cutoff: int = DEFAULT_MAX_IMAGES,
                              cutoff: int | None = None):
    """Canonical-Matérn covariance as ``sum_{||n||_inf <= N} I_n(x)``.

    ``K'`` is measured on the first shell; ``N`` is the smallest cutoff
    whose shell-sum bound is below ``tol``.  Returns ``(value, budget)``;
    use :func:`canonical_matern_cov_conv_full` for diagnostics.
    """
    res = canonical_matern_cov_conv_full(x, model, tol, resolution, max_cutoff, cutoff)
    return res.value, res.budget


def canonical_matern_cov_conv_full(x, model: CovarianceModel, tol: float = 1e-10,
                                   resolution: int = 1024, max_cutoff: int = DEFAULT_MAX_IMAGES,
                                   cutoff: int | None = None) -> ConvResult:
    if cutoff is None and not (tol is not None and tol > 0):
        raise PreconditionError("tol must be > 0")
    d = model.dim
    r = conv_decay_rate(model)
    shell1 = [n for n in _image_offsets(1, d) if np.max(np.abs(n)) == 1]
    first = [canonical_matern_conv_term(n, x, model, resolution, with_error=True) for n in shell1]
    K_prime = max(abs(t.value) for t in first) * math.exp(r)
    if cutoff is None:
        N = 0
        while conv_tail_bound(model, K_prime, N) > tol:
            N += 1
            if N > max_cutoff:
                raise BudgetError(f"tol {tol:g} needs more than {max_cutoff} image shells")
    else:
        N = int(cutoff)
    bound = conv_tail_bound(model, K_prime, N)
    total, qerr = 0.0, 0.0
    for n in _image_offsets(N, d):
        t = canonical_matern_conv_term(n, x, model, resolution, with_error=True)
        total += t.value
        qerr += t.quadrature_error
    return ConvResult(total, TruncationBudget(tol, N, bound), qerr, K_prime)


def conv_product_measure(model: CovarianceModel) -> SpectralMeasure:
    """Spectrum of ``C_B * C_M``: canonical weights times unit-torus Matérn weights.

    The Matérn factor is the raw Euclidean density, matching the raw kernel
    inside ``I_n``.

    By the convolution theorem this is the independent spectral route for
    :func:`canonical_matern_cov_conv`.
    """
    nu, rho, s2 = _matern_params(model)
    rho_u = unit_torus_range(rho)
    d = model.dim

    def weight(k):
        return _canonical_array(k) * _matern_weight_array(k, nu, rho_u, s2, d)

    a = nu + d / 2.0
    C = _matern_amplitude(nu, rho_u, s2, d) * FOUR_PI_SQ ** (-a)
    return SpectralMeasure(d, weight, TailDecay(a + 1.0, C), None,
                           {"measure": "canonical*matern", "nu": nu, "rho_unit": rho_u})


# ---------------------------------------------------------------------------
# convolution structure of SPDE solutions
# ---------------------------------------------------------------------------

class ConvolutionCheck(NamedTuple):
    deviation: float
    truncation_gap: float


def _grid_cov(weights: np.ndarray) -> np.ndarray:
    n = weights.shape[0]
    return np.fft.ifftn(weights).real * n**weights.ndim


def convolution_structure_check(g: Symbol, mu_X: SpectralMeasure, n: int) -> ConvolutionCheck:
    """Compare ``rho_U`` from ``mu_X/|g|^2`` with ``rho_U^W * rho_X`` on an ``n^d`` grid.

    Covariances are band-limited to the grid box, and the convolution uses
    the volume of the ``2 pi``-periodic torus, ``(2 pi)^d n^-d sum_y``, which
    matches the white-noise weight ``(2 pi)^-d``.  ``truncation_gap``
    compares ``rho_U`` from the box at ``n`` with the box at ``2n``.
    """
    if g.dim != mu_X.dim:
        raise DimensionMismatchError("symbol and measure dimensions differ")
    d = g.dim
    k = fft_frequencies(n, d)
    gv = np.asarray(g.value_fn(k), dtype=np.complex128)
    if np.any(gv == 0):
        raise PreconditionError("symbol has zeros on the grid box")
    g2 = np.abs(gv) ** 2
    mx = np.asarray(mu_X.weight_fn(k), dtype=np.float64)
    mw = np.asarray(white_noise_measure(d).weight_fn(k), dtype=np.float64)
    rho_u = _grid_cov(mx / g2)
    rho_w = _grid_cov(mw / g2)
    rho_x = _grid_cov(mx)
    conv = np.fft.ifftn(np.fft.fftn(rho_w) * np.fft.fftn(rho_x)).real
    conv *= (2.0 * np.pi) ** d / n**d
    deviation = float(np.max(np.abs(rho_u - conv)))

    k2 = fft_frequencies(2 * n, d)
    g2_fine = np.abs(np.asarray(g.value_fn(k2), dtype=np.complex128)) ** 2
    fine = _grid_cov(np.asarray(mu_X.weight_fn(k2), dtype=np.float64) / g2_fine)
    fine = fine[tuple(slice(None, None, 2) for _ in range(d))]
    return ConvolutionCheck(deviation, float(np.max(np.abs(fine - rho_u))))
