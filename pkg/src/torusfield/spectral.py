"""Spectral measures, symbols and spectral-domain SPDE solving on the unit torus.

All objects live on the unit torus ``[0, 1)^d`` with characters
``exp(2*pi*i*k.x)``.  A spectral measure is a nonnegative even weight on the
integer lattice; a symbol is a polynomially bounded Fourier multiplier.

Weight and symbol callables are vectorised: they receive an integer array of
shape ``(..., d)`` and return an array of shape ``(...)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatchError,
    FamilyMismatchError,
    PreconditionError,
)
from .matern import periodization_constant

FAMILIES = ("matern", "canonical", "canonical-matern", "white-noise")
CM_CONVENTIONS = ("paper-text", "solve-consistent")
MAX_GROWTH_EXPONENT = 16

FOUR_PI_SQ = 4.0 * math.pi**2


# ---------------------------------------------------------------------------
# lattice helpers
# ---------------------------------------------------------------------------

def as_lattice(k, dim: int) -> np.ndarray:
    """Validate ``k`` as one lattice point (shape ``(d,)``) or a stack ``(..., d)``."""
    arr = np.asarray(k)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != dim:
        raise DimensionMismatchError(
            f"frequency has {arr.shape[-1]} components, expected {dim}")
    if arr.dtype.kind == "f":
        if not np.all(arr == np.round(arr)):
            raise PreconditionError("frequency components must be integers")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in "iu":
        raise PreconditionError("frequency components must be integers")
    return arr.astype(np.int64, copy=False)


def norm_sq(k: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(k, dtype=np.float64) ** 2, axis=-1)


def lattice_ball(radius: float, dim: int) -> np.ndarray:
    """All lattice points with Euclidean norm <= radius, sorted by norm."""
    r = int(math.floor(radius))
    axis = np.arange(-r, r + 1)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
    pts = grid.reshape(-1, dim)
    n2 = norm_sq(pts)
    keep = n2 <= radius * radius + 1e-9
    pts, n2 = pts[keep], n2[keep]
    order = np.lexsort(tuple(pts[:, j] for j in reversed(range(dim))) + (n2,))
    return pts[order]


def fft_frequencies(n: int, dim: int) -> np.ndarray:
    """Grid frequencies in FFT order, shape ``(n,)*dim + (dim,)``.

    Per axis the box is ``{-floor(n/2), ..., ceil(n/2) - 1}``.
    """
    axis = np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack(mesh, axis=-1)


def _growth_from_tail(a: float, dim: int) -> int | None:
    # sum (1+|k|^2)^-N |k|^-2a converges iff 2N + 2a > d
    n = max(0, math.floor((dim - 2.0 * a) / 2.0) + 1)
    return n if n <= MAX_GROWTH_EXPONENT else None


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailDecay:
    """Declared envelope ``weight(k) <= C * |k|^(-2a)`` for ``|k| >= 1``."""

    a: float
    C: float


@dataclass(frozen=True)
class SpectralMeasure:
    dim: int
    weight_fn: Callable[[np.ndarray], np.ndarray]
    tail_decay: TailDecay | None = None
    growth_exponent: int | None = None
    description: dict = field(default_factory=dict)

    def weight(self, k):
        arr = as_lattice(k, self.dim)
        w = np.asarray(self.weight_fn(arr), dtype=np.float64)
        return float(w) if arr.ndim == 1 else w

    def __call__(self, k):
        return self.weight(k)


@dataclass(frozen=True)
class Symbol:
    """Fourier multiplier with ``|value(k)| <= bound_constant * (1+|k|)^order``.

    ``lower_order``/``lower_constant`` optionally certify
    ``|value(k)| >= lower_constant * |k|^lower_order`` for ``|k| >= 1``;
    this is what makes SPDE summability certifiable beyond a finite ball.
    """

    dim: int
    value_fn: Callable[[np.ndarray], np.ndarray]
    order: float
    hermitian: bool = True
    bound_constant: float | None = None
    lower_order: float | None = None
    lower_constant: float | None = None
    description: dict = field(default_factory=dict)

    def value(self, k):
        arr = as_lattice(k, self.dim)
        v = np.asarray(self.value_fn(arr), dtype=np.complex128)
        return complex(v) if arr.ndim == 1 else v

    def __call__(self, k):
        return self.value(k)


@dataclass(frozen=True)
class CovarianceModel:
    """Parameter bundle for one covariance family.

    The range is stored in Stein form ``rho``; :meth:`from_kappa` accepts the
    operator-form parameter through ``rho = sqrt(2 nu) / kappa``.
    """

    family: str
    dim: int = 1
    nu: float | None = None
    rho: float | None = None
    sigma2: float = 1.0
    cm_exponent_convention: str = "paper-text"
    angular_frequency_factor: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown family {self.family!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise PreconditionError("dim must be a positive integer")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise PreconditionError("sigma2 must be > 0")
        if self.family in ("matern", "canonical-matern"):
            if self.nu is None or not (self.nu > 0 and math.isfinite(self.nu)):
                raise PreconditionError("nu must be > 0")
            if self.rho is None or not (self.rho > 0 and math.isfinite(self.rho)):
                raise PreconditionError("rho must be > 0")
        if self.cm_exponent_convention not in CM_CONVENTIONS:
            raise PreconditionError(
                f"cm_exponent_convention must be one of {CM_CONVENTIONS}")

    @classmethod
    def from_kappa(cls, family: str, kappa: float, nu: float, **kw) -> "CovarianceModel":
        if not (kappa > 0 and nu > 0):
            raise PreconditionError("kappa and nu must be > 0")
        return cls(family=family, nu=nu, rho=math.sqrt(2.0 * nu) / kappa, **kw)

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * self.nu) / self.rho

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "dim": self.dim,
            "nu": self.nu,
            "rho": self.rho,
            "sigma2": self.sigma2,
            "cm_exponent_convention": self.cm_exponent_convention,
            "angular_frequency_factor": self.angular_frequency_factor,
        }


def _require_family(model: CovarianceModel, family: str):
    if model.family != family:
        raise FamilyMismatchError(f"expected family {family!r}, got {model.family!r}")


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def _matern_amplitude(nu: float, rho: float, sigma2: float, dim: int) -> float:
    # Fourier transform of the Matérn kernel:
    # sigma2 Gamma(nu+d/2)/Gamma(nu) (4 pi)^(d/2) alpha^(2nu) (alpha^2 + 4pi^2|xi|^2)^-(nu+d/2)
    alpha = math.sqrt(2.0 * nu) / rho
    log_amp = (math.lgamma(nu + dim / 2.0) - math.lgamma(nu)
               + 0.5 * dim * math.log(4.0 * math.pi) + 2.0 * nu * math.log(alpha))
    return sigma2 * math.exp(log_amp)


def _matern_weight_array(k: np.ndarray, nu, rho, sigma2, dim) -> np.ndarray:
    alpha2 = 2.0 * nu / rho**2
    amp = _matern_amplitude(nu, rho, sigma2, dim)
    return amp * (alpha2 + FOUR_PI_SQ * norm_sq(k)) ** (-(nu + dim / 2.0))


def matern_spectral_weight(model: CovarianceModel, k):
    """Fourier coefficient of the torus Matérn covariance at frequency ``k``.

    This is the Euclidean Matérn spectral density sampled on the lattice,
    divided by the periodization constant so that the weights sum to
    ``sigma2``.
    """
    _require_family(model, "matern")
    arr = as_lattice(k, model.dim)
    w = _matern_weight_array(arr, model.nu, model.rho, model.sigma2, model.dim)
    w = w / periodization_constant(model.nu, model.rho, model.dim)
    return float(w) if arr.ndim == 1 else w


def _canonical_array(k: np.ndarray, scale: float = 1.0) -> np.ndarray:
    n2 = norm_sq(k)
    out = np.zeros_like(n2)
    nz = n2 > 0
    out[nz] = scale / n2[nz]
    return out


def canonical_weight(k, dim: int | None = None):
    """``|k|^-2`` away from the origin, zero at ``k = 0``."""
    arr = np.asarray(k)
    d = arr.shape[-1] if arr.ndim else 1
    arr = as_lattice(arr, dim or d)
    w = _canonical_array(arr)
    return float(w) if arr.ndim == 1 else w


def white_noise_weight(dim: int, k):
    arr = as_lattice(k, dim)
    w = np.full(arr.shape[:-1], (2.0 * math.pi) ** (-dim))
    return float(w) if arr.ndim == 1 else w


def _symbol_scale(angular: bool) -> float:
    return FOUR_PI_SQ if angular else 1.0


def _matern_symbol_array(k, nu, kappa, angular):
    return (kappa**2 + _symbol_scale(angular) * norm_sq(k)) ** (nu / 2.0)


def _cm_array(k, nu, kappa, convention, angular):
    base = _canonical_array(k)
    if convention == "paper-text":
        return base * (kappa**2 + _symbol_scale(angular) * norm_sq(k)) ** (-nu / 2.0)
    g = _matern_symbol_array(k, nu, kappa, angular)
    out = np.zeros_like(base)
    nz = base > 0
    out[nz] = base[nz] / np.abs(g[nz]) ** 2
    return out


def canonical_matern_weight(model: CovarianceModel, k):
    """Canonical-Matérn weight under ``model.cm_exponent_convention``.

    ``paper-text`` uses the exponent ``-nu/2`` on the Matérn factor;
    ``solve-consistent`` divides the canonical weight by ``|sigma(k)|^2``,
    i.e. exponent ``-nu``.
    """
    _require_family(model, "canonical-matern")
    arr = as_lattice(k, model.dim)
    w = _cm_array(arr, model.nu, model.kappa, model.cm_exponent_convention,
                  model.angular_frequency_factor)
    return float(w) if arr.ndim == 1 else w


# ---------------------------------------------------------------------------
# measure constructors
# ---------------------------------------------------------------------------

def _make_measure(dim, fn, tail: TailDecay | None, description) -> SpectralMeasure:
    growth = _growth_from_tail(tail.a, dim) if tail is not None else None
    return SpectralMeasure(dim=dim, weight_fn=fn, tail_decay=tail,
                           growth_exponent=growth, description=description)


def matern_measure(model: CovarianceModel) -> SpectralMeasure:
    _require_family(model, "matern")
    nu, rho, s2, d = model.nu, model.rho, model.sigma2, model.dim
    a = nu + d / 2.0
    P = periodization_constant(nu, rho, d)
    C = _matern_amplitude(nu, rho, s2, d) / P * FOUR_PI_SQ ** (-a)
    return _make_measure(
        d, lambda k: _matern_weight_array(k, nu, rho, s2, d) / P, TailDecay(a, C),
        {"measure": "matern", **model.to_dict()})


def canonical_measure(dim: int, scale: float = 1.0) -> SpectralMeasure:
    """Canonical field weights ``scale * |k|^-2``.

    ``scale = 1/(4 pi^2)`` gives the Green's-function normalization of the
    Laplacian on the unit torus.
    """
    return _make_measure(dim, lambda k: _canonical_array(k, scale), TailDecay(1.0, scale),
                         {"measure": "canonical", "dim": dim, "scale": scale})


def white_noise_measure(dim: int) -> SpectralMeasure:
    c = (2.0 * math.pi) ** (-dim)
    return _make_measure(dim, lambda k: np.full(np.shape(k)[:-1], c), TailDecay(0.0, c),
                         {"measure": "white-noise", "dim": dim})


def canonical_matern_measure(model: CovarianceModel) -> SpectralMeasure:
    _require_family(model, "canonical-matern")
    nu, kappa, conv = model.nu, model.kappa, model.cm_exponent_convention
    ang = model.angular_frequency_factor
    expo = nu / 2.0 if conv == "paper-text" else nu
    s = _symbol_scale(ang)
    # (kappa^2 + s|k|^2)^-expo <= s^-expo |k|^-2expo
    tail = TailDecay(1.0 + expo, s ** (-expo))
    return _make_measure(model.dim, lambda k: _cm_array(k, nu, kappa, conv, ang), tail,
                         {"measure": "canonical-matern", **model.to_dict()})


def measure_from_model(model: CovarianceModel) -> SpectralMeasure:
    if model.family == "matern":
        return matern_measure(model)
    if model.family == "canonical":
        return canonical_measure(model.dim)
    if model.family == "white-noise":
        return white_noise_measure(model.dim)
    return canonical_matern_measure(model)


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

def matern_symbol(nu: float, kappa: float, dim: int,
                  angular_frequency_factor: bool = False) -> Symbol:
    """``(kappa^2 + |k|^2)^(nu/2)``; the angular flag inserts ``4 pi^2 |k|^2``."""
    if not (nu > 0 and kappa > 0):
        raise PreconditionError("nu and kappa must be > 0")
    s = _symbol_scale(angular_frequency_factor)
    return Symbol(
        dim=dim,
        value_fn=lambda k: _matern_symbol_array(k, nu, kappa, angular_frequency_factor),
        order=nu,
        bound_constant=max(kappa, math.sqrt(s)) ** nu,
        lower_order=nu,
        lower_constant=s ** (nu / 2.0),
        description={"symbol": "matern", "nu": nu, "kappa": kappa,
                     "angular_frequency_factor": angular_frequency_factor},
    )


def identity_symbol(dim: int) -> Symbol:
    return Symbol(dim=dim, value_fn=lambda k: np.ones(np.shape(k)[:-1]), order=0.0,
                  bound_constant=1.0, lower_order=0.0, lower_constant=1.0,
                  description={"symbol": "identity"})


def norm_symbol(dim: int) -> Symbol:
    """``g(k) = |k|``, which vanishes at the origin."""
    return Symbol(dim=dim, value_fn=lambda k: np.sqrt(norm_sq(k)), order=1.0,
                  bound_constant=1.0, lower_order=1.0, lower_constant=1.0,
                  description={"symbol": "norm"})


# ---------------------------------------------------------------------------
# operator action and SPDE solving
# ---------------------------------------------------------------------------

def _check_dims(g: Symbol, mu: SpectralMeasure):
    if g.dim != mu.dim:
        raise DimensionMismatchError(f"symbol dim {g.dim} != measure dim {mu.dim}")


def apply_symbol_to_measure(g: Symbol, mu: SpectralMeasure) -> SpectralMeasure:
    """Spectral measure ``|g|^2 mu`` of ``L_g U`` when ``U`` has measure ``mu``."""
    _check_dims(g, mu)
    gfn, wfn = g.value_fn, mu.weight_fn

    def weight(k):
        return np.abs(np.asarray(gfn(k), dtype=np.complex128)) ** 2 * np.asarray(wfn(k))

    tail = None
    if mu.tail_decay is not None and g.bound_constant is not None:
        m = g.order
        tail = TailDecay(mu.tail_decay.a - m,
                         mu.tail_decay.C * g.bound_constant**2 * (4.0**m if m > 0 else 1.0))
    if tail is not None:
        growth = _growth_from_tail(tail.a, mu.dim)
    elif mu.growth_exponent is not None:
        growth = mu.growth_exponent + max(0, math.ceil(g.order))
        growth = growth if growth <= MAX_GROWTH_EXPONENT else None
    else:
        growth = None
    return SpectralMeasure(mu.dim, weight, tail, growth,
                           {"measure": "symbol-action", "symbol": g.description,
                            "input": mu.description})


@dataclass(frozen=True)
class SPDESolution:
    measure: SpectralMeasure
    unique: bool
    zero_set: tuple = ()


@dataclass(frozen=True)
class NoSolution:
    """Existence fails: ``k`` is a frequency with ``g(k) = 0`` but ``mu_X(k) > 0``.

    ``k`` is ``None`` when no zero was found but summability beyond the
    inspected ball could not be certified.
    """

    k: tuple | None
    reason: str

    def __bool__(self):
        return False


def solve_spde_measure(g: Symbol, mu_X: SpectralMeasure, radius: int = 64):
    """Spectral measure of the stationary solution of ``L_g U = X``.

    Zeros of ``g`` are inspected on the lattice ball of the given radius;
    beyond it, the symbol's lower bound and the tail record of ``mu_X``
    certify summability.
    """
    _check_dims(g, mu_X)
    ball = lattice_ball(radius, g.dim)
    gv = np.asarray(g.value_fn(ball), dtype=np.complex128)
    mx = np.asarray(mu_X.weight_fn(ball), dtype=np.float64)
    zeros = gv == 0
    bad = zeros & (mx > 0)
    if np.any(bad):
        k = tuple(int(c) for c in ball[np.argmax(bad)])
        return NoSolution(k=k, reason=f"g{k} = 0 while mu_X{k} > 0")
    if (mu_X.tail_decay is None or g.lower_order is None
            or not g.lower_constant or g.lower_constant <= 0):
        return NoSolution(k=None, reason="summability beyond the inspected ball is uncertified")

    tx = mu_X.tail_decay
    tail = TailDecay(tx.a + g.lower_order, tx.C / g.lower_constant**2)
    growth = _growth_from_tail(tail.a, g.dim)
    if growth is None:
        return NoSolution(k=None, reason="no growth exponent <= 16 certifies summability")

    gfn, wfn = g.value_fn, mu_X.weight_fn

    def weight(k):
        gk = np.asarray(gfn(k), dtype=np.complex128)
        wk = np.asarray(wfn(k), dtype=np.float64)
        out = np.zeros(np.shape(wk))
        nz = gk != 0
        out[nz] = wk[nz] / np.abs(gk[nz]) ** 2
        return out

    measure = SpectralMeasure(g.dim, weight, tail, growth,
                              {"measure": "spde-solution", "symbol": g.description,
                               "forcing": mu_X.description})
    zero_set = tuple(tuple(int(c) for c in p) for p in ball[zeros])
    return SPDESolution(measure=measure, unique=not zero_set, zero_set=zero_set)


def slow_growth_certificate(mu: SpectralMeasure, radius: int) -> int | None:
    """Smallest ``N <= 16`` with ``sum (1+|k|^2)^-N mu(k)`` certifiably finite.

    The partial sum over the ball of the given radius is checked for
    finiteness; the tail beyond it is bounded by the measure's tail record.
    Returns ``None`` (unverified) when no tail record exists.
    """
    if radius < 1:
        raise PreconditionError("radius must be >= 1")
    if mu.tail_decay is None:
        return None
    ball = lattice_ball(radius, mu.dim)
    w = np.asarray(mu.weight_fn(ball), dtype=np.float64)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        return None
    return _growth_from_tail(mu.tail_decay.a, mu.dim)


def with_description(mu: SpectralMeasure, **extra) -> SpectralMeasure:
    return replace(mu, description={**mu.description, **extra})
