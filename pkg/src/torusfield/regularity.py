"""Empirical mean-square Hoelder exponents of sampled fields.

The variogram ``gamma(l) = E (f(x + l e_j) - f(x))^2`` behaves like ``l^(2 alpha)``
at small lags; ``alpha`` is estimated as half the log-log slope.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator

from .config import thread_count
from .errors import PreconditionError
from .sampler import GridField, sample_field
from .spectral import CovarianceModel, measure_from_model

DEFAULT_MAX_LAG_FRACTION = 1.0 / 16.0
DEFAULT_MAX_LAGS = 64
_CLIP_SLACK = 1e-9


@dataclass(frozen=True)
class VariogramEstimate:
    lags: tuple
    gamma: tuple
    fit_range: tuple
    alpha_hat: float | None
    stderr: float | None
    raw_alpha: float | None = None
    clipped: bool = False
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def variogram_lag_steps(n: int, max_lag_fraction: float, max_lags: int | None) -> np.ndarray:
    """Integer lag steps ``1..floor(fraction*n)``, thinned log-uniformly to ``max_lags``."""
    if not 0.0 < max_lag_fraction <= 0.5:
        raise PreconditionError("max_lag_fraction must lie in (0, 1/2]")
    top = max(1, int(math.floor(max_lag_fraction * n)))
    if max_lags is None or top <= max_lags:
        return np.arange(1, top + 1)
    return np.unique(np.round(np.geomspace(1, top, max_lags)).astype(np.int64))


def _gamma_at(values: np.ndarray, steps: np.ndarray) -> np.ndarray:
    # circular autocovariance by FFT; gamma = 2 (A(0) - A(l)) averaged over axes
    d = values.ndim
    F = np.fft.rfftn(values)
    A = np.fft.irfftn(F * np.conj(F), s=values.shape, axes=tuple(range(d))) / values.size
    a0 = A[(0,) * d]
    out = np.zeros(len(steps))
    for j in range(d):
        idx = [0] * d
        for i, s in enumerate(steps):
            idx[j] = int(s)
            out[i] += 2.0 * (a0 - A[tuple(idx)])
    return np.maximum(out / d, 0.0)


def raw_variogram(field: GridField, steps: np.ndarray) -> np.ndarray:
    vals = np.asarray(field.as_grid(), dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise PreconditionError("field has non-finite values")
    return _gamma_at(vals, steps)


def _default_fit_range(n: int) -> tuple:
    return (4.0 / n, 1.0 / 16.0)


def fit_variogram(lags, gamma, fit_range) -> VariogramEstimate:
    lags = np.asarray(lags, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    lo, hi = fit_range
    sel = (lags >= lo * (1 - 1e-12)) & (lags <= hi * (1 + 1e-12))
    base = dict(lags=tuple(lags.tolist()), gamma=tuple(gamma.tolist()),
                fit_range=(float(lo), float(hi)))
    if np.all(gamma == 0):
        return VariogramEstimate(alpha_hat=None, stderr=None, degenerate=True, **base)
    if np.count_nonzero(sel) < 4:
        raise PreconditionError("need at least 4 lags in the fit range")
    g = gamma[sel]
    if np.any(g <= 0):
        raise PreconditionError("nonpositive variogram value inside the fit range")
    res = stats.linregress(np.log(lags[sel]), np.log(g))
    raw = 0.5 * float(res.slope)
    se = 0.5 * float(res.stderr)
    clipped = raw < -_CLIP_SLACK or raw > 1.0 + _CLIP_SLACK
    alpha = min(max(raw, 0.0), 1.0)
    return VariogramEstimate(alpha_hat=alpha, stderr=se, raw_alpha=raw, clipped=clipped, **base)


def empirical_variogram(field: GridField, max_lag_fraction: float = DEFAULT_MAX_LAG_FRACTION,
                        fit_range: tuple | None = None,
                        max_lags: int | None = DEFAULT_MAX_LAGS) -> VariogramEstimate:
    steps = variogram_lag_steps(field.n, max_lag_fraction, max_lags)
    gamma = raw_variogram(field, steps)
    lags = steps / field.n
    return fit_variogram(lags, gamma, fit_range or _default_fit_range(field.n))


def holder_exponent_estimate(v: VariogramEstimate) -> tuple:
    if v.degenerate:
        raise PreconditionError("degenerate (constant) field: exponent undefined")
    return v.alpha_hat, v.stderr


def _fields_from(X) -> list:
    if isinstance(X, GridField):
        return [X]
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], GridField):
        return list(X)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return [GridField(dim=1, n=row.size, values=row) for row in arr]


class HolderExponentEstimator(BaseEstimator):
    """Seed-averaged variogram exponent.

    ``X`` is a list of :class:`GridField` or a 2-D array whose rows are
    1-D fields.  After ``fit``: ``alpha_hat_`` is the mean per-field exponent
    and ``stderr_`` its standard error across fields (the per-field
    regression error when only one field is given).
    """

    def __init__(self, max_lag_fraction: float = DEFAULT_MAX_LAG_FRACTION,
                 fit_range: tuple | None = None, max_lags: int | None = DEFAULT_MAX_LAGS):
        self.max_lag_fraction = max_lag_fraction
        self.fit_range = fit_range
        self.max_lags = max_lags

    def fit(self, X, y=None):
        fields = _fields_from(X)
        workers = min(thread_count(), len(fields))
        est = lambda f: empirical_variogram(f, self.max_lag_fraction, self.fit_range,
                                            self.max_lags)
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                parts = list(ex.map(est, fields))
        else:
            parts = [est(f) for f in fields]
        self._aggregate(parts)
        return self

    def _aggregate(self, parts):
        if any(p.degenerate for p in parts):
            raise PreconditionError("degenerate (constant) field: exponent undefined")
        alphas = [p.alpha_hat for p in parts]
        S = len(alphas)
        mean = math.fsum(alphas) / S
        if S > 1:
            var = math.fsum((a - mean) ** 2 for a in alphas) / (S - 1)
            se = math.sqrt(var / S)
        else:
            se = parts[0].stderr
        gam = np.array([math.fsum(col) / S for col in zip(*(p.gamma for p in parts))])
        self.variograms_ = parts
        self.n_fields_ = S
        self.alpha_hat_ = mean
        self.stderr_ = se
        self.clipped_fraction_ = sum(p.clipped for p in parts) / S
        self.mean_variogram_ = fit_variogram(parts[0].lags, gam, parts[0].fit_range)


@dataclass(frozen=True)
class RegularityPrediction:
    paper_exponent: float | None
    spectral_tail_exponent: float | None
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def regularity_prediction(model: CovarianceModel) -> RegularityPrediction:
    d = model.dim
    if model.family == "matern":
        stated = model.nu - 1.5 * d
    elif model.family == "canonical-matern":
        stated = model.nu - 1.5 * d + 2.0
    else:
        stated = None
    tail = measure_from_model(model).tail_decay
    tail_exp = min(tail.a - d / 2.0, 1.0) if tail is not None else None
    notes = []
    if stated is not None and stated <= 0:
        notes.append("paper_exponent <= 0: no continuous version predicted")
    if tail_exp is not None and tail_exp <= 0:
        notes.append("spectral tail gives no mean-square continuity")
    return RegularityPrediction(stated, tail_exp, "; ".join(notes))


@dataclass(frozen=True)
class RegularityReport:
    model: dict
    n: int
    seeds: tuple
    alpha_hat: float
    stderr: float
    pooled_alpha: float | None
    clipped_fraction: float
    fit_range: tuple
    prediction: RegularityPrediction

    def discrepancy_line(self) -> str:
        p = self.prediction
        stated = "n/a" if p.paper_exponent is None else f"{p.paper_exponent:+.4f}"
        tail = "n/a" if p.spectral_tail_exponent is None else f"{p.spectral_tail_exponent:+.4f}"
        line = (f"alpha_hat={self.alpha_hat:.4f} (se {self.stderr:.4f}) | "
                f"paper_exponent={stated} | spectral_tail_exponent={tail}")
        if p.paper_exponent is not None and abs(p.paper_exponent - self.alpha_hat) > 0.1:
            line += " | DISCREPANCY: alpha_hat and paper_exponent differ by more than 0.1"
        if p.note:
            line += f" | note: {p.note}"
        return line

    def to_dict(self) -> dict:
        return {
            "model": self.model, "n": self.n, "seeds": list(self.seeds),
            "alpha_hat": self.alpha_hat, "stderr": self.stderr,
            "pooled_alpha": self.pooled_alpha, "clipped_fraction": self.clipped_fraction,
            "fit_range": list(self.fit_range),
            "paper_exponent": self.prediction.paper_exponent,
            "spectral_tail_exponent": self.prediction.spectral_tail_exponent,
            "note": self.prediction.note, "summary": self.discrepancy_line(),
        }


def regularity_report(model: CovarianceModel, n: int, seeds,
                      max_lag_fraction: float = DEFAULT_MAX_LAG_FRACTION,
                      fit_range: tuple | None = None,
                      max_lags: int | None = DEFAULT_MAX_LAGS) -> RegularityReport:
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < 16:
        raise PreconditionError("regularity report needs at least 16 seeds")
    mu = measure_from_model(model)
    workers = min(thread_count(), len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            fields = list(ex.map(lambda s: sample_field(mu, n, s), seeds))
    else:
        fields = [sample_field(mu, n, s) for s in seeds]
    est = HolderExponentEstimator(max_lag_fraction, fit_range, max_lags).fit(fields)
    return RegularityReport(
        model=model.to_dict(), n=n, seeds=seeds, alpha_hat=est.alpha_hat_,
        stderr=est.stderr_, pooled_alpha=est.mean_variogram_.alpha_hat,
        clipped_fraction=est.clipped_fraction_,
        fit_range=est.variograms_[0].fit_range,
        prediction=regularity_prediction(model))
