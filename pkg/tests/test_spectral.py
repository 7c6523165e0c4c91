import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusfield import (
    CovarianceModel,
    FamilyMismatchError,
    NoSolution,
    SPDESolution,
    SpectralMeasure,
    apply_symbol_to_measure,
    canonical_matern_weight,
    canonical_measure,
    canonical_weight,
    matern_measure,
    matern_spectral_weight,
    matern_symbol,
    periodized_matern_cov,
    slow_growth_certificate,
    solve_spde_measure,
    white_noise_measure,
)
from torusfield.covariance import spectral_tail_bound
from torusfield.errors import DimensionMismatchError, PreconditionError
from torusfield.spectral import (
    canonical_matern_measure,
    identity_symbol,
    lattice_ball,
    norm_symbol,
    white_noise_weight,
)

TWO_PI = 2.0 * math.pi
lattice_1d = st.integers(-128, 128).map(lambda k: np.array([k]))
lattice_2d = st.tuples(st.integers(-90, 90), st.integers(-90, 90)).map(np.array)


def _dft_of_grid(values):
    # Riemann-sum Fourier coefficients of a periodic function sampled on j/M
    return np.fft.fft(values).real / values.size


# ---------------------------------------------------------------------------
# Matérn weights
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 3])
def test_matern_weight_at_origin_is_positive_and_finite(d):
    w = matern_spectral_weight(CovarianceModel("matern", dim=d, nu=1.2, rho=0.1), np.zeros(d, int))
    assert 0 < w < math.inf


def test_matern_weight_ratios_match_periodized_exponential_dft():
    # oracle: DFT of the periodized exponential kernel on a 2^16-point grid
    model = CovarianceModel("matern", nu=0.5, rho=0.3)
    M = 1 << 16
    x = np.arange(M) / M
    n = np.arange(-40, 41)
    kern = np.exp(-np.abs(x[:, None] + n[None, :]) / 0.3).sum(axis=1)
    F = _dft_of_grid(kern)
    w0 = matern_spectral_weight(model, 0)
    for k in (1, 2, 3):
        got = matern_spectral_weight(model, k) / w0
        assert got == pytest.approx(F[k] / F[0], rel=1e-6)


@pytest.mark.parametrize("nu,d", [(0.5, 1), (1.5, 1), (2.5, 2)])
def test_matern_tail_slope(nu, d):
    model = CovarianceModel("matern", dim=d, nu=nu, rho=0.1)
    ks = np.geomspace(64, 512, 12).round()
    k = np.zeros((ks.size, d))
    k[:, 0] = ks
    w = matern_spectral_weight(model, k.astype(int))
    slope = np.polyfit(np.log(ks), np.log(w), 1)[0]
    assert slope == pytest.approx(-(2 * nu + d), abs=0.02)


@pytest.mark.parametrize("nu,rho,s2", [(0.5, 0.4, 1.0), (1.5, 0.2, 2.5), (2.5, 0.7, 0.3)])
def test_matern_series_at_zero_equals_sigma2(nu, rho, s2):
    mu = matern_measure(CovarianceModel("matern", nu=nu, rho=rho, sigma2=s2))
    K = 1 << 20
    k = np.arange(-K, K + 1)[:, None]
    partial = math.fsum(mu.weight_fn(k).tolist())
    tail = spectral_tail_bound(mu.tail_decay, 1, K)
    assert partial <= s2 * (1 + 1e-14)
    assert partial + tail >= s2 * (1 - 1e-14)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
def test_poisson_summation_half_integer(nu):
    # DFT of the periodized closed-form kernel equals the lattice weights
    model = CovarianceModel("matern", nu=nu, rho=0.2)
    M = 1 << 18
    cov, _ = periodized_matern_cov(np.arange(M) / M, model, tol=1e-14)
    F = _dft_of_grid(np.asarray(cov))
    k = np.arange(-32, 33)
    np.testing.assert_allclose(matern_spectral_weight(model, k[:, None]), F[k % M], rtol=1e-6)


def test_matern_tail_envelope_holds():
    mu = matern_measure(CovarianceModel("matern", dim=2, nu=0.8, rho=0.05))
    k = lattice_ball(60, 2)[1:]
    env = mu.tail_decay.C * np.sum(k.astype(float) ** 2, axis=1) ** (-mu.tail_decay.a)
    assert np.all(mu.weight_fn(k) <= env)


def test_matern_weight_rejects_other_family():
    with pytest.raises(FamilyMismatchError):
        matern_spectral_weight(CovarianceModel("canonical"), 1)


def test_kappa_form_uses_documented_bijection():
    m = CovarianceModel.from_kappa("matern", kappa=4.0, nu=2.0)
    assert m.rho == pytest.approx(0.5)
    assert m.kappa == pytest.approx(4.0)


@pytest.mark.parametrize("kw", [dict(nu=-1, rho=1), dict(nu=1, rho=0), dict(nu=1, rho=1, sigma2=0),
                                dict(nu=1, rho=1, dim=0)])
def test_model_rejects_invalid_parameters(kw):
    with pytest.raises(PreconditionError):
        CovarianceModel("matern", **kw)


# ---------------------------------------------------------------------------
# canonical, white-noise and canonical-Matérn weights
# ---------------------------------------------------------------------------

def test_canonical_weight_examples():
    assert canonical_weight([0]) == 0.0
    assert canonical_weight([1, 0]) == 1.0
    assert canonical_weight([3, 4]) == pytest.approx(1 / 25)


def test_white_noise_weight_examples():
    assert white_noise_weight(1, [5]) == pytest.approx(1 / TWO_PI)
    assert white_noise_weight(3, [0, 0, 0]) == pytest.approx(TWO_PI**-3)


def test_canonical_matern_examples():
    for conv in ("paper-text", "solve-consistent"):
        m = CovarianceModel("canonical-matern", nu=2.0, rho=2.0, cm_exponent_convention=conv)
        assert canonical_matern_weight(m, 0) == 0.0
    m = CovarianceModel.from_kappa("canonical-matern", kappa=1.0, nu=2.0)
    assert canonical_matern_weight(m, 1) == pytest.approx(0.5)


@pytest.mark.parametrize("d", [1, 2])
def test_solve_consistent_equals_spde_solution(d):
    nu, kappa = 1.7, 2.3
    m = CovarianceModel.from_kappa("canonical-matern", kappa=kappa, nu=nu, dim=d,
                                   cm_exponent_convention="solve-consistent")
    sol = solve_spde_measure(matern_symbol(nu, kappa, d), canonical_measure(d))
    k = lattice_ball(64, d)
    np.testing.assert_allclose(canonical_matern_weight(m, k), sol.measure.weight_fn(k),
                               rtol=4 * np.finfo(float).eps, atol=0)


# ---------------------------------------------------------------------------
# symbols, SPDE solving, slow growth
# ---------------------------------------------------------------------------

def test_identity_symbol_leaves_measure_unchanged():
    mu = matern_measure(CovarianceModel("matern", nu=1.5, rho=0.3))
    k = lattice_ball(64, 1)
    np.testing.assert_array_equal(apply_symbol_to_measure(identity_symbol(1), mu).weight_fn(k),
                                  mu.weight_fn(k))


@pytest.mark.parametrize("d", [1, 2])
def test_matern_symbol_on_white_noise(d):
    nu, kappa = 1.3, 0.7
    out = apply_symbol_to_measure(matern_symbol(nu, kappa, d), white_noise_measure(d))
    k = lattice_ball(20, d)
    expect = TWO_PI**-d * (kappa**2 + np.sum(k.astype(float) ** 2, axis=1)) ** nu
    np.testing.assert_allclose(out.weight_fn(k), expect, rtol=1e-14)
    assert np.all(out.weight_fn(k) >= 0)


def test_symbol_action_rejects_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        apply_symbol_to_measure(matern_symbol(1, 1, 2), white_noise_measure(1))


@pytest.mark.parametrize("d", [1, 2])
def test_spde_matern_white_noise_is_explicit_and_unique(d):
    nu, kappa = 2.0, 1.5
    sol = solve_spde_measure(matern_symbol(nu, kappa, d), white_noise_measure(d))
    assert isinstance(sol, SPDESolution) and sol.unique
    k = lattice_ball(64, d)
    expect = TWO_PI**-d / (kappa**2 + np.sum(k.astype(float) ** 2, axis=1)) ** nu
    np.testing.assert_allclose(sol.measure.weight_fn(k), expect, rtol=4 * np.finfo(float).eps)


def test_spde_symbol_with_zero_has_no_solution():
    sol = solve_spde_measure(norm_symbol(1), white_noise_measure(1))
    assert isinstance(sol, NoSolution) and not sol
    assert sol.k == (0,)


def test_spde_symbol_zero_where_forcing_vanishes_is_not_unique():
    sol = solve_spde_measure(norm_symbol(2), canonical_measure(2))
    assert isinstance(sol, SPDESolution)
    assert not sol.unique and sol.zero_set == ((0, 0),)
    assert sol.measure.weight([0, 0]) == 0.0


def test_spde_without_tail_record_is_uncertified():
    mu = SpectralMeasure(1, lambda k: np.ones(np.shape(k)[:-1]))
    sol = solve_spde_measure(matern_symbol(1, 1, 1), mu)
    assert isinstance(sol, NoSolution) and sol.k is None


@given(nu=st.floats(0.2, 4), kappa=st.floats(0.1, 10), d=st.integers(1, 2))
def test_operator_action_inverts_solve(nu, kappa, d):
    g = matern_symbol(nu, kappa, d)
    mu = matern_measure(CovarianceModel("matern", dim=d, nu=1.1, rho=0.2))
    back = apply_symbol_to_measure(g, solve_spde_measure(g, mu).measure)
    k = lattice_ball(64 if d == 1 else 20, d)
    np.testing.assert_allclose(back.weight_fn(k), mu.weight_fn(k),
                               rtol=4 * np.finfo(float).eps, atol=0)


def test_slow_growth_white_noise():
    assert slow_growth_certificate(white_noise_measure(1), 32) == 1


def _weighted_shell_sum(mu, N, R):
    k = lattice_ball(R, mu.dim)
    return float(np.sum(mu.weight_fn(k) / (1.0 + np.sum(k.astype(float) ** 2, axis=1)) ** N))


@pytest.mark.parametrize("d,expected", [(1, 0), (2, 1), (3, 1), (4, 2)])
def test_slow_growth_canonical(d, expected):
    mu = canonical_measure(d)
    N = slow_growth_certificate(mu, 8)
    assert N == expected
    # shell-sum oracle: the increment from R to 2R shrinks at N and not at N - 1
    if d <= 3:
        R = 24 if d < 3 else 12
        inc = lambda n, r: _weighted_shell_sum(mu, n, 2 * r) - _weighted_shell_sum(mu, n, r)
        assert inc(N, R) < 0.7 * inc(N, R // 2)
        if N > 0:
            assert inc(N - 1, R) > 0.9 * inc(N - 1, R // 2)


def test_slow_growth_unverified_without_tail():
    mu = SpectralMeasure(1, lambda k: np.ones(np.shape(k)[:-1]))
    assert slow_growth_certificate(mu, 16) is None


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

_MEASURES_1D = [
    matern_measure(CovarianceModel("matern", nu=0.7, rho=0.2)),
    canonical_measure(1),
    white_noise_measure(1),
    canonical_matern_measure(CovarianceModel("canonical-matern", nu=1.5, rho=0.5)),
]
_MEASURES_2D = [
    matern_measure(CovarianceModel("matern", dim=2, nu=2.5, rho=0.05)),
    canonical_measure(2),
    canonical_matern_measure(CovarianceModel("canonical-matern", dim=2, nu=1.5, rho=0.5,
                                             cm_exponent_convention="solve-consistent",
                                             angular_frequency_factor=True)),
]


@given(k=lattice_1d)
def test_evenness_1d(k):
    for mu in _MEASURES_1D:
        assert mu.weight(k) == mu.weight(-k)


@given(k=lattice_2d)
def test_evenness_2d(k):
    for mu in _MEASURES_2D:
        assert mu.weight(k) == mu.weight(-k)


@pytest.mark.parametrize("mu", _MEASURES_1D[:1] + _MEASURES_1D[3:] + _MEASURES_2D[:1]
                         + _MEASURES_2D[2:])
def test_monotone_tails_along_axes(mu):
    for axis in range(mu.dim):
        k = np.zeros((200, mu.dim), dtype=int)
        k[:, axis] = np.arange(1, 201)
        w = mu.weight_fn(k)
        assert np.all(np.diff(w) <= 0)
