import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from helpers import dense_logpdf, loop_moments, random_spd
from rbsl.errors import DimensionError, NumericalError
from rbsl.synthetic_likelihood import (
    AdjustmentKind,
    AdjustmentVector,
    MomentEstimate,
    as_summary,
    estimate_moments,
    gaussian_logpdf,
    mean_adjust,
    try_cholesky,
    variance_inflate,
)

MEAN = AdjustmentKind.MEAN_SHIFT
VAR = AdjustmentKind.VARIANCE_INFLATION


def est(mu, sigma, m=10):
    return MomentEstimate.from_moments(np.asarray(mu, float), np.asarray(sigma, float), m)


# -- estimate_moments -------------------------------------------------------


def test_moments_two_points():
    e = estimate_moments([[0.0], [2.0]])
    assert e.mu.tolist() == [1.0]
    assert e.sigma.tolist() == [[1.0]]
    assert e.m == 2


def test_moments_identical_rows_have_no_factor():
    e = estimate_moments([[3, -1], [3, -1], [3, -1]])
    np.testing.assert_array_equal(e.mu, [3, -1])
    np.testing.assert_array_equal(e.sigma, np.zeros((2, 2)))
    assert e.chol is None and not e.is_pd


def test_moments_match_loop_oracle(rng):
    sims = rng.standard_normal((3, 2))
    e = estimate_moments(sims)
    mu, sigma = loop_moments(sims)
    np.testing.assert_allclose(e.mu, mu, rtol=0, atol=1e-14)
    np.testing.assert_allclose(e.sigma, sigma, rtol=0, atol=1e-14)


@pytest.mark.parametrize("bad", [[[1.0]], [1.0, 2.0], np.zeros((2, 2, 2))])
def test_moments_reject_bad_shapes(bad):
    with pytest.raises(DimensionError):
        estimate_moments(bad)


def test_moments_reject_ragged():
    with pytest.raises((DimensionError, ValueError)):
        estimate_moments([[1.0, 2.0], [1.0]])


@given(
    hnp.arrays(
        float,
        st.tuples(st.integers(2, 12), st.integers(1, 6)),
        elements=st.floats(-1e3, 1e3, allow_nan=False),
    )
)
def test_moments_symmetric_psd(sims):
    e = estimate_moments(sims)
    np.testing.assert_array_equal(e.sigma, e.sigma.T)
    tr = np.trace(e.sigma)
    assert np.linalg.eigvalsh(e.sigma).min() >= -1e-10 * max(tr, 1e-300) - 1e-12
    if e.chol is not None:
        err = np.linalg.norm(e.chol @ e.chol.T - e.sigma) / max(np.linalg.norm(e.sigma), 1e-300)
        assert err < 1e-8


def test_cholesky_jitter_rescues_singular_psd():
    s = np.ones((2, 2))  # rank one: plain factorization hits a zero pivot
    with pytest.raises(np.linalg.LinAlgError):
        np.linalg.cholesky(s)
    c = try_cholesky(s)
    assert c is not None
    np.testing.assert_allclose(c @ c.T, s, atol=1e-9)
    assert try_cholesky(np.zeros((2, 2))) is None
    assert try_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]])) is None  # indefinite


def test_summary_rejects_nonfinite():
    with pytest.raises(NumericalError):
        as_summary([1.0, math.nan])
    with pytest.raises(DimensionError):
        as_summary([1.0, 2.0], d=3)


# -- gaussian_logpdf --------------------------------------------------------


def test_logpdf_standard_normal_mode():
    assert gaussian_logpdf([0.0], [0.0], [[1.0]]) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert gaussian_logpdf([0.0], [0.0], [[1.0]]) == pytest.approx(-0.918939, abs=1e-6)


def test_logpdf_bivariate_identity():
    v = gaussian_logpdf([1.0, 2.0], [1.0, 2.0], np.eye(2))
    assert v == pytest.approx(-math.log(2 * math.pi), abs=1e-15)
    assert v == pytest.approx(-1.837877, abs=1e-6)


def test_logpdf_matches_dense_oracle_3d(rng):
    sigma = random_spd(rng, 3)
    x, mu = rng.standard_normal(3), rng.standard_normal(3)
    got = gaussian_logpdf(x, mu, np.linalg.cholesky(sigma))
    assert abs(got - dense_logpdf(x, mu, sigma)) < 1e-10


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_logpdf_oracle_property(d, seed):
    r = np.random.default_rng(seed)
    sigma = random_spd(r, d)
    x, mu = r.standard_normal(d), r.standard_normal(d)
    got = gaussian_logpdf(x, mu, np.linalg.cholesky(sigma))
    assert abs(got - dense_logpdf(x, mu, sigma)) < 1e-10


def test_logpdf_far_tail_stays_finite():
    # exp of this would underflow; the log-space computation must not
    v = gaussian_logpdf([1e4], [0.0], [[1.0]])
    assert v == pytest.approx(-0.5 * math.log(2 * math.pi) - 0.5e8)


def test_logpdf_dimension_mismatch():
    with pytest.raises(DimensionError):
        gaussian_logpdf([0.0, 0.0], [0.0], np.eye(2))
    with pytest.raises(DimensionError):
        gaussian_logpdf([0.0, 0.0], [0.0, 0.0], np.eye(3))


# -- adjustments ------------------------------------------------------------


def test_mean_adjust_examples():
    e = est([0, 0], np.diag([4.0, 9.0]))
    np.testing.assert_array_equal(mean_adjust(e, AdjustmentVector(np.array([0.5, -1.0]), MEAN)), [1, -3])
    e1 = est([1.0], [[1.0]])
    np.testing.assert_array_equal(mean_adjust(e1, AdjustmentVector(np.array([2.0]), MEAN)), [3])


def test_mean_adjust_zero_is_identity(rng):
    e = est(rng.standard_normal(4), random_spd(rng, 4))
    np.testing.assert_array_equal(mean_adjust(e, AdjustmentVector.zeros(4, MEAN)), e.mu)


def test_mean_adjust_negative_diagonal():
    e = MomentEstimate(mu=np.zeros(2), sigma=np.diag([1.0, -1.0]), chol=None, m=5)
    with pytest.raises(NumericalError):
        mean_adjust(e, AdjustmentVector(np.ones(2), MEAN))


def test_variance_inflate_examples():
    out = variance_inflate(est([0, 0], np.eye(2)), AdjustmentVector(np.array([1.0, 1.0]), VAR))
    np.testing.assert_array_equal(out.sigma, np.diag([2.0, 2.0]))
    out = variance_inflate(est([0, 0], [[4, 1], [1, 9]]), AdjustmentVector(np.array([0.5, 0.0]), VAR))
    np.testing.assert_array_equal(out.sigma, [[5, 1], [1, 9]])
    assert out.chol is not None


def test_variance_inflate_zero_is_identity(rng):
    e = est(rng.standard_normal(3), random_spd(rng, 3))
    out = variance_inflate(e, AdjustmentVector.zeros(3, VAR))
    np.testing.assert_array_equal(out.sigma, e.sigma)


def test_variance_vector_rejects_negative():
    with pytest.raises(ValueError):
        AdjustmentVector(np.array([0.1, -0.2]), VAR)
    AdjustmentVector(np.array([0.1, -0.2]), MEAN)  # unrestricted


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_variance_inflate_monotone_entries(d, seed):
    r = np.random.default_rng(seed)
    e = est(np.zeros(d), random_spd(r, d))
    g = np.abs(r.standard_normal(d)) * 3
    out = variance_inflate(e, AdjustmentVector(g, VAR))
    off = ~np.eye(d, dtype=bool)
    assert np.all(np.diag(out.sigma) >= np.diag(e.sigma))
    np.testing.assert_array_equal(out.sigma[off], e.sigma[off])


@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.integers(0, 4))
def test_inflation_monotone_far_out(d, seed, comp):
    r = np.random.default_rng(seed)
    diag = r.uniform(0.5, 3.0, d)
    e = est(np.zeros(d), np.diag(diag))
    x = 10.0 * np.sqrt(diag) * np.where(r.random(d) < 0.5, -1, 1)
    j = comp % d
    quads, dens = [], []
    for g in np.linspace(0.0, 9.0, 19):  # 1 + g^2 stays below the squared distance 100
        gam = np.zeros(d)
        gam[j] = g
        inflated = variance_inflate(e, AdjustmentVector(gam, VAR))
        z = np.linalg.solve(inflated.chol, x - e.mu)
        quads.append(z @ z)
        dens.append(gaussian_logpdf(x, e.mu, inflated.chol))
    assert all(b <= a + 1e-9 for a, b in zip(quads, quads[1:]))
    assert all(b >= a - 1e-9 for a, b in zip(dens, dens[1:]))
