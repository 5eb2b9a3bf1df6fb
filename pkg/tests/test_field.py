import math

import mpmath
import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from rfbm.asymptotics import derive_constants
from rfbm.errors import DomainError, InvalidCorrelation, SearchBudgetExceeded
from rfbm.fbm import fbm_covariance
from rfbm.field import (CorrelationQuery, FieldPoint, berman_bound, berman_gap, berman_trials,
                        bvn_cdf, correlation, correlation_decay_envelope, envelope_curve,
                        envelope_slope, field_correlation, mvn_orthant, nu, random_correlation,
                        sigma_z, transformation_check, write_envelope_csv)


def bvn_dblquad(h, k, rho):
    dens = lambda y, x: math.exp(-(x * x - 2 * rho * x * y + y * y) / (2 * (1 - rho * rho))) / (
        2 * math.pi * math.sqrt(1 - rho * rho))
    return integrate.dblquad(dens, -12, h, -12, k, epsabs=1e-13, epsrel=1e-13)[0]


def corr_from_covariance(u, s, tau, u2, s2, tau2, h):
    # four covariance evaluations, no closed-form algebra
    a, b = u * s, u * (s + tau)
    c, d = u2 * s2, u2 * (s2 + tau2)
    cov = fbm_covariance(b, d, h) - fbm_covariance(b, c, h) - fbm_covariance(a, d, h) + fbm_covariance(a, c, h)
    return cov / ((u * tau) ** h * (u2 * tau2) ** h)


def test_nu_examples():
    assert nu(1.0, 0.5) == 2.0
    assert nu(4.0, 0.5) == 2.5
    for h in (0.2, 0.5, 0.8):
        assert nu(h / (1 - h), h) == pytest.approx(derive_constants(h).A, rel=1e-14)
    with pytest.raises(DomainError):
        nu(0.0, 0.5)
    with pytest.raises(DomainError):
        sigma_z(-1.0, 0.5)


@pytest.mark.parametrize("h", [0.2, 0.5, 0.8])
def test_sigma_unique_maximum(h):
    tau0 = h / (1 - h)
    grid = np.linspace(tau0 / 20, 5 * tau0, 200_001)
    assert abs(grid[np.argmax(sigma_z(grid, h))] - tau0) <= grid[1] - grid[0]
    # unique minimum of nu: strictly decreasing then strictly increasing
    coarse = np.linspace(tau0 / 20, 5 * tau0, 2001)
    step = np.diff(nu(coarse, h))
    assert np.all(step[coarse[1:] <= tau0] < 0) and np.all(step[coarse[:-1] >= tau0] > 0)
    # convex up to the inflection point (1 + H) / (1 - H), concave beyond it
    infl = (1 + h) / (1 - h)
    left = np.linspace(tau0 / 20, 0.99 * infl, 2001)
    assert np.all(np.diff(nu(left, h), 2) > 0)
    right = np.linspace(1.01 * infl, 3 * infl, 201)
    assert np.all(np.diff(nu(right, h), 2) < 0)
    assert sigma_z(tau0, h) == pytest.approx(1 / derive_constants(h).A, rel=1e-14)


@pytest.mark.parametrize("h", [0.3, 0.5, 0.7])
def test_sigma_taylor_residual(h):
    k = derive_constants(h)
    quad = lambda t: 1 / k.A - k.B / (2 * k.A ** 2) * (t - k.tau0) ** 2
    coarse = k.tau0 + np.linspace(-0.1, 0.1, 41)
    coarse = coarse[coarse != k.tau0]
    c = np.max(np.abs(sigma_z(coarse, h) - quad(coarse)) / np.abs(coarse - k.tau0) ** 3)
    fine = k.tau0 + np.linspace(-0.1, 0.1, 4001)
    resid = np.abs(sigma_z(fine, h) - quad(fine))
    assert np.all(resid <= 1.5 * c * np.abs(fine - k.tau0) ** 3 + 1e-15)


def test_correlation_examples():
    # disjoint Brownian increments
    assert correlation(1.0, 0.0, 1.0, 1.0, 2.0, 1.0, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert correlation(2.0, 1.0, 0.3, 0.5, 9.0, 0.4, 0.5) == pytest.approx(0.0, abs=1e-15)
    q = CorrelationQuery(1.3, 1.3, FieldPoint(0.4, 0.9), FieldPoint(0.4, 0.9))
    assert field_correlation(q, 0.7) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        FieldPoint(0.0, 0.0)
    with pytest.raises(DomainError):
        CorrelationQuery(0.0, 1.0, FieldPoint(0, 1), FieldPoint(0, 1))


def test_correlation_against_covariance_form():
    rng = np.random.default_rng(0)
    n = 2000
    args = (10 ** rng.uniform(-1, 1, n), rng.uniform(0, 5, n), rng.uniform(0.1, 3, n),
            10 ** rng.uniform(-1, 1, n), rng.uniform(0, 5, n), rng.uniform(0.1, 3, n))
    for h in (0.2, 0.5, 0.8):
        np.testing.assert_allclose(correlation(*args, h), corr_from_covariance(*args, h),
                                   atol=1e-10)


def test_correlation_singular_point_is_continuous():
    # us = u's' exactly, and nearby
    at = correlation(2.0, 1.5, 0.7, 3.0, 1.0, 0.9, 0.35)
    near = correlation(2.0, 1.5 + 1e-9, 0.7, 3.0, 1.0, 0.9, 0.35)
    assert at == pytest.approx(near, abs=1e-6)
    assert at == pytest.approx(corr_from_covariance(2.0, 1.5, 0.7, 3.0, 1.0, 0.9, 0.35), abs=1e-14)


def test_correlation_bounds_and_symmetry():
    rng = np.random.default_rng(1)
    n = 100_000
    u, u2 = 10 ** rng.uniform(-2, 2, (2, n))
    s, s2 = rng.uniform(0, 10, (2, n))
    t, t2 = rng.uniform(1e-3, 5, (2, n))
    for h in (0.1, 0.5, 0.9):
        r = correlation(u, s, t, u2, s2, t2, h)
        assert np.all(np.abs(r) <= 1 + 1e-12)
        np.testing.assert_array_equal(r, correlation(u2, s2, t2, u, s, t, h))


@pytest.mark.parametrize("h", [0.3, 0.5, 0.7])
def test_correlation_band_interior(h):
    # lags in (0, tau0/2], tau within m of tau0, u = u' = 1
    tau0 = h / (1 - h)
    m = 0.1 * tau0
    rng = np.random.default_rng(2)
    n = 10_000
    s = rng.uniform(0, 5, n)
    s2 = s + rng.choice([-1, 1], n) * rng.uniform(1e-6, tau0 / 2, n)
    s2 = np.abs(s2)
    t, t2 = rng.uniform(tau0 - m, tau0 + m, (2, n))
    r = correlation(1.0, s, t, 1.0, s2, t2, h)
    keep = s != s2
    assert r[keep].min() > 0 and r[keep].max() < 1


def test_envelope_slope_h07(tmp_path):
    ts = np.array([10.0, 100.0, 1e3, 1e4])
    env = envelope_curve(ts, 0.7, 1.0, 4.0)
    assert abs(envelope_slope(ts, env) + 0.6) <= 0.1
    assert np.all(env[1:] <= 1.1 * env[:-1])
    write_envelope_csv(tmp_path / "e.csv", ts, env)
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "t,envelope"


def test_envelope_vanishes_for_brownian_motion():
    for t in (10.0, 100.0, 1e3, 1e4):
        assert correlation_decay_envelope(t, 0.5, 0.5, 2.0) < 1e-13


def test_envelope_guards():
    with pytest.raises(DomainError):
        correlation_decay_envelope(10.0, 0.5, 1.5, 2.0)
    with pytest.raises(SearchBudgetExceeded):
        correlation_decay_envelope(10.0, 0.5, 0.5, 2.0, samples=10, budget=0)


def test_transformation_identity():
    left, right = transformation_check(1.0, 1.0, 0.5, reps=4000, seed=0)
    assert abs(left.value - right.value) <= 3 * (left.stderr + right.stderr)
    again = transformation_check(1.0, 1.0, 0.5, reps=4000, seed=0)
    assert again[0] == left and again[1] == right


def test_transformation_small_level():
    left, right = transformation_check(1e-3, 1.0, 0.5, window=8.0, reps=500, seed=1)
    assert left.value > 0.99 and right.value > 0.99


def test_bvn_closed_form():
    for h, k, rho in [(0.0, 1.0, 0.3), (1.0, 0.0, -0.4), (0.0, -1.0, 0.5), (0.0, 0.0, 0.3),
                      (2.0, -1.0, 0.9), (-1.0, -1.0, -0.7), (0.4, 1.1, 0.0)]:
        assert bvn_cdf(h, k, rho) == pytest.approx(bvn_dblquad(h, k, rho), abs=1e-12)
    assert bvn_cdf(0.3, 0.5, 1.0) == pytest.approx(norm.cdf(0.3))
    assert bvn_cdf(0.3, 0.5, -1.0) == pytest.approx(norm.cdf(0.3) + norm.cdf(0.5) - 1)


def test_orthant_three_dim_oracles():
    u = np.array([0.3, -0.2, 1.1])
    assert mvn_orthant(u, np.eye(3)) == pytest.approx(np.prod(norm.cdf(u)), abs=1e-12)
    rho = 0.6
    c = np.full((3, 3), rho)
    np.fill_diagonal(c, 1.0)
    # equicorrelated: one-factor representation
    f = lambda z: mpmath.npdf(z) * mpmath.fprod(
        mpmath.ncdf((ui - mpmath.sqrt(rho) * z) / mpmath.sqrt(1 - rho)) for ui in u)
    ref = float(mpmath.quad(f, [-mpmath.inf, 0, mpmath.inf]))
    assert mvn_orthant(u, c) == pytest.approx(ref, abs=1e-10)


def test_orthant_four_dim_factor_model():
    rng = np.random.default_rng(3)
    lam = rng.uniform(-0.8, 0.8, 4)
    c = np.outer(lam, lam)
    np.fill_diagonal(c, 1.0)
    u = rng.uniform(-1, 2, 4)
    sd = np.sqrt(1 - lam ** 2)
    f = lambda z: mpmath.npdf(z) * mpmath.fprod(
        mpmath.ncdf((ui - li * z) / si) for ui, li, si in zip(u, lam, sd))
    ref = float(mpmath.quad(f, [-mpmath.inf, 0, mpmath.inf]))
    assert mvn_orthant(u, c) == pytest.approx(ref, abs=1e-9)


def test_berman_examples():
    c1 = np.array([[1.0, 0.5], [0.5, 1.0]])
    c0 = np.eye(2)
    lhs, rhs = berman_gap(c1, c1, [1.0, 1.0])
    assert lhs == 0.0 and rhs == 0.0
    lhs, rhs = berman_gap(c1, c0, [1.0, 1.0])
    expect = bvn_dblquad(1.0, 1.0, 0.5) - norm.cdf(1.0) ** 2
    assert lhs == pytest.approx(expect, abs=1e-12)
    assert lhs <= rhs + 1e-6
    # reversed ordering: positive part vanishes, gap is negative
    lhs, rhs = berman_gap(c0, c1, [1.0, 1.0])
    assert rhs == 0.0
    assert lhs <= 1e-6


def test_berman_bound_formula():
    c1 = np.array([[1.0, 0.3], [0.3, 1.0]])
    c0 = np.array([[1.0, -0.2], [-0.2, 1.0]])
    u = [0.5, 1.5]
    rho = 0.3
    expect = 0.5 / (2 * math.pi * math.sqrt(1 - rho ** 2)) * math.exp(-(0.25 + 2.25) / (2 * (1 + rho)))
    assert berman_bound(c1, c0, u) == pytest.approx(expect, rel=1e-14)


def test_berman_invalid_inputs():
    good = np.eye(2)
    with pytest.raises(InvalidCorrelation):
        berman_gap(np.array([[1.0, 1.2], [1.2, 1.0]]), good, [0, 0])
    with pytest.raises(InvalidCorrelation):
        berman_gap(np.array([[2.0, 0.0], [0.0, 1.0]]), good, [0, 0])
    with pytest.raises(InvalidCorrelation):
        berman_gap(np.eye(5), np.eye(5), np.zeros(5))
    with pytest.raises(InvalidCorrelation):
        berman_gap(np.ones((2, 2)), good, [0, 0])


def test_berman_random_instances():
    recs = berman_trials([2, 3], 200, seed=7)
    assert max(r["excess"] for r in recs) <= 1e-6
    rng = np.random.default_rng(0)
    c = random_correlation(3, rng)
    assert np.allclose(np.diag(c), 1) and np.linalg.eigvalsh(c).min() > 0
