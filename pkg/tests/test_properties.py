"""Randomized invariants checked with hypothesis."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rfbm import kernels
from rfbm.asymptotics import family
from rfbm.fbm import fbm_covariance
from rfbm.field import berman_gap, correlation

hurst = st.floats(0.05, 0.95)
pos = st.floats(1e-3, 1e3)
seeds = st.integers(0, 2 ** 32 - 1)


@given(pos, pos, hurst)
def test_covariance_symmetric_and_cauchy_schwarz(t, s, h):
    c = fbm_covariance(t, s, h)
    assert c == fbm_covariance(s, t, h)
    assert abs(c) <= math.sqrt(t ** (2 * h) * s ** (2 * h)) * (1 + 1e-12)


@given(st.floats(0.1, 10), st.floats(0, 50), st.floats(0.05, 20),
       st.floats(0.1, 10), st.floats(0, 50), st.floats(0.05, 20), hurst)
def test_correlation_bounded_and_symmetric(u, s, tau, u2, s2, tau2, h):
    r = float(correlation(u, s, tau, u2, s2, tau2, h))
    assert -1 - 1e-12 <= r <= 1 + 1e-12
    assert r == float(correlation(u2, s2, tau2, u, s, tau, h))


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_berman_bound_holds(seed, n):
    rng = np.random.default_rng(seed)

    def corr():
        g = rng.standard_normal((n, n + 2))
        c = g @ g.T
        d = np.sqrt(np.diag(c))
        c = c / np.outer(d, d)
        np.fill_diagonal(c, 1.0)
        return c

    lhs, rhs = berman_gap(corr(), corr(), rng.uniform(-1, 3, n))
    assert lhs <= rhs + 1e-8


@given(st.floats(-2, 3), st.sampled_from([0.3, 0.5, 0.7]))
def test_threshold_nondecreasing(p, h):
    fam = family(h, p)
    s = fam.s_min * 1.01 + 1.0 + np.logspace(0, 8, 50)
    f = fam.f(s)
    assert np.all(np.diff(f) >= -1e-12 * f[:-1])


@given(st.floats(0, 5), st.lists(st.floats(-3, 3), min_size=1, max_size=200))
def test_lindley_nonnegative(q0, steps):
    for k in kernels.available_backends().values():
        q = np.asarray(k.lindley(q0, np.asarray(steps)))
        assert np.all(q >= 0)
        assert q[0] == q0
        assert np.all(q[1:] >= q0 + np.cumsum(steps) - 1e-9)
