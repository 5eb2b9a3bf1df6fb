import csv
import math

import numpy as np
import pytest
from scipy import stats

from rfbm import kernels
from rfbm.asymptotics import family
from rfbm.errors import DomainError, InfeasibleLevel, WindowTooSmall
from rfbm.storage import (QueuePath, default_window, extract_crossings, lil_experiment,
                          simulate_reflected, simulate_stationary, sup_tail_probability,
                          window_change_fraction)


def test_zero_noise_drain():
    qp = simulate_reflected(1.0, 3.0, 0.01, 0.5, 0, increments=np.zeros(300))
    np.testing.assert_allclose(qp.values, np.maximum(1 - qp.times, 0), atol=1e-12)


def test_single_lindley_step():
    for x in (0.3, 0.005, -1.0):
        qp = simulate_reflected(0.0, 0.01, 0.01, 0.5, 0, increments=[x])
        assert qp.values[-1] == pytest.approx(max(x - 0.01, 0.0), abs=1e-15)


def test_reflected_guards():
    with pytest.raises(DomainError):
        simulate_reflected(-1.0, 1.0, 0.1, 0.5, 0)
    with pytest.raises(DomainError):
        simulate_reflected(0.0, 0.01, 0.1, 0.5, 0)
    with pytest.raises(DomainError):
        QueuePath(0.5, 0.1, np.array([0.0, -1.0]), "reflected")
    with pytest.raises(DomainError):
        QueuePath(0.5, 0.1, np.array([0.0, 1.0]), "truncated_sup")


def test_reflected_burn_in_discarded():
    qp = simulate_reflected(0.0, 5.0, 0.01, 0.7, 3, burn_in=2.0)
    assert len(qp.values) == 501 and qp.burn_in == pytest.approx(2.0)
    assert np.all(qp.values >= 0)


def test_stationary_lower_bound_and_nonnegative():
    rng = np.random.default_rng(0)
    y = np.cumsum(rng.standard_normal((1, 400)) * 0.1 - 0.01, axis=1)
    w = 25
    q = kernels.window_sup(y, w)[0]
    assert np.all(q >= 0)
    n = q.size
    # the one-step lag s = t - dt is always admissible
    assert np.all(q >= y[0, w:w + n] - y[0, w - 1:w - 1 + n])


def test_stationary_deterministic_and_metadata(tmp_path):
    a = simulate_stationary(50.0, 0.05, 8.0, 0.5, 11)
    b = simulate_stationary(50.0, 0.05, 8.0, 0.5, 11)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.mode == "truncated_sup" and a.window == pytest.approx(8.0)
    assert np.all(a.values >= 0)
    a.to_csv(tmp_path / "q.csv")
    rows = list(csv.reader(open(tmp_path / "q.csv")))
    assert rows[0] == ["t", "Q"] and len(rows) == len(a.values) + 1


def test_window_too_small():
    with pytest.raises(WindowTooSmall):
        simulate_stationary(200.0, 0.01, 0.2, 0.5, 0)


def test_window_doubling_bounds_tail_change():
    # the fraction of moved points bounds the change of every empirical tail
    rng = np.random.default_rng(5)
    dt, w = 0.01, 800
    y = np.cumsum(rng.standard_normal((1, 60_000)) * math.sqrt(dt) - dt, axis=1)
    frac = window_change_fraction(y, w)
    q1 = kernels.window_sup(np.ascontiguousarray(y[:, w:]), w)[0]
    q2 = kernels.window_sup(y, 2 * w)[0]
    for u in (0.5, 1.0, 1.5, 2.0):
        assert abs(np.mean(q1 > u) - np.mean(q2 > u)) <= frac
    assert frac < 0.01


def test_stationary_matches_reflected_marginal():
    h, dt, w = 0.5, 0.02, default_window(1.0, 0.5)
    reps = 1500
    refl = [simulate_reflected(0.0, dt, dt, h, 0, burn_in=5 * w, stream=f"r/{i}").values[-1]
            for i in range(reps)]
    stat = [simulate_stationary(dt, dt, w, h, 0, check_window=False, stream=f"s/{i}").values[0]
            for i in range(reps)]
    assert stats.ks_2samp(refl, stat).pvalue > 0.01


def test_stationary_halves_agree():
    qp = simulate_stationary(20_000.0, 0.05, 8.0, 0.5, 2)
    half = len(qp.values) // 2
    # thin to roughly independent samples (relaxation time ~ 1)
    a, b = qp.values[:half:100], qp.values[half::100]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_sup_tail_level_zero():
    est = sup_tail_probability(1.0, 0.0, 0.05, 4.0, 0.5, 0, 100)
    assert est.value == 1.0 and est.stderr == 0.0
    assert set(est.summary()) == {"estimate", "stderr", "ci_low", "ci_high", "reps", "seed"}


def test_sup_tail_monotone_in_level():
    vals = [sup_tail_probability(1.0, u, 0.01, 24.0, 0.5, 3, 2000).value for u in (1, 2, 3)]
    assert vals[0] >= vals[1] >= vals[2]


def test_sup_tail_grid_refinement():
    coarse = sup_tail_probability(1.0, 2.0, 0.01, 16.0, 0.5, 0, 4000, stream="coarse")
    fine = sup_tail_probability(1.0, 2.0, 0.0025, 16.0, 0.5, 1, 4000, stream="fine")
    assert abs(fine.value - coarse.value) <= 3 * math.hypot(fine.stderr, coarse.stderr)


def test_sup_tail_infeasible():
    with pytest.raises(InfeasibleLevel):
        sup_tail_probability(1.0, 12.0, 0.05, 96.0, 0.5, 0, 100)


def make_path(values, t0=20.0):
    return QueuePath(0.5, 1.0, np.asarray(values, dtype=float), "truncated_sup", window=1.0, t0=t0)


def test_crossings_always_above():
    fam = family(0.5, 2.0)
    qp = make_path(np.full(50, 100.0))
    rec = extract_crossings(qp, fam)
    np.testing.assert_array_equal(rec.xi, qp.times)
    np.testing.assert_array_equal(rec.lil_stat, 0.0)
    np.testing.assert_array_equal(rec.eta, qp.times)


def test_crossings_always_below():
    rec = extract_crossings(make_path(np.zeros(50)), family(0.5, 2.0))
    np.testing.assert_array_equal(rec.xi, 0.0)
    assert np.all(np.isnan(rec.eta)) and np.all(np.isnan(rec.lil_stat))


def test_crossings_brute_force_and_duality():
    fam = family(0.5, 1.5)
    rng = np.random.default_rng(8)
    qp = make_path(rng.exponential(1.0, 400))
    rec = extract_crossings(qp, fam)
    t = qp.times
    hit = qp.values >= fam.f(t)
    for i in range(t.size):
        before = np.flatnonzero(hit[: i + 1])
        after = np.flatnonzero(hit[i:])
        assert rec.xi[i] == (t[before[-1]] if before.size else 0.0)
        if after.size:
            assert rec.eta[i] == t[i + after[0]]
        else:
            assert np.isnan(rec.eta[i])
    assert np.all(np.diff(rec.xi) >= 0) and np.all(rec.xi <= t)
    lookup = dict(zip(t, rec.eta))
    for i in np.flatnonzero(rec.xi > 0):
        assert lookup[rec.xi[i]] <= t[i]
    # {xi(t) >= t - x} computed forward equals {eta(t - x) <= t} computed backward
    for lag in (0, 3, 17):
        fwd = rec.xi[lag:] >= t[lag:] - lag
        bwd = rec.eta[:t.size - lag] <= t[lag:]
        np.testing.assert_array_equal(fwd, bwd)


def test_crossings_start_guard():
    fam = family(0.5, 3.0)
    with pytest.raises(DomainError):
        extract_crossings(make_path(np.zeros(5), t0=fam.s_min / 2), fam)


def test_crossing_csv(tmp_path):
    rec = extract_crossings(make_path(np.full(5, 100.0)), family(0.5, 2.0))
    rec.to_csv(tmp_path / "c.csv")
    assert open(tmp_path / "c.csv").readline().strip() == "t,xi,lil_stat"


def test_lil_experiment_structure():
    fam = family(0.5, 2.0)
    rec, summary = lil_experiment(fam, 2e4, 1.0, 0.5, 4)
    again = lil_experiment(fam, 2e4, 1.0, 0.5, 4)[0]
    np.testing.assert_array_equal(rec.lil_stat, again.lil_stat)
    assert np.all(np.diff(rec.xi) >= 0) and np.all(rec.xi <= rec.times)
    fin = rec.lil_stat[np.isfinite(rec.lil_stat)]
    assert fin.size and np.all(fin <= 0)
    assert summary["statistic"] == "lil" and summary["limsup_target"] == 0.5
    assert math.isfinite(summary["limsup_running_max"])
    _, s2 = lil_experiment(family(0.5, 0.5), 2e4, 1.0, 0.5, 4)
    assert s2["statistic"] == "log_ratio"
    with pytest.raises(DomainError):
        lil_experiment(family(0.5, 0.0), 2e4, 1.0, 0.5, 4)
    with pytest.raises(DomainError):
        lil_experiment(fam, 10.0, 1.0, 0.5, 4)
