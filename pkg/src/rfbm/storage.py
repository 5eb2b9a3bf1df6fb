"""Storage (reflected) process driven by fBm with unit drift.

Two constructions on a uniform grid:

* reflected: the Lindley recursion Q[i+1] = max(Q[i] + dB - c dt, 0);
* stationary: Q(t) = max over s in [t-W, t] of B(t) - B(s) - c (t-s), the
  stationary representation truncated to a lag window W.

Suprema over intervals are maxima over grid points; crossings of a threshold
curve are detected at grid points only.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .asymptotics import derive_constants, limsup_constant, piterbarg_tail
from .errors import DomainError, InfeasibleLevel, WindowTooSmall
from .fbm import check_hurst, fbm_paths, fgn_from_normals, noise_size, write_columns_csv
from .mc import binomial_estimate, run_chunks
from .rng import as_generator

WINDOW_KAPPA = 8.0
BURN_IN_FACTOR = 5.0


@dataclass(frozen=True)
class QueuePath:
    hurst: float
    dt: float
    values: np.ndarray
    mode: str
    drift: float = 1.0
    t0: float = 0.0
    q0: float | None = None
    burn_in: float = 0.0
    window: float | None = None

    def __post_init__(self):
        if self.mode not in ("reflected", "truncated_sup"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if np.any(self.values < 0):
            raise DomainError("queue values must be nonnegative")
        if self.mode == "truncated_sup" and not (self.window and self.window > 0):
            raise DomainError("truncated_sup paths need a positive window")

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.values))

    def to_csv(self, path):
        write_columns_csv(path, ("t", "Q"), (self.times, self.values))


def default_window(max_level, h, kappa=WINDOW_KAPPA):
    """Lag window ``kappa * tau0 * max_level`` (at least kappa * tau0)."""
    tau0 = h / (1 - h)
    return kappa * tau0 * max(float(max_level), 1.0)


def _fgn(n_incr, h, gen):
    z = gen.standard_normal(noise_size(n_incr, h))
    return fgn_from_normals(z[None, :], n_incr, h)[0]


def simulate_reflected(q0, horizon, dt, h, seed, burn_in=0.0, drift=1.0, increments=None,
                       stream="queue/0"):
    """Lindley recursion with exact fGn increments.

    ``increments`` (a test hook) replaces the fBm increments dB over the
    full run, burn-in included. The returned path covers [0, horizon] after
    discarding ``burn_in``.
    """
    if q0 < 0:
        raise DomainError("q0 must be nonnegative")
    if dt <= 0 or horizon < dt:
        raise DomainError("need dt > 0 and horizon >= dt")
    n_burn = int(round(burn_in / dt))
    n = int(round(horizon / dt))
    total = n_burn + n
    if increments is None:
        h = check_hurst(h)
        db = _fgn(total, h, as_generator(seed, stream)) * dt ** h
    else:
        db = np.asarray(increments, dtype=float)
        if db.size != total:
            raise ValueError(f"expected {total} increments, got {db.size}")
    q = kernels.lindley(float(q0), np.ascontiguousarray(db - drift * dt))
    return QueuePath(h, float(dt), q[n_burn:], "reflected", drift, 0.0, float(q0), n_burn * dt)


def _drift_adjusted(b, dt, drift):
    return np.ascontiguousarray(b - drift * dt * np.arange(b.shape[1]))


def window_change_fraction(y, w):
    """Fraction of grid points whose value moves when the window doubles from w to 2w.

    ``y`` is the drift-adjusted path B(t) - c t covering 2w lag steps before
    the first output point. The fraction bounds the sup-norm change of every
    empirical tail probability.
    """
    q1 = kernels.window_sup(np.ascontiguousarray(y[:, w:]), w)
    q2 = kernels.window_sup(y, 2 * w)
    return float(np.mean(q2 > q1))


def simulate_stationary(horizon, dt, window, h, seed, t0=0.0, drift=1.0, check_window=True,
                        window_tol=0.01, stream="queue/0"):
    """Truncated-supremum stationary queue on ``t0 + i*dt``, ``0 <= i*dt <= horizon - t0``.

    With ``check_window`` the path is simulated with a doubled window as well;
    ``WindowTooSmall`` is raised if more than ``window_tol`` of the grid points
    change.
    """
    h = check_hurst(h)
    if dt <= 0 or window <= 0:
        raise DomainError("dt and window must be positive")
    span = horizon - t0
    if span < dt:
        raise DomainError("horizon must exceed t0 by at least dt")
    n = int(round(span / dt)) + 1
    w = int(math.ceil(window / dt))
    lead = 2 * w if check_window else w
    gen = as_generator(seed, stream)
    x = _fgn(n + lead - 1, h, gen)
    y = _drift_adjusted(kernels.kahan_cumsum(x[None, :]) * dt ** h, dt, drift)
    if check_window:
        frac = window_change_fraction(y, w)
        if frac > window_tol:
            raise WindowTooSmall(f"doubling the window changed {frac:.3%} of the path")
        y = np.ascontiguousarray(y[:, w:])
    q = kernels.window_sup(y, w)[0]
    return QueuePath(h, float(dt), q, "truncated_sup", drift, float(t0), None, 0.0, w * dt)


def stationary_sup_batch(interval_T, dt, window, h, seed, reps, stream, drift=1.0, chunk=256):
    """Grid maxima of the stationary queue over [0, interval_T], one per replication."""
    h = check_hurst(h)
    n = int(round(interval_T / dt)) + 1
    w = int(math.ceil(window / dt))

    def block(first, count):
        b = fbm_paths(n + w, dt, h, seed, count, stream=stream, first=first)
        return kernels.window_sup(_drift_adjusted(b, dt, drift), w).max(axis=1)

    return run_chunks(block, reps, chunk)


def sup_tail_probability(interval_T, level_u, dt, window, h, seed, reps, stream="tail",
                         check=True, pickands=1.0):
    """Monte Carlo P(max over the [0, interval_T] grid of stationary Q > level_u).

    ``InfeasibleLevel`` (with ``check``) when no replication exceeds and the
    leading-order tail predicts fewer than 0.1 expected hits.
    """
    if reps < 1:
        raise DomainError("reps must be positive")
    if interval_T <= 0:
        raise DomainError("interval must be positive")
    sups = stationary_sup_batch(interval_T, dt, window, h, seed, reps, stream)
    hits = int(np.sum(sups > level_u))
    if check and hits == 0 and level_u > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p_asym = piterbarg_tail(interval_T / level_u, level_u, derive_constants(h), pickands)
        if reps * p_asym < 0.1:
            raise InfeasibleLevel(
                f"no exceedances in {reps} reps; predicted tail {p_asym:.3g} is too small"
            )
    return binomial_estimate(hits, reps, seed, stream)


@dataclass(frozen=True)
class CrossingRecord:
    p: float
    times: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    lil_stat: np.ndarray
    log_ratio_stat: np.ndarray
    extra: dict = field(default_factory=dict)

    def to_csv(self, path):
        write_columns_csv(path, ("t", "xi", "lil_stat"), (self.times, self.xi, self.lil_stat))


def extract_crossings(qp, fam, h_mode="asymptotic"):
    """Last and next threshold crossings and the two LIL normalisations.

    xi[i] is the last grid time s <= t_i with Q(s) >= f_p(s), 0 if none;
    eta[i] the first grid time s >= t_i with a crossing, NaN if none in the
    path. The statistics are NaN until the first crossing.
    """
    t = qp.times
    if t[0] <= fam.s_min:
        raise DomainError(f"path starts at {t[0]:.6g}, below s_min={fam.s_min:.6g}")
    f = np.asarray(fam.f(t), dtype=float)
    last, nxt = kernels.crossings(np.ascontiguousarray(qp.values), np.ascontiguousarray(f))
    xi = np.where(last >= 0, t[np.maximum(last, 0)], 0.0)
    eta = np.where(nxt >= 0, t[np.maximum(nxt, 0)], np.nan)
    lil = np.full(t.shape, np.nan)
    logr = np.full(t.shape, np.nan)
    if fam.p > 0:
        ok = (last >= 0) & (t > math.e ** math.e)
        if np.any(ok):
            hp = np.asarray(fam.h_p(t[ok], mode=h_mode))
            lil[ok] = (xi[ok] - t[ok]) / hp
            logr[ok] = np.log(xi[ok] / t[ok]) / (hp / t[ok])
    return CrossingRecord(fam.p, t, xi, eta, lil, logr)


def _running(fn, x):
    out = np.array(x, dtype=float)
    finite = np.isfinite(out)
    if not np.any(finite):
        return out
    first = int(np.argmax(finite))
    out[first:] = fn.accumulate(np.where(finite[first:], out[first:],
                                         -np.inf if fn is np.maximum else np.inf))
    out[:first] = np.nan
    return out


def limsup_statistic(qp):
    """Q(t) / (log t)^(1/(2(1-H))) along the path (t must exceed 1)."""
    t = qp.times
    if t[0] <= 1:
        raise DomainError("limsup statistic needs t > 1")
    return qp.values / np.log(t) ** (1.0 / (2.0 * (1.0 - qp.hurst)))


def lil_experiment(fam, horizon, dt, h, seed, t_start=None, window=None, h_mode="asymptotic"):
    """Simulate a stationary path on [t_start, horizon] and track the LIL statistics.

    Returns ``(record, summary)``. ``t_start`` defaults to
    ``max(horizon / 1000, s_min, e^e) + dt``; running extremes start there.
    """
    h = check_hurst(h)
    if fam.p <= 0:
        raise DomainError("the LIL experiment needs p > 0")
    if math.log(math.log(horizon)) <= 1:
        raise DomainError("horizon too short: need log log horizon > 1")
    if t_start is None:
        t_start = max(horizon / 1000.0, fam.s_min, math.e ** math.e) + dt
    k = fam.constants
    if window is None:
        top = max(float(fam.f(horizon)), limsup_constant(k) * math.log(horizon)
                  ** (1.0 / (2.0 * (1.0 - h))))
        window = default_window(top, h)
    qp = simulate_stationary(horizon, dt, window, h, seed, t0=t_start, stream="lil/0")
    rec = extract_crossings(qp, fam, h_mode)
    stat = rec.lil_stat if fam.p > 1 else rec.log_ratio_stat
    running_min = _running(np.minimum, stat)
    cor = limsup_statistic(qp)
    running_max = np.maximum.accumulate(cor)
    crossings = int(np.count_nonzero(qp.values >= fam.f(qp.times)))
    finite = np.isfinite(running_min)
    summary = {
        "p": fam.p,
        "hurst": h,
        "dt": float(dt),
        "t_start": float(qp.times[0]),
        "horizon": float(qp.times[-1]),
        "window": qp.window,
        "statistic": "lil" if fam.p > 1 else "log_ratio",
        "running_min": float(running_min[finite][-1]) if np.any(finite) else math.nan,
        "limsup_running_max": float(running_max[-1]),
        "limsup_target": limsup_constant(k),
        "crossings": crossings,
        "xi_final": float(rec.xi[-1]),
    }
    rec.extra["running_min"] = running_min
    rec.extra["limsup_running_max"] = running_max
    return rec, summary
