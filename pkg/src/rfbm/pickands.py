"""Monte Carlo estimates of Pickands constants for fBm.

The drifted field is W(t) = sqrt(2) B_H(t) - |t|^(2H). Two estimators of the
grid constant on theta*Z are available:

``"ratio"`` (default)
    mean of max_t e^W(t) / (theta * sum_t e^W(t)) over a two-sided fBm on
    theta*Z in [-S, S]. Each sample lies in (0, 1/theta], so the variance is
    finite and the only bias is truncation at |t| = S.

``"truncated"``
    (1/S) * mean of exp(max over theta*Z in [0, S] of W). This is the limit
    definition taken at finite S. Its mean is carried by events of probability
    about e^(-S/2), so for moderate budgets it is heavily biased low; kept for
    comparison.
"""

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, ExtrapolationUnstable, OverflowGuard
from .fbm import check_hurst, fbm_paths
from .mc import run_chunks

EXP_LIMIT = 700.0
MIN_REPS = 1000
DEFAULT_THETAS = (0.4, 0.2, 0.1)


@dataclass(frozen=True)
class PickandsEstimate:
    hurst: float
    theta: float  # 0.0 marks an extrapolated value
    span: float
    reps: int
    value: float
    stderr: float
    method: str
    seed: int
    rejected: int = 0
    levels: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def default_span(h):
    return 64.0 if h >= 0.4 else 128.0


def _drifted_two_sided(h, theta, k_half, seed, count, stream, first):
    b = fbm_paths(2 * k_half + 1, theta, h, seed, count, stream=stream, first=first)
    b = b - b[:, k_half:k_half + 1]
    t = theta * (np.arange(2 * k_half + 1) - k_half)
    return math.sqrt(2.0) * b - np.abs(t) ** (2.0 * h)


def _ratio(w, theta):
    top = w.max(axis=1, keepdims=True)
    return 1.0 / (theta * np.exp(w - top).sum(axis=1))


def _check_args(h, theta, span, reps):
    h = check_hurst(h)
    if theta <= 0:
        raise DomainError("theta must be positive")
    if span < 10 * theta:
        raise DomainError("span must be at least 10 * theta")
    if reps < MIN_REPS:
        raise DomainError(f"reps must be at least {MIN_REPS}")
    return h


def estimate_pickands_theta(h, theta, span=None, reps=10_000, seed=0, method="ratio"):
    """Grid Pickands constant on theta*Z."""
    span = default_span(h) if span is None else float(span)
    h = _check_args(h, theta, span, reps)
    stream = f"pickands/{theta!r}"
    if method == "ratio":
        k_half = int(round(span / theta))

        def block(first, count):
            return _ratio(_drifted_two_sided(h, theta, k_half, seed, count, stream, first), theta)

        x = run_chunks(block, reps, 256)
        rejected = 0
    elif method == "truncated":
        n = int(math.floor(span / theta + 1e-9)) + 1
        t = theta * np.arange(n)

        def block(first, count):
            b = fbm_paths(n, theta, h, seed, count, stream=stream, first=first)
            return (math.sqrt(2.0) * b - t ** (2.0 * h)).max(axis=1)

        top = run_chunks(block, reps, 256)
        ok = top <= EXP_LIMIT
        rejected = int(np.count_nonzero(~ok))
        if not np.any(ok):
            raise OverflowGuard("every replication overflowed")
        x = np.exp(top[ok]) / span
    else:
        raise ValueError(f"unknown method {method!r}")
    value = float(np.mean(x))
    stderr = float(np.std(x, ddof=1) / math.sqrt(x.size))
    return PickandsEstimate(h, float(theta), span, int(x.size), value, stderr, method, int(seed),
                            rejected)


def _nested(thetas):
    base = min(thetas)
    strides = []
    for th in thetas:
        r = th / base
        if abs(r - round(r)) > 1e-9:
            return None
        strides.append(int(round(r)))
    return base, strides


def pickands_levels(h, thetas=DEFAULT_THETAS, span=None, reps=10_000, seed=0):
    """Ratio estimates at several theta from common paths.

    ``thetas`` must be integer multiples of the smallest one; every grid is
    then a sub-grid of the finest and all share the same replications.
    Returns the ``(reps, len(thetas))`` matrix of per-replication values.
    """
    span = default_span(h) if span is None else float(span)
    thetas = [float(t) for t in thetas]
    for th in thetas:
        _check_args(h, th, span, reps)
    nest = _nested(thetas)
    if nest is None:
        raise DomainError("thetas must be integer multiples of the smallest theta")
    base, strides = nest
    lcm = math.lcm(*strides)
    k_half = lcm * int(math.ceil(span / (base * lcm) - 1e-9))
    stream = f"pickands/{base!r}"

    def block(first, count):
        w = _drifted_two_sided(h, base, k_half, seed, count, stream, first)
        cols = []
        for th, st in zip(thetas, strides):
            sub = w[:, k_half % st::st] if st > 1 else w
            cols.append(_ratio(sub, th))
        return np.stack(cols, axis=1)

    return run_chunks(block, reps, 256)


def estimate_pickands(h, seed=0, reps=10_000, thetas=DEFAULT_THETAS, span=None):
    """theta -> 0 extrapolation of grid Pickands constants, linear in theta^H.

    The intercept's standard error is propagated per replication, so the
    correlation induced by the shared paths is accounted for.
    """
    h = check_hurst(h)
    thetas = tuple(float(t) for t in thetas)
    if len(thetas) < 3:
        raise DomainError("extrapolation needs at least three theta levels")
    span = default_span(h) if span is None else float(span)
    y = pickands_levels(h, thetas, span, reps, seed)
    x = np.array(thetas) ** h
    design = np.column_stack((np.ones_like(x), x))
    proj = np.linalg.pinv(design)  # rows: intercept and slope weights
    means = y.mean(axis=0)
    ses = y.std(axis=0, ddof=1) / math.sqrt(reps)
    coef = proj @ means
    per_rep_intercept = y @ proj[0]
    se0 = float(np.std(per_rep_intercept, ddof=1) / math.sqrt(reps))
    resid = means - design @ coef
    if np.max(np.abs(resid)) > 3.0 * np.max(ses):
        raise ExtrapolationUnstable(
            f"fit residual {np.max(np.abs(resid)):.3g} exceeds 3 se ({np.max(ses):.3g})"
        )
    levels = [{"theta": th, "value": float(m), "stderr": float(s)}
              for th, m, s in zip(thetas, means, ses)]
    return PickandsEstimate(h, 0.0, span, int(reps), float(coef[0]), se0, "extrapolated",
                            int(seed), 0, levels)


@lru_cache(maxsize=32)
def default_pickands(h):
    """Pickands constant used when the caller supplies none.

    Exact (1) for Brownian motion; otherwise a cached extrapolated estimate.
    """
    h = check_hurst(h)
    if h == 0.5:
        return 1.0
    return estimate_pickands(h, seed=0, reps=4000).value
