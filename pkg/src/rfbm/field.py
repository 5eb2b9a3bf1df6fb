"""The rescaled increment field Z_u(s, tau) and related numerical checks.

Z_u(s, tau) = (B(u(s+tau)) - B(us)) / (tau^H u^H nu(tau)),
nu(tau) = tau^-H + tau^(1-H). Its law does not depend on u.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import integrate
from scipy.special import ndtr, owens_t

from . import storage
from .errors import DomainError, InfeasibleLevel, InvalidCorrelation, SearchBudgetExceeded
from .fbm import check_hurst, fbm_paths, write_columns_csv
from .mc import binomial_estimate, run_chunks


def nu(tau, h):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("tau must be positive")
    out = tau ** (-h) + tau ** (1 - h)
    return out if out.ndim else float(out)


def sigma_z(tau, h):
    """Standard deviation 1/nu(tau) of Z; maximal at tau0 = H/(1-H)."""
    out = 1.0 / np.asarray(nu(tau, h))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FieldPoint:
    s: float
    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise DomainError("tau must be positive")


@dataclass(frozen=True)
class CorrelationQuery:
    u: float
    u_prime: float
    p1: FieldPoint
    p2: FieldPoint

    def __post_init__(self):
        if self.u <= 0 or self.u_prime <= 0:
            raise DomainError("u and u' must be positive")


def increment_covariance(a, x, b, y, h):
    """Cov(B(a+x) - B(a), B(b+y) - B(b)), from four covariance terms."""
    two_h = 2.0 * h
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return 0.5 * (np.abs(d + x) ** two_h - np.abs(d + x - y) ** two_h
                  - np.abs(d) ** two_h + np.abs(d - y) ** two_h)


def _pow_m1(z, p):
    # |1 + z|^p - 1 without cancellation for small z
    out = np.empty_like(z)
    near = z > -0.5
    out[near] = np.expm1(p * np.log1p(z[near]))
    out[~near] = np.abs(1 + z[~near]) ** p - 1.0
    return out


def correlation(u, s, tau, u2, s2, tau2, h):
    """Vectorised r_{u,u'}(s, tau, s', tau').

    For lags d = us - u's' beyond both increment lengths the closed form in
    d is used (it keeps the small long-range values accurate); otherwise the
    four-term increment covariance. Both are summed so that swapping the two
    points gives a bitwise identical result.
    """
    u, s, tau, u2, s2, tau2 = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                                    for v in (u, s, tau, u2, s2, tau2)))
    x = u * tau
    y = u2 * tau2
    d = u * s - u2 * s2
    norm = (x * y) ** h
    two_h = 2.0 * h
    out = np.empty(d.shape)
    far = np.abs(d) > np.maximum(x, y)
    if np.any(far):
        dn, xn, yn = d[far], x[far], y[far]
        out[far] = (np.abs(dn) ** two_h / (2.0 * norm[far])) * (
            # (a + c) - b: the sum is unchanged when the two points are swapped
            (_pow_m1(xn / dn, two_h) + _pow_m1(-yn / dn, two_h)) - _pow_m1((xn - yn) / dn, two_h)
        )
    near = ~far
    if np.any(near):
        dn, xn, yn = d[near], x[near], y[near]
        out[near] = 0.5 * ((np.abs(dn + xn) ** two_h + np.abs(dn - yn) ** two_h)
                           - (np.abs(dn + (xn - yn)) ** two_h + np.abs(dn) ** two_h)) / norm[near]
    return out if out.ndim else float(out)


def field_correlation(q, h):
    return float(correlation(q.u, q.p1.s, q.p1.tau, q.u_prime, q.p2.s, q.p2.tau, h))


def correlation_decay_envelope(t, h, tau1, tau2, samples=10_000, seed=0, budget=100):
    """Largest |r| found by random search over lags >= t in both scalings.

    Search points: log-uniform scalings u, u' in [1/10, 10], uniform tau, tau'
    in (tau1, tau2), and a lag d = us - u's' drawn log-uniformly from
    [t max(u,u')/2, 4 t max(u,u')] with a random sign; proposals violating the
    constraint are rejected.
    """
    h = check_hurst(h)
    tau0 = h / (1 - h)
    if not 0 < tau1 < tau0 < tau2:
        raise DomainError("need 0 < tau1 < tau0 < tau2")
    if t <= 0:
        raise DomainError("t must be positive")
    rng = np.random.default_rng([int(seed), 0xE1])
    kept = []
    n_kept = 0
    drawn = 0
    while n_kept < samples:
        if drawn >= budget * samples:
            raise SearchBudgetExceeded(f"only {n_kept} admissible points after {drawn} proposals")
        m = samples
        drawn += m
        u = 10.0 ** rng.uniform(-1, 1, m)
        u2 = 10.0 ** rng.uniform(-1, 1, m)
        ta = rng.uniform(tau1, tau2, m)
        tb = rng.uniform(tau1, tau2, m)
        big = np.maximum(u, u2)
        d = t * big * np.exp(rng.uniform(math.log(0.5), math.log(4.0), m))
        d *= rng.choice([-1.0, 1.0], m)
        ok = (np.abs(d) / u >= t) & (np.abs(d) / u2 >= t)
        s2 = rng.uniform(0, 10, m) + np.maximum(0.0, -d) / u2 + 1.0
        s = (d + u2 * s2) / u
        ok &= s > 0
        if not np.any(ok):
            continue
        kept.append(np.abs(correlation(u[ok], s[ok], ta[ok], u2[ok], s2[ok], tb[ok], h)))
        n_kept += int(ok.sum())
    return float(np.concatenate(kept)[:samples].max())


def envelope_curve(ts, h, tau1, tau2, samples=10_000, seed=0):
    return np.array([correlation_decay_envelope(t, h, tau1, tau2, samples, seed) for t in ts])


def envelope_slope(ts, env):
    """Least-squares slope of log envelope against log t."""
    return float(np.polyfit(np.log(ts), np.log(env), 1)[0])


def write_envelope_csv(path, ts, env):
    write_columns_csv(path, ("t", "envelope"), (ts, env))


def _z_sup_exceeds(level_u, T, h, dt, window, seed, reps, stream):
    # Z_1 on the grid (dt/u) Z: starts s in [0, T/u], lags tau in (0, window/u]
    delta = dt / level_u
    n_s = int(round(T / dt))
    n_tau = int(math.ceil(window / dt))
    npts = n_s + n_tau + 1
    taus = delta * np.arange(1, n_tau + 1)
    weights = 1.0 / (taus ** h * nu(taus, h))
    thresh = level_u ** (1 - h)

    def block(first, count):
        b = fbm_paths(npts, delta, h, seed, count, stream=stream, first=first)
        best = np.full(count, -np.inf)
        for k in range(1, n_tau + 1):
            z = (b[:, k:k + n_s + 1] - b[:, :n_s + 1]) * weights[k - 1]
            np.maximum(best, z.max(axis=1), out=best)
        return best > thresh

    return run_chunks(block, reps, 256)


def transformation_check(level_u, T, h, dt=0.01, window=None, reps=4000, seed=0):
    """Independent estimates of both sides of the storage/field identity.

    Left: P(sup_{t in [0,T]} Q(t) > u) from the truncated-supremum queue.
    Right: P(sup Z(s, tau) > u^(1-H)) over starts s in [0, T/u], using
    self-similarity to simulate Z at scale 1 on the grid dt/u. Both sides
    use the same truncation of lags at ``window``.
    """
    h = check_hurst(h)
    if level_u <= 0 or T <= 0:
        raise DomainError("level and T must be positive")
    if window is None:
        window = storage.default_window(max(level_u, 1.0), h)
    left = storage.sup_tail_probability(T, level_u, dt, window, h, seed, reps,
                                        stream="transform/left", check=False)
    hits = _z_sup_exceeds(level_u, T, h, dt, window, seed, reps, "transform/right")
    right = binomial_estimate(int(hits.sum()), reps, seed, "transform/right")
    if left.value == 0 or right.value == 0:
        raise InfeasibleLevel("no exceedances on one side; lower the level or add reps")
    return left, right


# --- multivariate normal orthant probabilities (n <= 4) ---------------------

MAX_DIM = 4


def _validate_corr(c, n):
    c = np.asarray(c, dtype=float)
    if c.shape != (n, n):
        raise InvalidCorrelation(f"expected a {n}x{n} matrix")
    if not np.allclose(c, c.T, atol=1e-12) or not np.allclose(np.diag(c), 1.0, atol=1e-12):
        raise InvalidCorrelation("matrix must be symmetric with unit diagonal")
    if np.linalg.eigvalsh(c).min() < -1e-10:
        raise InvalidCorrelation("matrix is not positive semidefinite")
    return c


def bvn_cdf(h, k, rho):
    """P(X <= h, Y <= k) for a standard bivariate normal with correlation ``rho``.

    Closed form through Owen's T function.
    """
    if rho >= 1.0:
        return float(ndtr(min(h, k)))
    if rho <= -1.0:
        return float(max(0.0, ndtr(h) + ndtr(k) - 1.0))
    if h == 0.0 and k == 0.0:
        return 0.25 + math.asin(rho) / (2 * math.pi)
    root = math.sqrt((1.0 - rho) * (1.0 + rho))

    def slope(x, y):
        num = y - rho * x
        if x != 0.0:
            return num / (x * root)
        return math.copysign(math.inf, num) if num != 0.0 else 0.0

    beta = 0.5 if (h * k < 0 or (h * k == 0 and h + k < 0)) else 0.0
    val = (0.5 * ndtr(h) + 0.5 * ndtr(k) - owens_t(h, slope(h, k)) - owens_t(k, slope(k, h))
           - beta)
    return float(min(max(val, 0.0), 1.0))


def _conditional(upper, corr, x):
    # law of X[1:] given X[0] = x, standardized
    c = corr[1:, 0]
    cov = corr[1:, 1:] - np.outer(c, c)
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return upper[1:] - c * x, cov, sd


def _orthant(upper, corr, tol):
    n = upper.size
    if n == 1:
        return float(ndtr(upper[0]))
    if n == 2:
        return bvn_cdf(upper[0], upper[1], corr[0, 1])

    def integrand(x):
        shifted, cov, sd = _conditional(upper, corr, x)
        live = sd > 1e-12
        if np.any(shifted[~live] < 0):
            return 0.0  # a degenerate coordinate already exceeds its level
        if not np.any(live):
            return float(np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi))
        sub = cov[np.ix_(live, live)] / np.outer(sd[live], sd[live])
        np.fill_diagonal(sub, 1.0)
        inner = _orthant(shifted[live] / sd[live], np.clip(sub, -1.0, 1.0), tol)
        return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi) * inner

    val, _ = integrate.quad(integrand, -math.inf, upper[0], epsabs=tol, epsrel=1e-12, limit=200)
    return float(min(max(val, 0.0), 1.0))


def mvn_orthant(upper, corr, tol=1e-10):
    """P(X_j <= upper_j for all j) for a standard normal vector with correlation ``corr``.

    Sequential conditioning on the first coordinate, integrated adaptively,
    down to the bivariate closed form.
    """
    upper = np.asarray(upper, dtype=float)
    n = upper.size
    if not 1 <= n <= MAX_DIM:
        raise InvalidCorrelation(f"dimension must be between 1 and {MAX_DIM}")
    corr = _validate_corr(corr, n)
    return _orthant(upper, corr, tol)


def berman_bound(corr1, corr0, levels):
    """The explicit pairwise sum bounding the orthant-probability gap."""
    u = np.asarray(levels, dtype=float)
    total = 0.0
    for i, j in combinations(range(u.size), 2):
        diff = corr1[i, j] - corr0[i, j]
        if diff <= 0:
            continue
        rho = max(abs(corr1[i, j]), abs(corr0[i, j]))
        total += diff / math.sqrt(1 - rho * rho) * math.exp(-(u[i] ** 2 + u[j] ** 2) / (2 * (1 + rho)))
    return total / (2 * math.pi)


def berman_gap(corr1, corr0, levels):
    """(lhs, rhs): orthant-probability difference and its comparison bound."""
    u = np.asarray(levels, dtype=float)
    n = u.size
    if not 1 <= n <= MAX_DIM:
        raise InvalidCorrelation(f"dimension must be between 1 and {MAX_DIM}")
    c1 = _validate_corr(corr1, n)
    c0 = _validate_corr(corr0, n)
    off = ~np.eye(n, dtype=bool)
    if np.any(np.abs(c1[off]) >= 1) or np.any(np.abs(c0[off]) >= 1):
        raise InvalidCorrelation("off-diagonal correlations must lie in (-1, 1)")
    if np.array_equal(c1, c0):
        lhs = 0.0
    else:
        lhs = mvn_orthant(u, c1) - mvn_orthant(u, c0)
    return lhs, berman_bound(c1, c0, u)


def random_correlation(n, rng):
    """A random positive definite correlation matrix (normalised Gram matrix)."""
    g = rng.standard_normal((n, n + 2))
    c = g @ g.T
    d = np.sqrt(np.diag(c))
    c = c / np.outer(d, d)
    np.fill_diagonal(c, 1.0)
    return c


def berman_trials(dims, instances, seed=0, level_range=(-1.0, 3.0)):
    """Evaluate ``berman_gap`` on random instances; returns per-instance records.

    Dimensions cycle through ``dims``; correlation pairs and levels are drawn
    from a generator seeded by ``seed``.
    """
    rng = np.random.default_rng([seed, 0xBE])
    out = []
    for i in range(instances):
        n = dims[i % len(dims)]
        c1 = random_correlation(n, rng)
        c0 = random_correlation(n, rng)
        u = rng.uniform(*level_range, size=n)
        lhs, rhs = berman_gap(c1, c0, u)
        out.append({"n": n, "lhs": lhs, "rhs": rhs, "excess": lhs - rhs})
    return out
