"""Exact fractional Brownian motion on uniform grids.

Two samplers share one RNG contract (an integer seed or a Generator):

* ``sample_fbm_circulant``: Davies-Harte circulant embedding of the unit-lag
  fGn autocovariance, O(n log n).
* ``sample_fbm_dense_oracle``: Cholesky factor of the full covariance, O(n^3),
  kept as a slow reference.

Increments are simulated first at unit spacing and prefix-summed with
compensated summation, then scaled by ``dt**H``. Because the noise does not
depend on ``dt``, a path with step ``c*dt`` is ``c**H`` times the path with
step ``dt`` for the same seed.
"""

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from . import kernels
from .errors import DomainError, EmbeddingNotNonnegative, FactorizationFailure, SizeTooLarge
from .mc import run_chunks
from .rng import as_generator, substream

H_MIN, H_MAX = 0.01, 0.99
EIG_RTOL = 1e-9
DENSE_MAX_N = 2048


def check_hurst(h):
    h = float(h)
    if not H_MIN <= h <= H_MAX:
        raise DomainError(f"Hurst parameter {h} outside [{H_MIN}, {H_MAX}]")
    return h


@dataclass(frozen=True)
class FbmPath:
    hurst: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) < 2:
            raise DomainError("a path needs at least two grid points")
        if self.values[0] != 0.0:
            raise DomainError("fBm paths start at 0")

    @property
    def horizon(self):
        return self.dt * (len(self.values) - 1)

    @property
    def times(self):
        return self.dt * np.arange(len(self.values))

    def to_csv(self, path):
        write_columns_csv(path, ("t", "value"), (self.times, self.values))


def write_columns_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([format(float(x), ".17g") for x in row])


def fbm_covariance(t, s, h):
    """Cov(B_H(t), B_H(s)) = (|t|^2H + |s|^2H - |t-s|^2H) / 2."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    two_h = 2.0 * h
    out = 0.5 * (np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h)
    return out if out.ndim else float(out)


def fgn_autocovariance(k, h):
    """Lag-k autocovariance of unit-spaced fGn."""
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * h
    out = 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k ** two_h + np.abs(k - 1) ** two_h)
    return out if out.ndim else float(out)


@lru_cache(maxsize=64)
def _embedding(n_incr, h):
    m = sfft.next_fast_len(max(int(n_incr), 1), real=True)
    gamma = fgn_autocovariance(np.arange(m + 1), h)
    row = np.concatenate((gamma, gamma[-2:0:-1]))
    lam = sfft.rfft(row).real
    top = lam.max()
    if lam.min() < -EIG_RTOL * top:
        raise EmbeddingNotNonnegative(
            f"circulant eigenvalue {lam.min():.3e} below tolerance (H={h}, m={m})"
        )
    lam = np.clip(lam, 0.0, None)
    lam.setflags(write=False)
    return m, lam


def circulant_eigenvalues(n_incr, h):
    """Eigenvalues (length m+1) of the 2m-circulant embedding of the fGn autocovariance."""
    return _embedding(int(n_incr), check_hurst(h))[1]


def noise_size(n_incr, h):
    """Number of standard normals consumed per path of ``n_incr`` increments."""
    m, _ = _embedding(int(n_incr), check_hurst(h))
    return 2 * m


def fgn_from_normals(z, n_incr, h):
    """Map rows of ``2m`` standard normals to exact unit-spaced fGn rows.

    Row layout: ``[Z_0, Z_m, U_1..U_{m-1}, V_1..V_{m-1}]``.
    """
    m, lam = _embedding(int(n_incr), h)
    z = np.atleast_2d(z)
    if z.shape[1] != 2 * m:
        raise ValueError(f"expected {2 * m} normals per row, got {z.shape[1]}")
    w = np.empty((z.shape[0], m + 1), dtype=complex)
    w[:, 0] = math.sqrt(lam[0] / (2 * m)) * z[:, 0]
    w[:, m] = math.sqrt(lam[m] / (2 * m)) * z[:, 1]
    scale = np.sqrt(lam[1:m] / (4 * m))
    w[:, 1:m] = scale * (z[:, 2:m + 1] + 1j * z[:, m + 1:])
    x = sfft.irfft(w, n=2 * m, axis=1) * (2 * m)
    return x[:, :n_incr]


def sample_fgn(n_incr, h, seed, stream="fbm/0"):
    """One exact unit-spaced fGn sequence of length ``n_incr``."""
    h = check_hurst(h)
    gen = as_generator(seed, stream)
    z = gen.standard_normal(noise_size(n_incr, h))
    return fgn_from_normals(z[None, :], n_incr, h)[0]


def _path_from_fgn(x, dt, h):
    return kernels.kahan_cumsum(np.ascontiguousarray(x)) * dt ** h


def sample_fbm_circulant(n, dt, h, seed, stream="fbm/0"):
    """fBm at ``i*dt``, ``i = 0..n-1``, by circulant embedding."""
    h = check_hurst(h)
    if n < 2:
        raise DomainError("n must be at least 2")
    if dt <= 0:
        raise DomainError("dt must be positive")
    x = sample_fgn(n - 1, h, seed, stream)
    return FbmPath(h, float(dt), _path_from_fgn(x[None, :], dt, h)[0])


def fbm_paths(n, dt, h, seed, reps, stream="fbm", first=0, chunk=512):
    """``reps`` independent circulant paths as a ``(reps, n)`` array.

    Row ``r`` uses substream ``f"{stream}/{first + r}"``, so any row equals
    ``sample_fbm_circulant(..., stream=f"{stream}/{first + r}")``.
    """
    h = check_hurst(h)
    size = noise_size(n - 1, h)

    def block(a, count):
        z = np.empty((count, size))
        for i in range(count):
            z[i] = substream(seed, f"{stream}/{first + a + i}").standard_normal(size)
        return _path_from_fgn(fgn_from_normals(z, n - 1, h), dt, h)

    return run_chunks(block, reps, chunk)


def fbm_covariance_matrix(n, dt, h):
    """Covariance of ``(B(dt), ..., B((n-1) dt))``; B(0) = 0 is omitted."""
    t = dt * np.arange(1, n)
    return fbm_covariance(t[:, None], t[None, :], h)


def sample_fbm_dense_oracle(n, dt, h, seed, stream="fbm/0"):
    """Reference sampler through a Cholesky factor of the full covariance."""
    h = check_hurst(h)
    if n > DENSE_MAX_N:
        raise SizeTooLarge(f"dense oracle limited to n <= {DENSE_MAX_N}")
    if n < 2:
        raise DomainError("n must be at least 2")
    cov = fbm_covariance_matrix(n, 1.0, h)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure(str(exc)) from exc
    z = as_generator(seed, stream).standard_normal(n - 1)
    values = np.concatenate(([0.0], chol @ z)) * dt ** h
    return FbmPath(h, float(dt), values)


def fbm_at_times(times, h, seed, reps, stream="fbm", first=0, max_points=8192):
    """fBm sampled at arbitrary nonnegative ``times`` for ``reps`` replications.

    Brownian motion (H = 1/2) uses independent increments; other H use a
    Cholesky factor of the covariance of the distinct times. Coincident times
    share one value.
    """
    h = check_hurst(h)
    times = np.asarray(times, dtype=float)
    order = np.argsort(times, kind="stable")
    st = times[order]
    scale = max(1.0, float(np.abs(st).max()))
    new = np.concatenate(([True], np.diff(st) > 1e-12 * scale))
    uniq = st[new]
    group = np.cumsum(new) - 1
    k = uniq.size
    if k > max_points:
        raise SizeTooLarge(f"{k} distinct times exceed the {max_points} limit")
    if h == 0.5:
        steps = np.sqrt(np.diff(np.concatenate(([0.0], uniq))))
        def draw(z):
            return np.cumsum(z * steps, axis=1)
    else:
        cov = fbm_covariance(uniq[:, None], uniq[None, :], h)
        zero = uniq == 0.0
        cov[zero, :] = 0.0
        cov[:, zero] = 0.0
        cov[zero, zero] = 1.0  # placeholder row, zeroed below
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailure(str(exc)) from exc
        def draw(z):
            out = z @ chol.T
            out[:, zero] = 0.0
            return out
    z = np.empty((reps, k))
    for r in range(reps):
        z[r] = substream(seed, f"{stream}/{first + r}").standard_normal(k)
    vals = draw(z)
    out = np.empty((reps, times.size))
    out[:, order] = vals[:, group]
    return out
