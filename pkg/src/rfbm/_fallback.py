"""Numpy versions of the compiled kernels, used when the extension is absent."""

import numpy as np
from scipy.ndimage import minimum_filter1d


def kahan_cumsum(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros((x.shape[0], x.shape[1] + 1))
    # extended-precision accumulation stands in for compensation
    out[:, 1:] = np.cumsum(x.astype(np.longdouble), axis=1)
    return out


def lindley(q0, x):
    # discrete form of Q(t) = X(t) + max(Q(0), -inf_{s<=t} X(s))
    x = np.asarray(x, dtype=np.float64)
    s = np.concatenate(([0.0], np.cumsum(x)))
    return s + np.maximum(q0, -np.minimum.accumulate(s))


def window_sup(y, w):
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[1]
    if w < 0 or n <= w:
        raise ValueError("window longer than path")
    size = w + 1
    lo = minimum_filter1d(y, size=size, axis=1, mode="nearest")
    start = size // 2
    return y[:, w:] - lo[:, start:start + n - w]


def crossings(q, f):
    q = np.asarray(q, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    n = q.shape[0]
    hit = q >= f
    idx = np.arange(n, dtype=np.int64)
    last = np.maximum.accumulate(np.where(hit, idx, -1))
    fwd = np.where(hit, idx, n)[::-1]
    nxt = np.minimum.accumulate(fwd)[::-1].copy()
    nxt[nxt == n] = -1
    return last, nxt


def field_grid_max(b1, b2, w, j_off, i_step, i_count, j_step, n_half):
    ii = np.arange(i_count + 1) * i_step
    base = b1[:, ii]
    best = np.full(b1.shape[0], -1e300)
    for k in range(-n_half, n_half + 1):
        j = k * j_step + j_off
        val = (b2[:, ii + j] - base) * w[j]
        np.maximum(best, val.max(axis=1), out=best)
    return best
