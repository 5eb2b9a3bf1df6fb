# cython: language_level=3
"""Compiled inner loops. Each function mirrors one in ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def kahan_cumsum(const double[:, ::1] x):
    """Row-wise prefix sums with a leading zero, Neumaier-compensated."""
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], r, i
    out = np.empty((m, n + 1), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double s, c, t, v
    with nogil:
        for r in range(m):
            s = 0.0
            c = 0.0
            o[r, 0] = 0.0
            for i in range(n):
                v = x[r, i]
                t = s + v
                if fabs(s) >= fabs(v):
                    c = c + ((s - t) + v)
                else:
                    c = c + ((v - t) + s)
                s = t
                o[r, i + 1] = s + c
    return out


def lindley(double q0, const double[::1] x):
    """Q[0] = q0, Q[i+1] = max(Q[i] + x[i], 0)."""
    cdef Py_ssize_t n = x.shape[0], i
    out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef double q = q0
    with nogil:
        o[0] = q
        for i in range(n):
            q = q + x[i]
            if q < 0.0:
                q = 0.0
            o[i + 1] = q
    return out


def window_sup(const double[:, ::1] y, Py_ssize_t w):
    """out[r, k] = y[r, k+w] - min(y[r, k:k+w+1]) via a monotone deque."""
    cdef Py_ssize_t m = y.shape[0], n = y.shape[1], r, i, head, tail
    if w < 0 or n <= w:
        raise ValueError("window longer than path")
    out = np.empty((m, n - w), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t[::1] dq = np.empty(n, dtype=np.intp)
    with nogil:
        for r in range(m):
            head = 0
            tail = 0
            for i in range(n):
                while tail > head and y[r, dq[tail - 1]] >= y[r, i]:
                    tail -= 1
                dq[tail] = i
                tail += 1
                if dq[head] < i - w:
                    head += 1
                if i >= w:
                    o[r, i - w] = y[r, i] - y[r, dq[head]]
    return out


def crossings(const double[::1] q, const double[::1] f):
    """Index of the last (<= i) and next (>= i) grid point with q >= f; -1 if none."""
    cdef Py_ssize_t n = q.shape[0], i, cur
    last = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] lo = last
    cdef cnp.int64_t[::1] no = nxt
    with nogil:
        cur = -1
        for i in range(n):
            if q[i] >= f[i]:
                cur = i
            lo[i] = cur
        cur = -1
        for i in range(n - 1, -1, -1):
            if q[i] >= f[i]:
                cur = i
            no[i] = cur
    return last, nxt


def field_grid_max(const double[:, ::1] b1, const double[:, ::1] b2,
                   const double[::1] w, Py_ssize_t j_off, Py_ssize_t i_step,
                   Py_ssize_t i_count, Py_ssize_t j_step, Py_ssize_t n_half):
    """Per row: max over 0<=l<=i_count, |n|<=n_half of
    (b2[l*i_step + n*j_step + j_off] - b1[l*i_step]) * w[n*j_step + j_off]."""
    cdef Py_ssize_t m = b1.shape[0], r, l, k, i, j
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double best, val, base
    with nogil:
        for r in range(m):
            best = -1e300
            for l in range(i_count + 1):
                i = l * i_step
                base = b1[r, i]
                for k in range(-n_half, n_half + 1):
                    j = k * j_step + j_off
                    val = (b2[r, i + j] - base) * w[j]
                    if val > best:
                        best = val
            o[r] = best
    return out
