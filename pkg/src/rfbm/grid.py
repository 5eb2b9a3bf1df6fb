"""Discretization grids for the scaled field and the grid-versus-fine-lattice experiment.

The scaled field is A*Z(s, tau) = A (B_H(s + tau) - B_H(s)) / (1 + tau); it
exceeds ``v = A u^(1-H)`` somewhere in ``[0, T] x (0, inf)`` exactly when the
storage process exceeds ``u`` on ``[0, T*u]``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .asymptotics import derive_constants
from .errors import DomainError
from .fbm import check_hurst, fbm_at_times
from .mc import binomial_estimate, run_chunks


def floor_ratio(x, q):
    """Largest integer L with L*q <= x, robust to rounding in x/q."""
    n = math.floor(x / q)
    while (n + 1) * q <= x:
        n += 1
    while n > 0 and n * q > x:
        n -= 1
    return int(n)


def tau_star(v):
    return math.log(v) / v


@dataclass(frozen=True)
class DiscretizationGrid:
    T: float
    theta: float
    v: float
    hurst: float
    tau0: float
    q: float
    L: int
    N: int

    @property
    def tau_star(self):
        return tau_star(self.v)

    @property
    def s_grid(self):
        return self.q * np.arange(self.L + 1)

    @property
    def tau_grid(self):
        return self.tau0 + self.q * np.arange(-self.N, self.N + 1)

    @property
    def size(self):
        return (self.L + 1) * (2 * self.N + 1)

    def as_dict(self):
        return {"T": self.T, "theta": self.theta, "v": self.v, "hurst": self.hurst,
                "tau0": self.tau0, "q": self.q, "L": self.L, "N": self.N,
                "tau_star": self.tau_star}


def build_grid(T, theta, v, k):
    """Grid s_l = l q (l <= L), tau_n = tau0 + n q (|n| <= N), q = theta v^(-1/H)."""
    if T <= 0 or theta <= 0:
        raise DomainError("T and theta must be positive")
    if v < math.e:
        raise DomainError("v must be at least e")
    q = theta * v ** (-1.0 / k.h)
    ts = tau_star(v)
    L = floor_ratio(T, q)
    N = floor_ratio(ts, q)
    if k.tau0 - N * q <= 0:
        raise DomainError("tau grid reaches nonpositive window lengths; raise v")
    return DiscretizationGrid(float(T), float(theta), float(v), k.h, k.tau0, q, L, N)


def field_value(b_s, b_st, tau, k):
    """A*Z from fBm values at s and s + tau."""
    return k.A * (b_st - b_s) / (1.0 + tau)


@dataclass(frozen=True)
class GridComparison:
    grid: DiscretizationGrid
    p_grid: object
    ratio: float
    ratio_stderr: float
    violations: int


@dataclass(frozen=True)
class GridExperiment:
    p_cont: object
    rows: list
    h_ref: float
    maxima: np.ndarray  # column 0: fine lattice; then one column per theta

    def as_dict(self):
        return {
            "h_ref": self.h_ref,
            "p_cont": self.p_cont.summary(),
            "rows": [{"theta": r.grid.theta, "grid": r.grid.as_dict(),
                      "p_grid": r.p_grid.summary(), "ratio": r.ratio,
                      "ratio_stderr": r.ratio_stderr, "violations": r.violations}
                     for r in self.rows],
        }


def grid_vs_continuum_experiment(T, thetas, v, h, seed, reps, refine=32, chunk=64):
    """Exceedance of A*Z over theta-grids against a common fine lattice.

    The fine lattice has spacing ``q_min / refine`` where ``q_min`` belongs to
    the smallest theta; every theta-grid must be a sub-lattice of it (spacings
    integer multiples of the finest one). All maxima come from the same field
    realizations, so each grid maximum is bounded by the fine-lattice maximum
    replication by replication.
    """
    h = check_hurst(h)
    k = derive_constants(h)
    thetas = [float(t) for t in thetas]
    grids = [build_grid(T, th, v, k) for th in thetas]
    q_min = min(g.q for g in grids)
    h_ref = q_min / refine
    strides = []
    for g in grids:
        r = g.q / h_ref
        if abs(r - round(r)) > 1e-6 * r:
            raise DomainError("theta values must be integer multiples of the smallest theta")
        strides.append(int(round(r)))
    L_ref = floor_ratio(T, h_ref)
    J_ref = floor_ratio(tau_star(v), h_ref)
    if k.tau0 - J_ref * h_ref <= 0:
        raise DomainError("tau lattice reaches nonpositive window lengths; raise v")
    for g, st in zip(grids, strides):
        if g.L * st > L_ref or g.N * st > J_ref:
            raise DomainError("theta-grid is not contained in the fine lattice")
    t1 = h_ref * np.arange(L_ref + 1)
    t2 = k.tau0 + h_ref * np.arange(-J_ref, L_ref + J_ref + 1)
    w = 1.0 / (1.0 + k.tau0 + h_ref * np.arange(-J_ref, J_ref + 1))
    times = np.concatenate((t1, t2))
    n1 = t1.size

    def block(first, count):
        b = fbm_at_times(times, h, seed, count, stream="grid", first=first)
        b1 = np.ascontiguousarray(b[:, :n1])
        b2 = np.ascontiguousarray(b[:, n1:])
        cols = [kernels.field_grid_max(b1, b2, w, J_ref, 1, L_ref, 1, J_ref)]
        for g, st in zip(grids, strides):
            cols.append(kernels.field_grid_max(b1, b2, w, J_ref, st, g.L, st, g.N))
        return k.A * np.stack(cols, axis=1)

    maxima = run_chunks(block, reps, chunk)
    cont = maxima[:, 0] > v
    hits_c = int(np.count_nonzero(cont))
    p_cont = binomial_estimate(hits_c, reps, seed, "grid/fine")
    rows = []
    for i, g in enumerate(grids, start=1):
        hit = maxima[:, i] > v
        hits_g = int(np.count_nonzero(hit))
        violations = int(np.count_nonzero(maxima[:, i] > maxima[:, 0]))
        if hits_c:
            ratio = hits_g / hits_c
            ratio_se = math.sqrt(ratio * (1 - ratio) / hits_c)
        else:
            ratio = ratio_se = math.nan
        rows.append(GridComparison(g, binomial_estimate(hits_g, reps, seed, f"grid/{g.theta!r}"),
                                   ratio, ratio_se, violations))
    return GridExperiment(p_cont, rows, h_ref, maxima)
