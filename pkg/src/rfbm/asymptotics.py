"""Closed-form asymptotics for the fBm storage process with unit drift.

Levels follow the convention ``P(sup_{t in [0, T*x]} Q(t) > x)``: ``window``
below is the multiplier ``T`` of the level ``x``, not an absolute time span.
"""

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import log_ndtr, ndtr

from .errors import DomainError, NotMonotone, RegimeWarning
from .fbm import check_hurst

REGIME_V = 2.0


@dataclass(frozen=True)
class ModelConstants:
    h: float
    c: float
    tau0: float
    A: float
    B: float
    a: float
    b: float
    cH: float
    lam: float

    def as_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def derive_constants(h):
    h = check_hurst(h)
    tau0 = h / (1 - h)
    A = tau0 ** (-h) / (1 - h)
    B = h * tau0 ** (-h - 2)
    return ModelConstants(
        h=h,
        c=1.0,
        tau0=tau0,
        A=A,
        B=B,
        a=1.0 / (2.0 * tau0 ** (2 * h)),
        b=B / (2.0 * A),
        cH=(2 * (1 - h) ** 2 - h) / (2 * h * (1 - h)),
        lam=2.0 - 2.0 * h,
    )


def psi(u):
    """Standard normal upper tail 1 - Phi(u)."""
    out = ndtr(-np.asarray(u, dtype=float))
    return out if np.ndim(out) else float(out)


def log_psi(u):
    out = log_ndtr(-np.asarray(u, dtype=float))
    return out if np.ndim(out) else float(out)


def v_of_level(f, k):
    """Scaled level A f^(1-H) matching a storage level f."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise DomainError("level must be positive")
    out = k.A * f ** (1 - k.h)
    return out if out.ndim else float(out)


def log_piterbarg_tail(window, level, k, pickands):
    """Log of the leading-order ``P(sup_{[0, window*level]} Q > level)``.

    sqrt(pi) a^(1/H) b^(-1/2) H_BH^2 T v^(2/H-1) Psi(v),  v = A level^(1-H).
    """
    if window <= 0:
        raise DomainError("window multiplier must be positive")
    if pickands <= 0:
        raise DomainError("Pickands constant must be positive")
    v = v_of_level(level, k)
    h = k.h
    log_pref = (0.5 * math.log(math.pi) + math.log(k.a) / h - 0.5 * math.log(k.b)
                + 2.0 * math.log(pickands) + math.log(window))
    return log_pref + (2.0 / h - 1.0) * np.log(v) + log_psi(v)


def piterbarg_tail(window, level, k, pickands):
    """Leading-order tail of the supremum of Q over ``[0, window*level]``.

    Emits ``RegimeWarning`` when the scaled level ``v`` is below 2.
    """
    v = v_of_level(level, k)
    if np.any(np.asarray(v) < REGIME_V):
        warnings.warn(f"scaled level v={np.min(v):.3g} < {REGIME_V}: outside asymptotic regime",
                      RegimeWarning, stacklevel=2)
    out = np.exp(log_piterbarg_tail(window, level, k, pickands))
    return out if np.ndim(out) else float(out)


def limsup_constant(k):
    """Almost-sure limsup of Q(t) / (log t)^(1/(2(1-H)))."""
    return (2.0 / k.A ** 2) ** (1.0 / (2.0 * (1.0 - k.h)))


def _log_arg_root(kappa):
    # smallest y > 0 beyond which y + kappa*log(y) stays positive and increasing
    if kappa == 0:
        return 0.0
    if kappa > 0:
        return optimize.brentq(lambda y: y + kappa * math.log(y), 1e-300, 1.0 + abs(kappa),
                               xtol=1e-15, rtol=1e-15)
    y_turn = -kappa
    if y_turn + kappa * math.log(y_turn) > 0:
        return y_turn
    hi = y_turn
    while hi + kappa * math.log(hi) <= 0:
        hi *= 2.0
    return optimize.brentq(lambda y: y + kappa * math.log(y), y_turn, hi, xtol=1e-15, rtol=1e-15)


@dataclass(frozen=True)
class ThresholdFamily:
    """The curves f_p and the rate of their crossing probability.

    ``pickands`` is an input; see ``pickands.default_pickands`` for an estimate.
    """

    p: float
    constants: ModelConstants
    pickands: float = 1.0

    def __post_init__(self):
        if self.pickands <= 0:
            raise DomainError("Pickands constant must be positive")

    @property
    def kappa(self):
        return 1.0 + self.constants.cH - self.p

    @property
    def s_min(self):
        """Lower end of the domain where f_p is positive and nondecreasing."""
        return math.exp(_log_arg_root(self.kappa))

    @property
    def prefactor(self):
        k = self.constants
        h = k.h
        return (k.a ** (1.0 / h) * k.b ** -0.5 * self.pickands ** 2
                * k.A ** (1.0 / (1.0 - h)) * 2.0 ** k.cH / math.sqrt(2.0))

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s <= max(self.s_min, 1.0)):
            raise DomainError(f"argument below s_min={self.s_min:.6g} of f_p")
        return s

    def f(self, s):
        s = self._check(s)
        k = self.constants
        ls = np.log(s)
        inner = ls + self.kappa * np.log(ls) if self.kappa else ls
        out = (2.0 / k.A ** 2 * inner) ** (1.0 / (2.0 * (1.0 - k.h)))
        return out if out.ndim else float(out)

    def z(self, u):
        """Asymptotic rate C / (u log^(1-p) u) of (1/f_p) P(sup_{[0,f_p]} Q > f_p)."""
        u = self._check(u)
        out = self.prefactor / (u * np.log(u) ** (1.0 - self.p))
        return out if out.ndim else float(out)

    def exact_rate(self, u):
        """(1/f_p(u)) times the leading-order Piterbarg tail at level f_p(u)."""
        fu = np.asarray(self.f(u))
        out = np.exp(log_piterbarg_tail(1.0, fu, self.constants, self.pickands) - np.log(fu))
        return out if out.ndim else float(out)

    def h_p(self, t, mode="asymptotic"):
        """p log log t / rate(t); ``mode`` picks the asymptotic or composed rate."""
        if self.p <= 0:
            raise DomainError("h_p is defined for p > 0")
        t = np.asarray(t, dtype=float)
        if np.any(t <= max(self.s_min, math.e ** math.e)):
            raise DomainError("h_p needs t above max(s_min, e^e)")
        if mode == "asymptotic":
            rate = self.z(t)
        elif mode == "exact":
            rate = self.exact_rate(t)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        out = self.p * np.log(np.log(t)) / rate
        return out if np.ndim(out) else float(out)


def family(h, p, pickands=1.0):
    return ThresholdFamily(float(p), derive_constants(h), float(pickands))


@dataclass(frozen=True)
class CriterionReport:
    integral_on_window: float
    classification: str
    method: str
    t0: float
    t_max: float

    def as_dict(self):
        return asdict(self)


def analytic_classification(p):
    """Divergence of the integral of du / (u log^(1-p) u): infinite iff p >= 0."""
    return "Infinite" if p >= 0 else "Finite"


def _check_monotone(f, t0, t_max, n=2001):
    u = np.exp(np.linspace(math.log(t0), math.log(t_max), n))
    try:
        vals = np.asarray(f(u), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is None or vals.shape != u.shape:
        vals = np.array([f(x) for x in u], dtype=float)
    if np.any(vals <= 0):
        raise DomainError("f must be positive on the window")
    drop = vals[:-1] - vals[1:]
    if np.any(drop > 1e-12 * np.abs(vals[:-1])):
        raise NotMonotone("f decreases on the integration window")


def criterion_integral(f, t0, t_max, k=None, pickands=1.0, method="quadrature"):
    """Finite-window value of the dichotomy integral and its classification.

    ``f`` is a ``ThresholdFamily`` or a positive nondecreasing callable (then
    ``k`` is required). The integrand is (1/f(u)) times the leading-order
    tail at level f(u) over a window of length f(u).

    For ``ThresholdFamily`` both methods classify by the exact rule on p; the
    quadrature cannot decide divergence of an improper integral. For a plain
    callable, ``"quadrature"`` classifies by the local exponent of
    u log(u) * integrand against log log u near ``t_max`` (a heuristic).
    """
    if method not in ("quadrature", "analytic"):
        raise ValueError(f"unknown method {method!r}")
    if not 1.0 < t0 < t_max:
        raise DomainError("need 1 < t0 < t_max")
    if isinstance(f, ThresholdFamily):
        fam = f
        if t0 <= fam.s_min:
            raise DomainError(f"t0 must exceed s_min={fam.s_min:.6g}")
        k, pickands = fam.constants, fam.pickands
        func = fam.f
        cls = analytic_classification(fam.p)
    else:
        if k is None:
            raise ValueError("model constants are required for a user-supplied f")
        func = f
        cls = None
    _check_monotone(func, t0, t_max)

    def log_integrand(y):
        fu = float(func(math.exp(y)))
        return float(log_piterbarg_tail(1.0, fu, k, pickands)) - math.log(fu)

    if method == "analytic" and cls is not None:
        return CriterionReport(math.nan, cls, "AnalyticRate", t0, t_max)

    # integrate over y = log u, panel by panel
    y0, y1 = math.log(t0), math.log(t_max)
    edges = np.linspace(y0, y1, max(8, int(math.ceil(y1 - y0)) + 1))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda y: math.exp(log_integrand(y) + y), lo, hi,
                                epsrel=1e-8, epsabs=0.0, limit=200)
        total += val
    if cls is None:
        y_lo = max(y0, y1 / math.e)
        if y_lo >= y1 or y_lo <= 0:
            y_lo = 0.5 * (y0 + y1)
        # u log u g(u) ~ (log u)^p decides divergence at exponent 0
        phi_hi = log_integrand(y1) + y1 + math.log(y1)
        phi_lo = log_integrand(y_lo) + y_lo + math.log(y_lo)
        slope = (phi_hi - phi_lo) / (math.log(y1) - math.log(y_lo))
        cls = "Infinite" if slope >= 0 else "Finite"
    return CriterionReport(total, cls, "Quadrature", t0, t_max)
