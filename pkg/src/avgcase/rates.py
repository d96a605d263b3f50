"""Closed-form asymptotic rates and empirical slope fitting.

Rate functions return a :class:`RateSpec` for Theta(t^exponent), times
log t when ``log_factor`` is set. Branch conditions compare parameters
exactly: ints, Fractions and decimal strings are exact, and floats are read
through their shortest decimal representation. Differences below 1e-12
that are not exactly zero count as equal and are flagged with a ``~``
suffix on the regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

__all__ = [
    "RateSpec",
    "SlopeFit",
    "fit_slope",
    "gcm_avg_exponent",
    "gcm_heatmap",
    "gcm_worst_exponent",
    "gd_avg_exponent",
    "gd_beta_closed_form",
    "laguerre_closed_form",
    "laguerre_exponent",
    "nesterov_avg_exponent",
    "optimal_exponent",
    "table2",
]

_TOL = Fraction(1, 10**12)
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class RateSpec:
    exponent: float
    log_factor: bool = False
    regime: str = ""
    constant_known: bool = False

    def __str__(self):
        text = f"t^{self.exponent:g}"
        return text + " log t" if self.log_factor else text


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    window: tuple
    log_corrected: bool = False
    shrunk: bool = False


def _exact(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"rate parameters must be finite, got {x}")
    return Fraction(repr(x))


class _Cmp:
    """Exact comparisons that remember when a tolerance was needed."""

    def __init__(self):
        self.fuzzy = False

    def eq(self, a, b):
        diff = abs(a - b)
        if diff == 0:
            return True
        if diff <= _TOL:
            self.fuzzy = True
            return True
        return False

    def lt(self, a, b):
        return a < b and not self.eq(a, b)

    def le(self, a, b):
        return a < b or self.eq(a, b)

    def gt(self, a, b):
        return not self.le(a, b)


def _spec(exponent, log_factor, regime, cmp):
    return RateSpec(float(exponent), log_factor, regime + ("~" if cmp.fuzzy else ""))


def _check_l(objective_l, allowed=(1, 2)):
    if objective_l not in allowed:
        raise ValueError(f"objective l must be one of {allowed}, got {objective_l!r}")


def gcm_avg_exponent(alpha, beta, tau, xi, objective_l=1):
    """Average-case exponent of GCM(alpha, beta) on an ESD with edges (tau, xi)."""
    _check_l(objective_l)
    a, b, ta, x = map(_exact, (alpha, beta, tau, xi))
    cmp = _Cmp()
    shift = HALF + objective_l  # 3/2 for the function gap, 5/2 for gradients
    a_edge, b_edge = ta + HALF, x + shift
    if cmp.lt(a, a_edge) and cmp.lt(b, b_edge):
        return _spec(-1 - 2 * b, False, "bulk", cmp)
    if cmp.eq(a, a_edge) and cmp.eq(b, b_edge):
        return _spec(-2 * (x + 1 + objective_l), True, "critical", cmp)
    regime = "edge"
    if cmp.eq(a, a_edge) or cmp.eq(b, b_edge):
        regime = "edge-boundary"
    return _spec(2 * (max(a - b - ta, -x - objective_l) - 1), False, regime, cmp)


def optimal_exponent(xi, objective_l=1, tau=None):
    """Best average-case exponent and the GCM tuning attaining it.

    Returns ``(RateSpec, (alpha, beta))``; alpha is ``tau`` (None if not given).
    """
    _check_l(objective_l)
    x = _exact(xi)
    beta = x + 1 + objective_l
    params = (tau, float(beta))
    return RateSpec(float(-2 * beta), False, "optimal"), params


def gcm_worst_exponent(alpha, beta, objective_l=1):
    """Worst-case exponent of GCM(alpha, beta) over L-smooth convex quadratics."""
    _check_l(objective_l)
    a, b = _exact(alpha), _exact(beta)
    cmp = _Cmp()
    l = objective_l
    if cmp.gt(a, b - l):
        return _spec(2 * (a - b), False, "unbalanced", cmp)
    if cmp.le(b, l - HALF):
        return _spec(-1 - 2 * b, False, "low-beta", cmp)
    return _spec(-2 * l, False, "lower-bound", cmp)


def nesterov_avg_exponent(xi, objective_l=1):
    _check_l(objective_l)
    x = _exact(xi)
    cmp = _Cmp()
    if objective_l == 2:
        return _spec(-(x + Fraction(9, 2)), False, "gradient", cmp)
    if cmp.eq(x, -HALF):
        return _spec(-3, True, "critical", cmp)
    if x < -HALF:
        return _spec(-2 * (x + 2), False, "optimal", cmp)
    return _spec(-(x + Fraction(7, 2)), False, "suboptimal", cmp)


def gd_avg_exponent(xi, objective_l=1):
    _check_l(objective_l)
    return RateSpec(float(-(_exact(xi) + 1 + objective_l)), False, "gd")


def laguerre_exponent(alpha):
    """Function-gap exponent of the tuned Laguerre method on Gamma(alpha)."""
    a = _exact(alpha)
    if not a > -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    return RateSpec(float(-(a + 2)), False, "laguerre")


def gd_beta_closed_form(t, tau, xi, objective_l):
    """integral_0^1 (1 - lam)^(2t + tau) lam^(xi + l) dlam, via log-Gamma."""
    l = objective_l
    return math.exp(
        gammaln(l + xi + 1) + gammaln(2 * t + tau + 1) - gammaln(2 * t + l + xi + tau + 2)
    )


def laguerre_closed_form(t, alpha):
    """1 / binom(t + alpha + 2, t) for real alpha."""
    return math.exp(gammaln(t + 1) + gammaln(alpha + 3) - gammaln(t + alpha + 3))


def fit_slope(values, window_len=700, include_log=False):
    """Least-squares slope of log(values[t]) against log(t) over the tail.

    ``values[t]`` is the metric at iteration t (index 0 is x0). The window
    is the trailing ``window_len`` iterations; shorter trajectories use
    their trailing half and set ``shrunk``. With ``include_log`` a
    ``log log t`` regressor absorbs a multiplicative log factor.
    """
    v = np.asarray(values, dtype=float)
    T = len(v) - 1
    first_ok = 2 if include_log else 1
    shrunk = False
    if T - first_ok + 1 < window_len:
        window_len = max((T + 1) // 2, 3)
        shrunk = True
    lo = max(T - window_len + 1, first_ok)
    t = np.arange(lo, T + 1)
    if len(t) < (4 if include_log else 3):
        raise ValueError(f"need more iterations to fit a slope, got T={T}")
    y = v[lo:]
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("values in the fit window must be positive and finite")
    cols = [np.ones_like(t, dtype=float), np.log(t)]
    if include_log:
        cols.append(np.log(np.log(t)))
    X = np.column_stack(cols)
    coef, _, _, _ = np.linalg.lstsq(X, np.log(y), rcond=None)
    resid = np.log(y) - X @ coef
    dof = len(t) - X.shape[1]
    sigma2 = resid @ resid / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return SlopeFit(float(coef[1]), float(math.sqrt(max(cov[1, 1], 0.0))), (int(lo), int(T)), include_log, shrunk)


def gcm_heatmap(tau, xi, objective_l=1, n=100, lo=-1, hi=4):
    """Exponent of GCM(alpha, beta) over an n x n lattice of (lo, hi]^2.

    Lattice points are exact rationals ``lo + k (hi - lo) / n``, k = 1..n.
    Returns (alphas, betas, exponents, log_flags) with exponents[i, j] for
    alpha = alphas[i], beta = betas[j].
    """
    step = Fraction(hi - lo) / n
    pts = [Fraction(lo) + k * step for k in range(1, n + 1)]
    exps = np.empty((n, n))
    logs = np.zeros((n, n), dtype=bool)
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            r = gcm_avg_exponent(a, b, tau, xi, objective_l)
            exps[i, j] = r.exponent
            logs[i, j] = r.log_factor
    return np.array([float(p) for p in pts]), np.array([float(p) for p in pts]), exps, logs


def table2(tau, xi, objective_l=1):
    """Theoretical exponents of the four reference methods at (tau, xi)."""
    return {
        "gcm(alpha=1/2,beta=5/2)": gcm_avg_exponent(HALF, Fraction(5, 2), tau, xi, objective_l),
        "gcm(alpha=1/2,beta=3/2)": gcm_avg_exponent(HALF, Fraction(3, 2), tau, xi, objective_l),
        "nesterov": nesterov_avg_exponent(xi, objective_l),
        "gd": gd_avg_exponent(xi, objective_l),
    }
