"""Residual polynomials of first-order methods and their expected metrics.

Every family is evaluated pointwise on a grid by forward recurrence in t.
``expected_metric`` integrates ``P_t(lambda)^2 lambda^l`` against an ESD,
which by the trace identity equals the expected squared distance (l=0),
twice the expected function gap (l=1) and the expected squared gradient
norm (l=2) per unit of ``E||x0 - x*||^2 / d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, PrecisionError, SingularCoefficientError, UnsupportedOperationError

__all__ = [
    "GCM",
    "GD",
    "Laguerre",
    "Nesterov",
    "RecurrenceCoefficients",
    "evaluate_recurrence",
    "expected_metric",
    "expected_metrics",
    "gcm_polynomials",
    "gcm_residual_coefficients",
    "gd_polynomial",
    "jacobi_raw_coefficients",
    "jacobi_recurrence",
    "laguerre_polynomials",
    "laguerre_raw_coefficients",
    "nesterov_polynomials",
    "shift_affine",
    "to_residual",
]

# rescale recurrence state past this magnitude (tracked in a log scale)
_BIG = 1e150


@dataclass(frozen=True)
class RecurrenceCoefficients:
    """p_t = (alpha_t + beta_t * lam) p_{t-1} + gamma_t p_{t-2}, t = 1..T.

    Entry ``t - 1`` of each array holds the degree-t coefficient;
    ``p0`` is the constant p_0 and p_{-1} is zero.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    p0: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (len(self.alpha) == len(self.beta) == len(self.gamma)):
            raise ValueError("coefficient arrays differ in length")

    @property
    def T(self):
        return len(self.alpha)


def jacobi_raw_coefficients(t, alpha, beta):
    """Classical Jacobi recurrence on [-1, 1] at degree t.

    Returns ``(constant, slope, gamma)`` so that
    ``p_t(x) = (constant + slope * x) p_{t-1}(x) + gamma * p_{t-2}(x)``
    with the standard normalization ``p_t(1) = binom(t + alpha, t)``.
    Degree 1 uses the closed form ``((a+b+2) x + (a-b)) / 2``, which is the
    limit of the general formula where its denominators vanish.
    """
    a, b = alpha, beta
    if t < 1 or int(t) != t:
        raise ValueError(f"degree must be a positive integer, got {t!r}")
    if t == 1:
        return (a - b) / 2, (a + b + 2) / 2, 0.0
    s = 2 * t + a + b
    den = 2 * t * (t + a + b) * (s - 2)
    if den == 0:
        raise SingularCoefficientError(
            f"Jacobi recurrence singular at degree {t} for alpha={a}, beta={b}", degree=t
        )
    slope = s * (s - 1) / (2 * t * (t + a + b))
    constant = (a * a - b * b) * (s - 1) / den
    gamma = -2 * (t + a - 1) * (t + b - 1) * s / den
    return constant, slope, gamma


def jacobi_recurrence(T, alpha, beta):
    rows = [jacobi_raw_coefficients(t, alpha, beta) for t in range(1, T + 1)]
    c, s, g = (np.array(v) for v in zip(*rows)) if rows else (np.empty(0),) * 3
    return RecurrenceCoefficients(c, s, g, p0=1.0)


def laguerre_raw_coefficients(t, alpha):
    """Laguerre L_t^alpha recurrence: (constant, slope, gamma) at degree t."""
    return (2 * t + alpha - 1) / t, -1.0 / t, -(t + alpha - 1) / t


def shift_affine(coeffs, a, b):
    """Coefficients of q_t(lam) = p_t(a * lam + b)."""
    if a == 0:
        raise ValueError("affine map needs a != 0")
    return RecurrenceCoefficients(
        coeffs.alpha + b * coeffs.beta, a * coeffs.beta, coeffs.gamma.copy(), coeffs.p0
    )


def to_residual(coeffs):
    """Recurrence of P_t = p_t / p_t(0).

    The output has ``gamma_t = 1 - alpha_t``. The ratio
    ``delta_t = p_{t-1}(0) / p_t(0)`` is obtained by running the raw
    recurrence at zero in ratio form, ``delta_t = 1 / (alpha_t + gamma_t delta_{t-1})``.
    """
    if coeffs.p0 == 0:
        raise DegeneracyError("p_0 vanishes", degree=0)
    T = coeffs.T
    delta = np.empty(T)
    prev = 0.0
    for i in range(T):
        ratio = coeffs.alpha[i] + coeffs.gamma[i] * prev  # p_t(0) / p_{t-1}(0)
        if ratio == 0 or not np.isfinite(ratio):
            raise DegeneracyError(f"p_t(0) vanishes at degree {i + 1}", degree=i + 1)
        prev = 1.0 / ratio
        delta[i] = prev
    a = delta * coeffs.alpha
    return RecurrenceCoefficients(a, delta * coeffs.beta, 1.0 - a, p0=1.0)


def _rescale(states, c):
    m = np.max(np.abs(np.stack(states)), axis=0)
    big = m > _BIG
    if big.any():
        s = np.where(big, m, 1.0)
        states = [v / s for v in states]
        c = c + np.log(s)
    return states, c


def _iterate_recurrence(coeffs, lam, log_scale):
    p_prev = np.zeros_like(lam)
    p = np.full_like(lam, coeffs.p0)
    c = np.array(log_scale, dtype=float)
    yield p, c
    for i in range(coeffs.T):
        p, p_prev = (coeffs.alpha[i] + coeffs.beta[i] * lam) * p + coeffs.gamma[i] * p_prev, p
        (p, p_prev), c = _rescale([p, p_prev], c)
        yield p, c


def evaluate_recurrence(coeffs, grid):
    """Matrix of p_t(grid) for t = 0..T."""
    lam = np.asarray(grid, dtype=float)
    return np.stack([p * np.exp(c) for p, c in _iterate_recurrence(coeffs, lam, np.zeros_like(lam))])


def gcm_residual_coefficients(alpha, beta, L, T):
    """Residual recurrence of the shifted Jacobi family on [0, L]."""
    if not (alpha > -1 and beta > -1):
        raise ValueError(f"GCM needs alpha, beta > -1, got ({alpha}, {beta})")
    if not L > 0:
        raise ValueError(f"GCM needs L > 0, got {L}")
    return to_residual(shift_affine(jacobi_recurrence(T, alpha, beta), 2.0 / L, -1.0))


class _Family:
    """A residual polynomial family, evaluated by forward recurrence."""

    def iterate(self, lam, T, log_scale=None):
        """Yield (P_t, c_t) for t = 0..T with true value P_t * exp(c_t)."""
        raise NotImplementedError

    def values(self, grid, T):
        lam = np.asarray(grid, dtype=float)
        rows = []
        for p, c in self.iterate(lam, T):
            rows.append(p * np.exp(c))
        return np.stack(rows)

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class GCM(_Family):
    """Shifted Jacobi(alpha, beta) residual polynomials on [0, L]."""

    alpha: float
    beta: float
    L: float = 1.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def coefficients(self, T):
        got = self._cache.get("coeffs")
        if got is None or got.T < T:
            got = gcm_residual_coefficients(self.alpha, self.beta, self.L, T)
            self._cache["coeffs"] = got
        return got

    def iterate(self, lam, T, log_scale=None):
        co = self.coefficients(T)
        c0 = np.zeros_like(lam) if log_scale is None else log_scale
        head = RecurrenceCoefficients(co.alpha[:T], co.beta[:T], co.gamma[:T])
        yield from _iterate_recurrence(head, lam, c0)

    def describe(self):
        return {"method": "gcm", "alpha": self.alpha, "beta": self.beta, "L": self.L}


@dataclass(frozen=True)
class Laguerre(_Family):
    """Residual generalized Laguerre polynomials L_t^alpha / L_t^alpha(0)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > -1:
            raise ValueError(f"Laguerre needs alpha > -1, got {self.alpha}")

    def coefficients(self, T):
        rows = [laguerre_raw_coefficients(t, self.alpha) for t in range(1, T + 1)]
        c, s, g = (np.array(v) for v in zip(*rows)) if rows else (np.empty(0),) * 3
        return to_residual(RecurrenceCoefficients(c, s, g))

    def iterate(self, lam, T, log_scale=None):
        c0 = np.zeros_like(lam) if log_scale is None else log_scale
        yield from _iterate_recurrence(self.coefficients(T), lam, c0)

    def describe(self):
        return {"method": "laguerre", "alpha": self.alpha}


@dataclass(frozen=True)
class GD(_Family):
    """Gradient descent with step 1/L: P_t = (1 - lam/L)^t."""

    L: float = 1.0

    def iterate(self, lam, T, log_scale=None):
        c = np.zeros_like(lam) if log_scale is None else np.array(log_scale, dtype=float)
        p = np.ones_like(lam)
        factor = 1.0 - lam / self.L
        yield p, c
        for _ in range(T):
            p = p * factor
            (p,), c = _rescale([p], c)
            yield p, c

    def describe(self):
        return {"method": "gd", "L": self.L}


@dataclass(frozen=True)
class Nesterov(_Family):
    """Nesterov's method with step 1/L and momentum t / (t + 3).

    With Q_t the polynomial of the extrapolated point y_t:
    P_{t+1} = (1 - lam/L) Q_t and Q_{t+1} = P_{t+1} + t/(t+3) (P_{t+1} - P_t).
    """

    L: float = 1.0

    def iterate(self, lam, T, log_scale=None):
        c = np.zeros_like(lam) if log_scale is None else np.array(log_scale, dtype=float)
        p = np.ones_like(lam)
        q = np.ones_like(lam)
        factor = 1.0 - lam / self.L
        yield p, c
        for t in range(T):
            p_next = factor * q
            q = p_next + t / (t + 3) * (p_next - p)
            p = p_next
            (p, q), c = _rescale([p, q], c)
            yield p, c

    def describe(self):
        return {"method": "nesterov", "L": self.L}


def gcm_polynomials(alpha, beta, L, T, grid):
    return GCM(alpha, beta, L).values(grid, T)


def gd_polynomial(L, T, grid):
    return GD(L).values(grid, T)


def nesterov_polynomials(L, T, grid):
    return Nesterov(L).values(grid, T)


def laguerre_polynomials(alpha, T, grid):
    return Laguerre(alpha).values(grid, T)


def default_nodes(T):
    return max(400, 4 * T)


def _integrate(rule, family, T):
    lam = rule.nodes
    with np.errstate(divide="ignore"):
        log_w = np.log(rule.weights)
        log_lam = np.log(lam)
    out = np.empty((T + 1, 3))
    for t, (p, c) in enumerate(family.iterate(lam, T, -rule.log_scale)):
        p2 = p * p
        base = log_w + 2 * c
        for l in range(3):
            with np.errstate(under="ignore", invalid="ignore"):
                term = np.exp(base + l * log_lam) * p2 if l else np.exp(base) * p2
            out[t, l] = np.sum(np.where(rule.weights > 0, np.nan_to_num(term), 0.0))
    out[:, 1] *= 0.5
    return out


def expected_metrics(dist, family, T, n_nodes=None, self_check=True, rtol=1e-6):
    """Expected (distsq, fgap, gradsq) per unit initial distance, t = 0..T.

    Column l holds ``integral P_t^2 lam^l dmu``, halved for l = 1.
    With ``self_check`` the computation is repeated with twice the nodes and
    a relative change above ``rtol`` raises PrecisionError.
    """
    if not hasattr(dist, "rule") or dist.name == "empirical":
        raise UnsupportedOperationError(f"{dist.name} spectrum has no quadrature rule")
    n = n_nodes or default_nodes(T)
    out = _integrate(dist.rule(n), family, T)
    if self_check:
        fine = _integrate(dist.rule(2 * n), family, T)
        scale = np.maximum(np.abs(fine), np.finfo(float).tiny)
        err = np.max(np.abs(fine - out) / scale)
        if not err <= rtol:
            raise PrecisionError(
                f"quadrature self-check failed: doubling {n} nodes changed results by {err:.3g}"
            )
        out = fine
    return out


def expected_metric(dist, family, objective_l, T, n_nodes=None, self_check=True):
    """``integral P_t^2 lam^l dmu`` for t = 0..T (halved when l = 1)."""
    if objective_l not in (0, 1, 2):
        raise ValueError(f"objective l must be 0, 1 or 2, got {objective_l!r}")
    return expected_metrics(dist, family, T, n_nodes, self_check)[:, objective_l]
