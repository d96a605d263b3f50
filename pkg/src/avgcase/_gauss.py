"""Gauss rules from three-term recurrences.

Nodes are the eigenvalues of the Jacobi matrix, polished by one Newton
step on the degree-n orthonormal polynomial. Weights are Christoffel
numbers ``1 / sum_k p_k(x)^2``, which stay accurate for large n where the
eigenvector route loses relative precision on small weights.

For the generalized Laguerre weight the Christoffel sum is accumulated
against ``exp(-x)`` in log space, so the returned weights ``w_i * exp(x_i)``
are finite even when ``w_i`` itself underflows.
"""

from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

_BIG = 1e150


def _orthonormal_sweep(x, diag, offdiag, n, log_scale):
    """Run the orthonormal recurrence up to degree n at points x.

    Values are carried as ``p * exp(c)`` with a per-point log scale ``c``
    (initially ``log_scale``) that absorbs overflow. Returns ``p_n / p_n'``
    and ``log(sum_{k<n} p_k^2 exp(2c))``.
    """
    c = np.array(log_scale, dtype=float)
    p_prev = np.zeros_like(x)
    dp_prev = np.zeros_like(x)
    p = np.ones_like(x)
    dp = np.zeros_like(x)
    acc = np.ones_like(x)  # sum of p_k^2, in units of exp(2c)
    for k in range(n):
        b_prev = offdiag[k - 1] if k else 0.0
        p_next = ((x - diag[k]) * p - b_prev * p_prev) / offdiag[k]
        dp_next = (p + (x - diag[k]) * dp - b_prev * dp_prev) / offdiag[k]
        p_prev, dp_prev, p, dp = p, dp, p_next, dp_next
        if k < n - 1:
            acc += p * p
        m = np.maximum(np.abs(p), np.abs(p_prev))
        big = m > _BIG
        if big.any():
            s = np.where(big, m, 1.0)
            p, p_prev, dp, dp_prev = p / s, p_prev / s, dp / s, dp_prev / s
            acc = acc / (s * s)
            c = c + np.log(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(dp != 0, p / dp, 0.0)
    return step, np.log(acc) + 2 * c


def gauss_rule(diag, offdiag, log_damping=None):
    """Gauss nodes and weights for a probability measure.

    ``diag`` holds a_0..a_{n-1}, ``offdiag`` holds sqrt(b_1)..sqrt(b_n) of
    the monic recurrence (one extra entry, used for the Newton polish).
    With ``log_damping(x) = h`` the weights come back multiplied by
    ``exp(2h)``.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    n = len(diag)
    if n == 1:
        return diag.copy(), np.ones(1)
    x = eigvalsh_tridiagonal(diag, offdiag[: n - 1])

    def start(x):
        return np.zeros_like(x) if log_damping is None else -log_damping(x)

    step, _ = _orthonormal_sweep(x, diag, offdiag, n, start(x))
    # Only accept the polish when it is a small correction.
    spacing = np.diff(x).min()
    x = x - np.where(np.abs(step) < 0.1 * spacing, step, 0.0)
    _, log_christoffel = _orthonormal_sweep(x, diag, offdiag, n, start(x))
    return x, np.exp(-log_christoffel)


def jacobi_recurrence(n, a, b):
    """Monic recurrence of the normalized weight (1-x)^a (1+x)^b on [-1, 1].

    Returns diag (n entries) and sqrt off-diagonal (n entries).
    """
    k = np.arange(n, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (s * (s + 2))
    diag[0] = (b - a) / (a + b + 2)
    m = np.arange(1, n + 1, dtype=float)
    s = 2 * m + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        bk = 4 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1) * (s - 1))
    bk[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    return diag, np.sqrt(bk)


def laguerre_recurrence(n, alpha):
    """Monic recurrence of the normalized weight x^alpha e^{-x} on [0, inf)."""
    k = np.arange(n, dtype=float)
    m = np.arange(1, n + 1, dtype=float)
    return 2 * k + alpha + 1, np.sqrt(m * (m + alpha))


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


@lru_cache(maxsize=32)
def gauss_jacobi(n, a, b):
    """n-point rule for the probability measure proportional to (1-x)^a (1+x)^b."""
    return _freeze(*gauss_rule(*jacobi_recurrence(n, a, b)))


@lru_cache(maxsize=32)
def gauss_laguerre_scaled(n, alpha):
    """n-point rule for x^alpha e^{-x} / Gamma(alpha+1).

    Weights are returned multiplied by ``exp(x)``.
    """
    return _freeze(*gauss_rule(*laguerre_recurrence(n, alpha), log_damping=lambda x: 0.5 * x))
