"""Expected spectral distribution models.

Four variants: a generalized Beta law on [0, L], the Marchenko-Pastur law,
a Gamma law on [0, inf) and an empirical list of eigenvalues. Each
density-bearing variant provides a quadrature rule exact (Beta, Gamma) or
spectrally accurate (Marchenko-Pastur with r < 1) for polynomial integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import special
from scipy.integrate import cumulative_trapezoid

from ._gauss import gauss_jacobi, gauss_laguerre_scaled
from .errors import UnsupportedOperationError

__all__ = [
    "Beta",
    "Empirical",
    "Gamma",
    "MarchenkoPastur",
    "QuadratureRule",
    "SpectralDistribution",
    "density",
    "load_empirical",
    "quadrature_nodes",
    "sample_eigenvalues",
    "support",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights with ``sum w g(x) ~ integral g dmu``.

    ``log_scale`` is the per-node exponent h such that the true weight is
    ``weights * exp(-2h)``. It is zero except for the Gamma law, where the
    weights alone would underflow; polynomial evaluators start from
    ``exp(-h)`` instead of 1 to compensate.
    """

    nodes: np.ndarray
    weights: np.ndarray
    log_scale: np.ndarray

    def true_weights(self):
        return self.weights * np.exp(-2 * self.log_scale)


class SpectralDistribution:
    """Base class of the ESD variants."""

    name = "abstract"

    def density(self, lam):
        raise UnsupportedOperationError(f"{self.name} has no density")

    def cdf(self, lam):
        raise NotImplementedError

    def support(self):
        raise NotImplementedError

    def sample(self, d, rng):
        raise NotImplementedError

    def rule(self, n_nodes):
        raise UnsupportedOperationError(f"{self.name} has no quadrature rule")

    @property
    def edge_exponents(self):
        """(tau, xi) of the density at the right and left edges, or None."""
        return None

    def params(self):
        raise NotImplementedError


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise ValueError("lambda must be finite")
    return lam


def _check_d(d):
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    return int(d)


def _check_nodes(n_nodes):
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise ValueError(f"n_nodes must be an integer >= 2, got {n_nodes!r}")
    return int(n_nodes)


@dataclass(frozen=True)
class Beta(SpectralDistribution):
    """Density proportional to lambda^xi (L - lambda)^tau on [0, L]."""

    tau: float
    xi: float
    L: float = 1.0
    name = "beta"

    def __post_init__(self):
        if not (self.tau > -1 and self.xi > -1):
            raise ValueError(f"beta needs tau, xi > -1, got tau={self.tau}, xi={self.xi}")
        if not self.L > 0:
            raise ValueError(f"beta needs L > 0, got {self.L}")

    @cached_property
    def _log_norm(self):
        return (self.tau + self.xi + 1) * math.log(self.L) + special.betaln(self.xi + 1, self.tau + 1)

    def density(self, lam):
        lam = _check_lambda(lam)
        inside = (lam >= 0) & (lam <= self.L)
        lc = np.where(inside, lam, self.L / 2)
        with np.errstate(divide="ignore"):
            val = np.exp(
                self.xi * np.log(lc) + self.tau * np.log(self.L - lc) - self._log_norm
            )
        return np.where(inside, val, 0.0)

    def cdf(self, lam):
        lam = np.clip(_check_lambda(lam) / self.L, 0.0, 1.0)
        return special.betainc(self.xi + 1, self.tau + 1, lam)

    def support(self):
        return (0.0, float(self.L))

    def sample(self, d, rng):
        d = _check_d(d)
        return self.L * rng.beta(self.xi + 1, self.tau + 1, size=d)

    def rule(self, n_nodes):
        x, w = gauss_jacobi(_check_nodes(n_nodes), float(self.tau), float(self.xi))
        lam = 0.5 * self.L * (1.0 + x)
        return QuadratureRule(lam, np.array(w), np.zeros_like(lam))

    @property
    def edge_exponents(self):
        return (self.tau, self.xi)

    def params(self):
        return {"tau": self.tau, "xi": self.xi, "L": self.L}


@dataclass(frozen=True)
class MarchenkoPastur(SpectralDistribution):
    """Limiting ESD of H = X X^T with X of shape d x n, r = n / d <= 1.

    For r < 1 this is the law of the nonzero eigenvalues; the atom of mass
    1 - r at zero carried by rank-deficient Gram matrices is not modelled.
    """

    r: float = 1.0
    sigma2: float = 1.0
    name = "mp"

    def __post_init__(self):
        if not 0 < self.r <= 1:
            raise ValueError(f"marchenko-pastur needs 0 < r <= 1, got {self.r}")
        if not self.sigma2 > 0:
            raise ValueError(f"marchenko-pastur needs sigma2 > 0, got {self.sigma2}")

    @property
    def lam_plus(self):
        return self.sigma2 * (1 + math.sqrt(self.r)) ** 2

    @property
    def lam_minus(self):
        return self.sigma2 * max(0.0, (1 - math.sqrt(self.r)) ** 2)

    def density(self, lam):
        lam = _check_lambda(lam)
        lo, hi = self.lam_minus, self.lam_plus
        inside = (lam > lo) & (lam < hi) & (lam > 0)
        lc = np.where(inside, lam, 0.5 * (lo + hi))
        val = np.sqrt((hi - lc) * (lc - lo)) / (2 * math.pi * self.sigma2 * self.r * lc)
        out = np.where(inside, val, 0.0)
        if lo == 0.0:
            out = np.where(lam == 0.0, np.inf, out)
        return out

    @cached_property
    def _cdf_table(self):
        # lambda = c - h cos(phi) makes the integrand smooth in phi
        lo, hi = self.lam_minus, self.lam_plus
        c, h = 0.5 * (hi + lo), 0.5 * (hi - lo)
        phi = np.linspace(0.0, math.pi, 20001)
        lam = c - h * np.cos(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = h * h * np.sin(phi) ** 2 / (2 * math.pi * self.sigma2 * self.r * lam)
        if lo == 0.0:
            # limit at phi -> 0 of sin^2(phi) / (1 - cos(phi)) is 2
            f[0] = 2 * h / (2 * math.pi * self.sigma2 * self.r)
        cdf = cumulative_trapezoid(f, phi, initial=0.0)
        return lam, cdf / cdf[-1]

    def cdf(self, lam):
        grid, cdf = self._cdf_table
        return np.interp(_check_lambda(lam), grid, cdf, left=0.0, right=1.0)

    def support(self):
        return (self.lam_minus, self.lam_plus)

    def sample(self, d, rng):
        """Inverse-CDF draws; only used to cross-check quadrature."""
        d = _check_d(d)
        if self.r == 1:
            return 4 * self.sigma2 * rng.beta(0.5, 1.5, size=d)
        grid, cdf = self._cdf_table
        return np.interp(rng.random(d), cdf, grid)

    def rule(self, n_nodes):
        n = _check_nodes(n_nodes)
        lo, hi = self.lam_minus, self.lam_plus
        if lo == 0.0:
            # r = 1: exactly the Beta(1/2, -1/2) weight on [0, 4 sigma2]
            return Beta(0.5, -0.5, hi).rule(n)
        x, w = gauss_jacobi(n, 0.5, 0.5)
        c, h = 0.5 * (hi + lo), 0.5 * (hi - lo)
        lam = c + h * x
        # Gauss-Jacobi(1/2, 1/2) weights are normalized by pi / 2
        w = np.asarray(w) * (math.pi / 2) * h * h / (2 * math.pi * self.sigma2 * self.r * lam)
        return QuadratureRule(lam, w, np.zeros_like(lam))

    @property
    def edge_exponents(self):
        return (0.5, -0.5) if self.r == 1 else None

    def params(self):
        return {"r": self.r, "sigma2": self.sigma2}


@dataclass(frozen=True)
class Gamma(SpectralDistribution):
    """Density lambda^alpha e^{-lambda} / Gamma(alpha + 1) on [0, inf)."""

    alpha: float = 0.0
    name = "gamma"

    def __post_init__(self):
        if not self.alpha > -1:
            raise ValueError(f"gamma needs alpha > -1, got {self.alpha}")

    def density(self, lam):
        lam = _check_lambda(lam)
        inside = lam >= 0
        lc = np.where(inside, lam, 1.0)
        with np.errstate(divide="ignore"):
            val = np.exp(self.alpha * np.log(lc) - lc - special.gammaln(self.alpha + 1))
        return np.where(inside, val, 0.0)

    def cdf(self, lam):
        return special.gammainc(self.alpha + 1, np.clip(_check_lambda(lam), 0.0, None))

    def support(self):
        return (0.0, math.inf)

    def sample(self, d, rng):
        return rng.gamma(self.alpha + 1, size=_check_d(d))

    def rule(self, n_nodes):
        x, w = gauss_laguerre_scaled(_check_nodes(n_nodes), float(self.alpha))
        return QuadratureRule(np.array(x), np.array(w), 0.5 * np.array(x))

    def params(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class Empirical(SpectralDistribution):
    """Point masses 1/d at each stored eigenvalue."""

    eigenvalues: tuple
    name = "empirical"

    def __post_init__(self):
        vals = tuple(sorted(float(v) for v in self.eigenvalues))
        if not vals:
            raise ValueError("empirical spectrum is empty")
        if vals[0] < 0 or not all(math.isfinite(v) for v in vals):
            raise ValueError("empirical eigenvalues must be finite and nonnegative")
        object.__setattr__(self, "eigenvalues", vals)

    def cdf(self, lam):
        vals = np.asarray(self.eigenvalues)
        return np.searchsorted(vals, _check_lambda(lam), side="right") / len(vals)

    def support(self):
        return (self.eigenvalues[0], self.eigenvalues[-1])

    def sample(self, d, rng):
        d = _check_d(d)
        if d != len(self.eigenvalues):
            raise ValueError(f"empirical spectrum has {len(self.eigenvalues)} values, asked for {d}")
        return np.array(self.eigenvalues)

    def params(self):
        return {"d": len(self.eigenvalues)}


def load_empirical(path):
    """Read one eigenvalue per line; ``#`` lines and blanks are skipped."""
    vals = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return Empirical(tuple(vals))


def density(dist, lam):
    return dist.density(lam)


def support(dist):
    return dist.support()


def sample_eigenvalues(dist, d, rng):
    return dist.sample(d, rng)


def quadrature_nodes(dist, n_nodes):
    """Nodes and true weights of an n_nodes-point rule for ``dist``."""
    rule = dist.rule(n_nodes)
    return rule.nodes, rule.true_weights()
