"""Random quadratic problems f(x) = 1/2 (x - x*)^T H (x - x*).

Problems keep H as an eigendecomposition. The optimum is always 0 and x0
is standard Gaussian, so ``E[(x0 - x*)(x0 - x*)^T] = I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = ["QuadraticProblem", "gram_problem", "haar_orthogonal", "metrics", "spectrum_problem"]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    x_star: np.ndarray
    x0: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("eigvals", "eigvecs", "x_star", "x0"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        d = len(self.eigvals)
        if self.eigvecs.shape != (d, d) or self.x_star.shape != (d,) or self.x0.shape != (d,):
            raise ValueError("inconsistent problem dimensions")
        if np.any(self.eigvals < 0):
            raise ValueError("H must be positive semi-definite")

    @property
    def d(self):
        return len(self.eigvals)

    @property
    def L_instance(self):
        return float(self.eigvals.max())

    @cached_property
    def z0(self):
        """Initial error x0 - x* in the eigenbasis."""
        return _readonly(self.eigvecs.T @ (self.x0 - self.x_star))

    def hessian(self):
        return (self.eigvecs * self.eigvals) @ self.eigvecs.T

    def to_coords(self, x):
        """Error coordinates U^T (x - x*)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"expected vectors of length {self.d}, got {x.shape[-1]}")
        return (x - self.x_star) @ self.eigvecs

    def from_coords(self, z):
        return self.x_star + np.asarray(z) @ self.eigvecs.T

    def value(self, x):
        return metrics(self, x)[0]

    def gradient(self, x):
        return self.eigvecs @ (self.eigvals * self.to_coords(x))


def coord_metrics(eigvals, z):
    """(fgap, gradsq, distsq) from eigenbasis error coordinates; z may be 2-D."""
    z2 = np.square(z)
    return 0.5 * (z2 @ eigvals), z2 @ np.square(eigvals), z2.sum(axis=-1)


def metrics(problem, x):
    """(f(x) - f*, ||grad f(x)||^2, ||x - x*||^2)."""
    fgap, gradsq, distsq = coord_metrics(problem.eigvals, problem.to_coords(x))
    return float(fgap), float(gradsq), float(distsq)


def haar_orthogonal(d, rng):
    """Haar-distributed orthogonal matrix: QR of a Gaussian with sign-fixed R."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def gram_problem(n, d, sigma2, rng):
    """H = X X^T with X of shape d x n, entries N(0, sigma2 / d).

    The ESD tends to Marchenko-Pastur(r = n / d, sigma2).
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    X = rng.standard_normal((d, n)) * np.sqrt(sigma2 / d)
    lam, U = np.linalg.eigh(X @ X.T)
    x0 = rng.standard_normal(d)
    return QuadraticProblem(
        np.clip(lam, 0.0, None), U, np.zeros(d), x0,
        {"generator": "gram", "n": n, "d": d, "sigma2": sigma2},
    )


def spectrum_problem(eigvals, rng):
    """H = U diag(eigvals) U^T with U Haar-distributed."""
    lam = np.asarray(eigvals, dtype=float)
    if lam.ndim != 1 or len(lam) == 0:
        raise ValueError("eigvals must be a nonempty 1-D sequence")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite and nonnegative")
    d = len(lam)
    U = haar_orthogonal(d, rng)
    x0 = rng.standard_normal(d)
    return QuadraticProblem(lam, U, np.zeros(d), x0, {"generator": "spectrum", "d": d})
