"""First-order methods run as iterate updates on a QuadraticProblem.

Updates act on the error coordinates ``e = U^T (x - x*)`` where the
gradient is ``lam * e``; this is an exact change of basis, so x_t is
recovered as ``x* + U e_t``. Step coefficients depend only on the
iteration counter and the method parameters.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, SingularCoefficientError
from .polynomials import gcm_residual_coefficients
from .problems import coord_metrics
from .rates import fit_slope

__all__ = [
    "Trajectory",
    "gcm_coefficients",
    "laguerre_coefficients",
    "read_trajectory_csv",
    "run_gcm",
    "run_gd",
    "run_laguerre",
    "run_nesterov",
]

DIVERGENCE_FACTOR = 1e12


@dataclass
class Trajectory:
    method: str
    params: dict
    fgap: np.ndarray
    gradsq: np.ndarray
    distsq: np.ndarray
    provenance: dict = field(default_factory=dict)
    coefficients: np.ndarray | None = None
    iterates: np.ndarray | None = None

    @property
    def T(self):
        return len(self.fgap) - 1

    def label(self):
        if not self.params:
            return self.method
        inner = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        return f"{self.method}({inner})"

    def header_lines(self):
        meta = {"method": self.method, "params": self.params, "provenance": self.provenance}
        return ["# " + json.dumps(meta, sort_keys=True)]

    def to_csv(self, path=None):
        """Write ``t,fgap,gradsq,distsq`` with 17 significant digits."""
        buf = io.StringIO()
        for line in self.header_lines():
            buf.write(line + "\n")
        buf.write("t,fgap,gradsq,distsq\n")
        for t in range(self.T + 1):
            buf.write(f"{t},{self.fgap[t]:.17g},{self.gradsq[t]:.17g},{self.distsq[t]:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    def summary(self, window_len=700, include_log=False):
        out = {"method": self.method, "params": self.params, "provenance": self.provenance, "T": self.T}
        for name in ("fgap", "gradsq", "distsq"):
            try:
                fit = fit_slope(getattr(self, name), window_len, include_log)
                out[f"{name}_slope"] = fit.slope
                out[f"{name}_stderr"] = fit.stderr
            except ValueError:
                out[f"{name}_slope"] = None
                out[f"{name}_stderr"] = None
        return out


def read_trajectory_csv(path):
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                meta = json.loads(line[1:])
            elif line.startswith("t,"):
                continue
            elif line.strip():
                rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows).reshape(-1, 4)
    return Trajectory(
        meta.get("method", "?"), meta.get("params", {}),
        arr[:, 1], arr[:, 2], arr[:, 3], meta.get("provenance", {}),
    )


def gcm_coefficients(alpha, beta, L, T):
    """Momentum and step of GCM(alpha, beta) for t = 1..T.

    The update is ``x_t = x_{t-1} + m_t (x_{t-1} - x_{t-2}) + h_t grad f(x_{t-1})``.
    The degree-t Jacobi coefficients, shifted to [0, L], are

        a = -(b^2 + ab + (2s+1)(a+b) + 2s^2 + 2s)(2s+a+b+1) / ((s+1)(s+a+b+1)(2s+a+b))
        b = (2s+a+b+1)(2s+a+b+2) / (L (s+1)(s+a+b+1))
        g = -(s+a)(s+b)(2s+a+b+2) / ((s+1)(s+a+b+1)(2s+a+b))

    with s = t - 1, normalized by delta_t = 1 / (a + g delta_{t-1}),
    delta_0 = 0, giving m_t = delta_t a - 1 and h_t = delta_t b.
    At t = 1 the limit a = -(beta+1), b = (alpha+beta+2)/L is used, since
    the general expression is 0/0 when alpha + beta is 0 or -1.
    """
    a_, b_ = float(alpha), float(beta)
    out = np.empty((T, 2))
    delta = 0.0
    for t in range(1, T + 1):
        s = t - 1
        if t == 1:
            A, B, G = -(b_ + 1), (a_ + b_ + 2) / L, 0.0
        else:
            ab = a_ + b_
            den = (s + 1) * (s + ab + 1) * (2 * s + ab)
            if den == 0:
                raise SingularCoefficientError(f"GCM coefficient singular at t={t}", t)
            A = -(b_ * b_ + a_ * b_ + (2 * s + 1) * ab + 2 * s * s + 2 * s) * (2 * s + ab + 1) / den
            B = (2 * s + ab + 1) * (2 * s + ab + 2) / (L * (s + 1) * (s + ab + 1))
            G = -(s + a_) * (s + b_) * (2 * s + ab + 2) / den
        norm = A + G * delta
        if norm == 0 or not np.isfinite(norm):
            raise SingularCoefficientError(f"GCM coefficient singular at t={t}", t)
        delta = 1.0 / norm
        out[t - 1] = (delta * A - 1.0, delta * B)
    return out


def laguerre_coefficients(alpha, T):
    t = np.arange(1, T + 1, dtype=float)
    return np.column_stack([(t - 1) / (t + alpha), -1.0 / (t + alpha)])


def _check_T(T):
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    return int(T)


class _Recorder:
    def __init__(self, problem, T, keep_iterates):
        self.lam = problem.eigvals
        self.fgap = np.empty(T + 1)
        self.gradsq = np.empty(T + 1)
        self.distsq = np.empty(T + 1)
        self.iterates = np.empty((T + 1, problem.d)) if keep_iterates else None
        self.limit = None

    def record(self, t, e):
        f, g, d = coord_metrics(self.lam, e)
        if t == 0:
            self.limit = DIVERGENCE_FACTOR * f if f > 0 else np.inf
        if not (np.isfinite(f) and np.isfinite(g) and np.isfinite(d)) or f > self.limit:
            raise DivergenceError(f"diverged at t={t}", last_finite_t=t - 1)
        self.fgap[t], self.gradsq[t], self.distsq[t] = f, g, d
        if self.iterates is not None:
            self.iterates[t] = e

    def trajectory(self, method, params, problem, coefficients=None, upto=None):
        n = len(self.fgap) if upto is None else upto + 1
        its = None if self.iterates is None else self.iterates[:n]
        return Trajectory(
            method, params, self.fgap[:n], self.gradsq[:n], self.distsq[:n],
            dict(problem.provenance), coefficients, its,
        )

    def attach_partial(self, err, method, params, problem, coefficients):
        # the finite prefix is kept so callers can still report it
        err.trajectory = self.trajectory(method, params, problem, coefficients, err.last_finite_t)


def _run_momentum(problem, coeffs, method, params, keep_iterates):
    T = len(coeffs)
    rec = _Recorder(problem, T, keep_iterates)
    lam = problem.eigvals
    e_prev = e = np.array(problem.z0)
    try:
        rec.record(0, e)
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(1, T + 1):
                m, h = coeffs[t - 1]
                e, e_prev = e + m * (e - e_prev) + h * (lam * e), e
                rec.record(t, e)
    except DivergenceError as err:
        rec.attach_partial(err, method, params, problem, coeffs)
        raise
    return rec.trajectory(method, params, problem, coeffs)


def _resolve_L(problem, L):
    L = problem.L_instance if L is None else float(L)
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    return L


def run_gcm(problem, alpha, beta, L=None, T=100, keep_iterates=False, rtol=1e-10):
    """Generalized Chebyshev method; L defaults to the instance's largest eigenvalue.

    The coefficient stream is checked against the residual recurrence
    built from the Jacobi polynomials before the run.
    """
    T = _check_T(T)
    if not (alpha > -1 and beta > -1):
        raise ValueError(f"GCM needs alpha, beta > -1, got ({alpha}, {beta})")
    L = _resolve_L(problem, L)
    coeffs = gcm_coefficients(alpha, beta, L, T)
    ref = gcm_residual_coefficients(alpha, beta, L, T)
    expected = np.column_stack([ref.alpha - 1.0, ref.beta])
    err = np.abs(coeffs - expected) / np.maximum(np.abs(expected), 1.0)
    if not np.all(err <= rtol):
        t = int(np.argmax(err.max(axis=1))) + 1
        raise AssertionError(f"GCM coefficients disagree with the Jacobi recurrence at t={t}")
    return _run_momentum(problem, coeffs, "gcm", {"alpha": alpha, "beta": beta, "L": L}, keep_iterates)


def run_laguerre(problem, alpha, T=100, keep_iterates=False):
    """Laguerre method: momentum (t-1)/(t+alpha), step 1/(t+alpha)."""
    T = _check_T(T)
    if not alpha > -1:
        raise ValueError(f"Laguerre needs alpha > -1, got {alpha}")
    coeffs = laguerre_coefficients(alpha, T)
    return _run_momentum(problem, coeffs, "laguerre", {"alpha": alpha}, keep_iterates)


def run_gd(problem, L=None, T=100, keep_iterates=False):
    T = _check_T(T)
    L = _resolve_L(problem, L)
    coeffs = np.tile([0.0, -1.0 / L], (T, 1))
    return _run_momentum(problem, coeffs, "gd", {"L": L}, keep_iterates)


def run_nesterov(problem, L=None, T=100, keep_iterates=False):
    """x_{t+1} = y_t - grad f(y_t) / L, y_{t+1} = x_{t+1} + t/(t+3) (x_{t+1} - x_t)."""
    T = _check_T(T)
    L = _resolve_L(problem, L)
    rec = _Recorder(problem, T, keep_iterates)
    lam = problem.eigvals
    x = y = np.array(problem.z0)
    coeffs = np.column_stack([np.arange(T) / (np.arange(T) + 3.0), np.full(T, -1.0 / L)])
    try:
        rec.record(0, x)
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(T):
                x_next = y - (lam * y) / L
                y = x_next + coeffs[t, 0] * (x_next - x)
                x = x_next
                rec.record(t + 1, x)
    except DivergenceError as err:
        rec.attach_partial(err, "nesterov", {"L": L}, problem, coeffs)
        raise
    return rec.trajectory("nesterov", {"L": L}, problem, coeffs)
