"""Experiment configuration: TOML suites and compact method/distribution specs.

A suite file looks like::

    [run]
    T = 1000
    seeds = [0, 1, 2, 3, 4, 5, 6, 7]
    master_seed = 2024
    workers = 1
    output_dir = "out/table2"

    [fit]
    window = 700
    include_log = false

    [[problems]]
    name = "beta"
    generator = "spectrum"
    d = 4000
    distribution = { variant = "beta", tau = 0.5, xi = 0.5 }

    [[problems]]
    name = "mp"
    generator = "gram"
    d = 4000
    n = 4000
    sigma2 = 1.0

    [[methods]]
    kind = "gcm"
    alpha = 0.5
    beta = 1.5
    L_factor = 1.5

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import optimizers, polynomials, rates, spectra
from .errors import ConfigError

__all__ = [
    "ExperimentConfig",
    "MethodSpec",
    "ProblemSpec",
    "load_config",
    "make_distribution",
    "parse_config",
    "parse_spec",
]

METHOD_KEYS = {
    "gcm": {"alpha", "beta"},
    "laguerre": {"alpha"},
    "nesterov": set(),
    "gd": set(),
}
DIST_KEYS = {
    "beta": ({"tau", "xi"}, {"L"}),
    "mp": (set(), {"r", "sigma2"}),
    "gamma": (set(), {"alpha"}),
    "empirical": ({"path"}, set()),
}


def _num(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float, str, Fraction)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    try:
        return Fraction(value) if isinstance(value, str) else value
    except ValueError:
        raise ConfigError(f"{where}: not a number: {value!r}") from None


def parse_spec(text):
    """Split ``kind:key=value,...`` into (kind, {key: value}).

    Values are kept as exact Fractions so ``1/2`` and ``0.5`` both work.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"bad parameter {item!r} in {text!r}; expected key=value")
        key = key.strip()
        params[key] = val.strip() if key == "path" else _num(val.strip(), text)
    return kind, params


def _check_keys(where, got, required, optional=()):
    got = set(got)
    unknown = got - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = set(required) - got
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")


def make_distribution(variant, params):
    variant = variant.lower()
    if variant not in DIST_KEYS:
        raise ConfigError(f"unknown distribution {variant!r}; choose from {sorted(DIST_KEYS)}")
    required, optional = DIST_KEYS[variant]
    _check_keys(f"distribution {variant}", params, required, optional)
    try:
        if variant == "empirical":
            return spectra.load_empirical(params["path"])
        kw = {k: float(_num(v, variant)) for k, v in params.items()}
        cls = {"beta": spectra.Beta, "mp": spectra.MarchenkoPastur, "gamma": spectra.Gamma}[variant]
        return cls(**kw)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class MethodSpec:
    kind: str
    params: dict = field(default_factory=dict)
    L_factor: float = 1.0
    L: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in METHOD_KEYS:
            raise ConfigError(f"unknown method {self.kind!r}; choose from {sorted(METHOD_KEYS)}")
        _check_keys(f"method {self.kind}", self.params, METHOD_KEYS[self.kind])
        for k, v in self.params.items():
            if not float(v) > -1:
                raise ConfigError(f"method {self.kind}: {k} must exceed -1, got {v}")
        if not self.L_factor > 0:
            raise ConfigError(f"method {self.kind}: L_factor must be positive")
        if self.L is not None and not self.L > 0:
            raise ConfigError(f"method {self.kind}: L must be positive")

    @property
    def label(self):
        if self.name:
            return self.name
        inner = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        text = f"{self.kind}({inner})" if inner else self.kind
        return text + (f"@L*{self.L_factor:g}" if self.L_factor != 1 else "")

    def fparams(self):
        return {k: float(v) for k, v in self.params.items()}

    def step_size_L(self, L_reference):
        return float(self.L) if self.L is not None else self.L_factor * float(L_reference)

    def run(self, problem, T, L_reference=None):
        p = self.fparams()
        if self.kind == "laguerre":
            return optimizers.run_laguerre(problem, p["alpha"], T)
        L = self.step_size_L(problem.L_instance if L_reference is None else L_reference)
        if self.kind == "gcm":
            return optimizers.run_gcm(problem, p["alpha"], p["beta"], L, T)
        if self.kind == "nesterov":
            return optimizers.run_nesterov(problem, L, T)
        return optimizers.run_gd(problem, L, T)

    def family(self, L_reference=None):
        p = self.fparams()
        if self.kind == "laguerre":
            return polynomials.Laguerre(p["alpha"])
        if L_reference is None and self.L is None:
            raise ConfigError(f"method {self.kind} needs L on an unbounded spectrum")
        L = self.step_size_L(L_reference if L_reference is not None else 1.0)
        if self.kind == "gcm":
            return polynomials.GCM(p["alpha"], p["beta"], L)
        return polynomials.Nesterov(L) if self.kind == "nesterov" else polynomials.GD(L)

    def theory(self, edges, objective_l=1, gamma_alpha=None):
        """Theoretical RateSpec for this method, or None when no theorem applies."""
        if self.kind == "laguerre":
            if gamma_alpha is None or objective_l != 1:
                return None
            # tuned only when the method parameter is the Gamma exponent plus 2
            if Fraction(repr(float(self.params["alpha"]))) != Fraction(repr(float(gamma_alpha))) + 2:
                return None
            return rates.laguerre_exponent(gamma_alpha)
        if edges is None:
            return None
        tau, xi = edges
        if self.kind == "gcm":
            return rates.gcm_avg_exponent(self.params["alpha"], self.params["beta"], tau, xi, objective_l)
        if self.kind == "nesterov":
            return rates.nesterov_avg_exponent(xi, objective_l)
        return rates.gd_avg_exponent(xi, objective_l)

    def to_dict(self):
        out = {"kind": self.kind, "label": self.label, "L_factor": self.L_factor}
        out.update({k: float(v) for k, v in self.params.items()})
        if self.L is not None:
            out["L"] = self.L
        return out


def _fmt(v):
    return str(v) if isinstance(v, Fraction) else f"{v:g}"


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    generator: str
    d: int
    n: int | None = None
    sigma2: float = 1.0
    distribution: spectra.SpectralDistribution | None = None

    def build(self, rng):
        from .problems import gram_problem, spectrum_problem

        if self.generator == "gram":
            return gram_problem(self.n, self.d, self.sigma2, rng)
        prob = spectrum_problem(self.distribution.sample(self.d, rng), rng)
        prob.provenance.update({"distribution": self.distribution.name, **self.distribution.params()})
        return prob

    @property
    def limit_distribution(self):
        if self.generator == "gram":
            r = self.n / self.d
            return spectra.MarchenkoPastur(r, self.sigma2) if r <= 1 else None
        return self.distribution

    def reference_L(self, problem):
        """Largest of the instance's top eigenvalue and the limit law's right edge.

        Taking L at the instance's top eigenvalue puts that eigenvalue on the
        endpoint of [0, L], where the GCM residual has its largest amplitude;
        the limit law's edge avoids that while staying >= every eigenvalue.
        """
        dist = self.limit_distribution
        hi = dist.support()[1] if dist is not None and not isinstance(dist, spectra.Empirical) else 0.0
        return max(problem.L_instance, hi) if math.isfinite(hi) else problem.L_instance

    @property
    def edges(self):
        dist = self.limit_distribution
        return None if dist is None else dist.edge_exponents

    @property
    def gamma_alpha(self):
        dist = self.limit_distribution
        return dist.alpha if isinstance(dist, spectra.Gamma) else None

    def to_dict(self):
        out = {"name": self.name, "generator": self.generator, "d": self.d}
        if self.generator == "gram":
            out.update(n=self.n, sigma2=self.sigma2)
        else:
            out["distribution"] = {"variant": self.distribution.name, **self.distribution.params()}
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    T: int
    seeds: tuple
    problems: tuple
    methods: tuple
    master_seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    window: int = 700
    include_log: bool = False

    def to_dict(self):
        out = asdict(self)
        out["problems"] = [p.to_dict() for p in self.problems]
        out["methods"] = [m.to_dict() for m in self.methods]
        out["seeds"] = list(self.seeds)
        return out

    def hash(self):
        # output_dir and workers do not change results, so they are left out
        payload = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "workers")}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _int(value, where, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{where} must be an integer >= {minimum}, got {value!r}")
    return value


def _parse_problem(i, tbl, base_dir):
    where = f"problems[{i}]"
    gen = tbl.get("generator")
    if gen == "gram":
        _check_keys(where, tbl, {"name", "generator", "d"}, {"n", "sigma2"})
        d = _int(tbl["d"], f"{where}.d", 1)
        n = _int(tbl.get("n", d), f"{where}.n", 1)
        sigma2 = float(_num(tbl.get("sigma2", 1.0), f"{where}.sigma2"))
        if not sigma2 > 0:
            raise ConfigError(f"{where}.sigma2 must be positive")
        return ProblemSpec(str(tbl["name"]), "gram", d, n, sigma2)
    if gen == "spectrum":
        _check_keys(where, tbl, {"name", "generator", "d", "distribution"})
        dist_tbl = dict(tbl["distribution"])
        variant = dist_tbl.pop("variant", None)
        if variant is None:
            raise ConfigError(f"{where}.distribution needs a variant")
        if "path" in dist_tbl:
            dist_tbl["path"] = str((base_dir / dist_tbl["path"]).resolve())
        dist = make_distribution(variant, dist_tbl)
        d = _int(tbl["d"], f"{where}.d", 1)
        if isinstance(dist, spectra.Empirical) and d != len(dist.eigenvalues):
            raise ConfigError(f"{where}: d={d} but the empirical spectrum has {len(dist.eigenvalues)} values")
        return ProblemSpec(str(tbl["name"]), "spectrum", d, distribution=dist)
    raise ConfigError(f"{where}.generator must be 'gram' or 'spectrum', got {gen!r}")


def _parse_method(i, tbl):
    where = f"methods[{i}]"
    tbl = dict(tbl)
    kind = tbl.pop("kind", None)
    if kind not in METHOD_KEYS:
        raise ConfigError(f"{where}.kind must be one of {sorted(METHOD_KEYS)}, got {kind!r}")
    extra = {"name", "L_factor", "L"}
    _check_keys(where, tbl, METHOD_KEYS[kind], extra)
    params = {k: _num(tbl[k], f"{where}.{k}") for k in METHOD_KEYS[kind]}
    L = tbl.get("L")
    return MethodSpec(
        kind, params,
        float(_num(tbl.get("L_factor", 1.0), f"{where}.L_factor")),
        None if L is None else float(_num(L, f"{where}.L")),
        tbl.get("name"),
    )


def parse_config(data, base_dir="."):
    """Validate a parsed TOML document into an ExperimentConfig."""
    base_dir = Path(base_dir)
    _check_keys("config", data, {"run", "problems", "methods"}, {"fit"})
    run = data["run"]
    _check_keys("run", run, {"T"}, {"seeds", "master_seed", "workers", "output_dir"})
    T = _int(run["T"], "run.T", 1)
    seeds = run.get("seeds", list(range(8)))
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("run.seeds must be a nonempty list")
    seeds = tuple(_int(s, "run.seeds[]", 0) for s in seeds)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("run.seeds must be distinct")
    fit = data.get("fit", {})
    _check_keys("fit", fit, set(), {"window", "include_log"})
    include_log = fit.get("include_log", False)
    if not isinstance(include_log, bool):
        raise ConfigError("fit.include_log must be true or false")
    problems = tuple(_parse_problem(i, p, base_dir) for i, p in enumerate(data["problems"]))
    names = [p.name for p in problems]
    if len(set(names)) != len(names):
        raise ConfigError("problem names must be distinct")
    methods = tuple(_parse_method(i, m) for i, m in enumerate(data["methods"]))
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"method labels must be distinct, got {labels}")
    return ExperimentConfig(
        T, seeds, problems, methods,
        master_seed=_int(run.get("master_seed", 0), "run.master_seed", 0),
        workers=_int(run.get("workers", 1), "run.workers", 1),
        output_dir=str(run.get("output_dir", "out")),
        window=_int(fit.get("window", 700), "fit.window", 3),
        include_log=include_log,
    )


def load_config(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent)
