"""Experiment orchestration behind the ``avgcase`` subcommands.

Each ``cmd_*`` function does the work and returns data plus an exit code;
printing and argument parsing live in :mod:`avgcase.cli`.
"""

from __future__ import annotations

import io
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, rates
from .config import MethodSpec, make_distribution, parse_spec
from .errors import AvgCaseError, ConfigError, DivergenceError
from .polynomials import expected_metrics

__all__ = [
    "EXIT_COMPARE_FAILED",
    "EXIT_CONFIG",
    "EXIT_OK",
    "EXIT_RUNTIME",
    "cmd_compare",
    "cmd_quadrature",
    "cmd_rates",
    "cmd_run",
    "format_table",
    "run_stream",
]

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_COMPARE_FAILED = 0, 1, 2, 3
METRICS = ("fgap", "gradsq", "distsq")
# objective l of each metric, for the rate theorems
METRIC_L = {"fgap": 1, "gradsq": 2}


def _g17(x):
    return "" if x is None else f"{x:.17g}"


def _safe(label):
    return re.sub(r"[^A-Za-z0-9.=_-]+", "_", label).strip("_")


def run_stream(master_seed, problem_index, seed):
    """Random generator owned by one (problem, seed) run."""
    return np.random.default_rng([master_seed, problem_index, seed])


def _fit(values, window, include_log):
    try:
        fit = rates.fit_slope(values, window, include_log)
    except ValueError:
        return None
    return {"slope": fit.slope, "stderr": fit.stderr, "window": list(fit.window), "shrunk": fit.shrunk}


def _run_task(config, problem_index, seed, out_dir):
    """Build one problem and run every method on it; returns per-method records."""
    spec = config.problems[problem_index]
    rng = run_stream(config.master_seed, problem_index, seed)
    t0 = time.perf_counter()
    problem = spec.build(rng)
    problem.provenance.update(
        {"problem": spec.name, "seed": seed, "master_seed": config.master_seed}
    )
    build_time = time.perf_counter() - t0
    L_ref = spec.reference_L(problem)
    problem.provenance["L_reference"] = L_ref
    records = []
    for method in config.methods:
        rel = Path(_safe(spec.name)) / _safe(method.label) / f"seed{seed}.csv"
        path = Path(out_dir) / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        rec = {"problem": spec.name, "method": method.label, "seed": seed, "file": rel.as_posix()}
        t1 = time.perf_counter()
        try:
            traj = method.run(problem, config.T, L_ref)
            rec["status"] = "ok"
        except DivergenceError as err:
            traj = err.trajectory
            rec.update(status="diverged", last_finite_t=err.last_finite_t, error=str(err))
        except AvgCaseError as err:
            traj = None
            rec.update(status="error", error=f"{type(err).__name__}: {err}")
        rec["wall_time"] = time.perf_counter() - t1
        rec["build_time"] = build_time
        if traj is None:
            rec["file"] = None
            records.append((rec, None))
            continue
        traj.to_csv(path)
        if rec["status"] == "ok":
            rec["slopes"] = {m: _fit(getattr(traj, m), config.window, config.include_log) for m in METRICS}
        records.append((rec, traj))
    return records


def _aggregate(trajs, T):
    """Mean and standard deviation across seeds of the log-metrics per t."""
    cols = {}
    with np.errstate(divide="ignore"):
        for m in METRICS:
            logs = np.log(np.stack([getattr(tr, m) for tr in trajs]))
            cols[m] = (logs.mean(axis=0), logs.std(axis=0))
    buf = io.StringIO()
    names = [f"{s}_log_{m}" for m in METRICS for s in ("mean", "std")]
    buf.write("t,n," + ",".join(names) + "\n")
    for t in range(T + 1):
        vals = [cols[m][k][t] for m in METRICS for k in (0, 1)]
        buf.write(f"{t},{len(trajs)}," + ",".join(_g17(v) for v in vals) + "\n")
    return buf.getvalue()


def _theory(method, spec):
    out = {}
    for metric, l in METRIC_L.items():
        try:
            rs = method.theory(spec.edges, l, spec.gamma_alpha)
        except ValueError:
            rs = None
        out[metric] = None if rs is None else {
            "exponent": rs.exponent, "log_factor": rs.log_factor, "regime": rs.regime,
        }
    return out


def cmd_run(config, output_dir=None, workers=None):
    """Run every (problem, seed) of the suite; returns (manifest, exit code).

    Trajectory CSVs, per-method aggregates and ``manifest.json`` are written
    under the output directory. A diverging run is recorded and its
    siblings proceed.
    """
    out_dir = Path(output_dir or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = workers or config.workers
    tasks = [(i, s) for i in range(len(config.problems)) for s in config.seeds]
    t0 = time.perf_counter()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_task, config, i, s, out_dir) for i, s in tasks]
            results = [f.result() for f in futures]
    else:
        results = [_run_task(config, i, s, out_dir) for i, s in tasks]

    # single-threaded reduction in task order, so output does not depend on workers
    runs, summary = [], []
    for pi, spec in enumerate(config.problems):
        for mi, method in enumerate(config.methods):
            recs = [results[k][mi] for k, (i, _) in enumerate(tasks) if i == pi]
            ok = [tr for rec, tr in recs if rec["status"] == "ok"]
            runs.extend(rec for rec, _ in recs)
            row = {
                "problem": spec.name, "method": method.label, "method_spec": method.to_dict(),
                "n_ok": len(ok), "n_runs": len(recs),
                "n_diverged": sum(rec["status"] == "diverged" for rec, _ in recs),
                "theory": _theory(method, spec),
                "slopes": {},
            }
            for m in METRICS:
                vals = [rec["slopes"][m]["slope"] for rec, _ in recs
                        if rec["status"] == "ok" and rec["slopes"][m] is not None]
                row["slopes"][m] = None if not vals else {
                    "mean": float(np.mean(vals)),
                    "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                    "per_seed": vals,
                }
            if ok:
                rel = Path(_safe(spec.name)) / _safe(method.label) / "aggregate.csv"
                (out_dir / rel).write_text(_aggregate(ok, config.T))
                row["aggregate_file"] = rel.as_posix()
            summary.append(row)

    manifest = {
        "tool": "avgcase",
        "version": __version__,
        "config_hash": config.hash(),
        "config": config.to_dict(),
        "fit": {"window": config.window, "include_log": config.include_log},
        "runs": runs,
        "summary": summary,
        "wall_time": time.perf_counter() - t0,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    failed = any(r["status"] != "ok" for r in runs)
    return manifest, EXIT_RUNTIME if failed else EXIT_OK


def _dist_from_text(text):
    kind, params = parse_spec(text)
    return make_distribution(kind, params)


def _method_from_text(text):
    kind, params = parse_spec(text)
    L = params.pop("L", None)
    L_factor = params.pop("L_factor", 1)
    return MethodSpec(kind, params, float(L_factor), None if L is None else float(L))


def cmd_quadrature(dist_text, method_text, T, objective_ls=(0, 1, 2), n_nodes=None):
    """Expected metrics per t under the limiting spectrum, as CSV text.

    Step-size based methods use the right end of the support as L unless
    the method spec sets ``L`` or ``L_factor``.
    """
    if T < 1:
        raise ConfigError("T must be at least 1")
    for l in objective_ls:
        if l not in (0, 1, 2):
            raise ConfigError(f"objective l must be 0, 1 or 2, got {l}")
    dist = _dist_from_text(dist_text)
    method = _method_from_text(method_text)
    hi = dist.support()[1]
    family = method.family(hi if math.isfinite(hi) else None)
    table = expected_metrics(dist, family, T, n_nodes)
    buf = io.StringIO()
    buf.write("t," + ",".join(f"metric_l{l}" for l in objective_ls) + "\n")
    for t in range(T + 1):
        buf.write(f"{t}," + ",".join(_g17(table[t, l]) for l in objective_ls) + "\n")
    return buf.getvalue()


DEFAULT_RATE_METHODS = ("gcm:alpha=1/2,beta=5/2", "gcm:alpha=1/2,beta=3/2", "nesterov", "gd", "optimal")


def cmd_rates(tau, xi, methods=DEFAULT_RATE_METHODS, objective_l=1):
    """Rows of theoretical exponents at edge exponents (tau, xi)."""
    rows = []
    for text in methods:
        kind, params = parse_spec(text)
        if kind == "optimal":
            if params:
                raise ConfigError("optimal takes no parameters")
            rs, (_, beta) = rates.optimal_exponent(xi, objective_l, tau)
            label = f"gcm(alpha={_frac(tau)},beta={_frac(beta)}) optimal"
            rows.append(_rate_row(label, rs, None))
            continue
        m = MethodSpec(kind, params)
        if kind == "laguerre":
            raise ConfigError("laguerre rates need a Gamma spectrum, not edge exponents")
        rs = m.theory((tau, xi), objective_l)
        worst = None
        if kind == "gcm":
            worst = rates.gcm_worst_exponent(params["alpha"], params["beta"], objective_l).exponent
        rows.append(_rate_row(m.label, rs, worst))
    return rows


def _frac(x):
    f = rates._exact(x)
    return str(f) if f.denominator != 1 else str(f.numerator)


def _rate_row(label, rs, worst):
    return {
        "method": label, "exponent": rs.exponent, "log_factor": rs.log_factor,
        "regime": rs.regime, "rate": str(rs), "worst_exponent": worst,
    }


def rates_csv(rows):
    buf = io.StringIO()
    buf.write("method,exponent,log_factor,regime,worst_exponent\n")
    for r in rows:
        buf.write(f"{r['method']},{_g17(r['exponent'])},{int(r['log_factor'])},{r['regime']},{_g17(r['worst_exponent'])}\n")
    return buf.getvalue()


def heatmap_csv(tau, xi, objective_l=1, n=100, lo=-1, hi=4):
    alphas, betas, exps, logs = rates.gcm_heatmap(tau, xi, objective_l, n, lo, hi)
    buf = io.StringIO()
    buf.write("alpha,beta,exponent,log_factor,converges\n")
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            e = exps[i, j]
            buf.write(f"{_g17(a)},{_g17(b)},{_g17(e)},{int(logs[i, j])},{int(e < 0)}\n")
    return buf.getvalue()


def format_table(rows, columns):
    """Left-aligned text table."""
    cells = [[("" if r[c] is None else str(r[c])) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[k]) for row in cells]) for k, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def cmd_compare(manifest, tol=0.25, log_tol=None, metric="fgap"):
    """Join fitted slopes with theory; returns (report rows, exit code).

    A row passes when ``|mean slope - exponent|`` is within ``tol``
    (``log_tol`` for rates carrying a log factor). Rows without a theory
    are reported as ``no-theory`` and do not fail the comparison; rows with
    any diverged seed are reported as ``diverged`` without a slope and do.
    """
    if metric not in METRIC_L:
        raise ConfigError(f"metric must be one of {sorted(METRIC_L)}, got {metric!r}")
    log_tol = tol if log_tol is None else log_tol
    report = []
    for row in manifest.get("summary", []):
        theory = row.get("theory", {}).get(metric)
        slopes = row.get("slopes", {}).get(metric)
        out = {
            "problem": row["problem"], "method": row["method"],
            "theory": None if theory is None else theory["exponent"],
            "log_factor": None if theory is None else theory["log_factor"],
            "slope": None, "std": None, "delta": None,
        }
        if row.get("n_diverged", 0) > 0:
            out["status"] = "diverged"
        elif slopes is None:
            out["status"] = "no-slope"
        else:
            out["slope"], out["std"] = slopes["mean"], slopes["std"]
            if theory is None:
                out["status"] = "no-theory"
            else:
                out["delta"] = out["slope"] - theory["exponent"]
                limit = log_tol if theory["log_factor"] else tol
                out["status"] = "pass" if abs(out["delta"]) <= limit else "fail"
        report.append(out)
    failed = any(r["status"] in ("fail", "diverged", "no-slope") for r in report)
    return report, EXIT_COMPARE_FAILED if failed else EXIT_OK
