import json
from fractions import Fraction

import numpy as np
import pytest

from avgcase.cli import main
from avgcase.config import load_config, parse_config, parse_spec
from avgcase.errors import ConfigError
from avgcase.harness import cmd_compare, cmd_quadrature, cmd_rates, cmd_run, heatmap_csv, run_stream

TINY = """
[run]
T = {T}
seeds = {seeds}
master_seed = 5
output_dir = "{out}"

[[problems]]
name = "beta"
generator = "spectrum"
d = {d}
distribution = {{ variant = "beta", tau = 0.5, xi = -0.5 }}

{methods}
"""

GD = '[[methods]]\nkind = "gd"\n'
GCM = '[[methods]]\nkind = "gcm"\nalpha = 0.5\nbeta = 1.5\n'
# L below the top eigenvalue makes the residual grow geometrically there
BAD_GCM = '[[methods]]\nkind = "gcm"\nalpha = 0.5\nbeta = 1.5\nL_factor = 0.5\n'
BAD_LABEL = "gcm(alpha=0.5,beta=1.5)@L*0.5"


def write_config(tmp_path, T=10, seeds=(0,), d=5, methods=GD, name="cfg.toml"):
    path = tmp_path / name
    out = (tmp_path / "out").as_posix()
    path.write_text(TINY.format(T=T, seeds=list(seeds), d=d, out=out, methods=methods))
    return path


def test_single_run_row_count(tmp_path):
    cfg = load_config(write_config(tmp_path))
    manifest, code = cmd_run(cfg)
    assert code == 0
    run = manifest["runs"][0]
    lines = (tmp_path / "out" / run["file"]).read_text().splitlines()
    rows = [ln for ln in lines if not ln.startswith("#") and not ln.startswith("t,")]
    assert len(rows) == 11
    assert lines[1] == "t,fgap,gradsq,distsq"
    # 17 significant digits round-trip exactly
    assert all(len(v.split(",")) == 4 for v in rows)


def test_rerun_is_byte_identical(tmp_path):
    path = write_config(tmp_path, T=40, seeds=(0, 1, 2), d=30, methods=GD + GCM)
    cfg = load_config(path)
    cmd_run(cfg, tmp_path / "a")
    cmd_run(cfg, tmp_path / "b", workers=2)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    assert len(files) == 3 * 2 + 2
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_streams_are_independent():
    d = 2000
    x0 = np.stack([run_stream(11, 0, s).standard_normal(d) for s in range(6)])
    corr = np.corrcoef(x0)
    off = corr[~np.eye(6, dtype=bool)]
    assert np.all(np.abs(off) < 3 / np.sqrt(d))


def test_divergence_is_isolated(tmp_path):
    path = write_config(tmp_path, T=1000, seeds=(0, 1), d=50, methods=GD + BAD_GCM)
    manifest, code = cmd_run(load_config(path))
    assert code == 2
    status = {(r["method"], r["seed"]): r for r in manifest["runs"]}
    assert all(status[("gd", s)]["status"] == "ok" for s in (0, 1))
    bad = status[(BAD_LABEL, 0)]
    assert bad["status"] == "diverged" and bad["last_finite_t"] > 0
    gd_rows = (tmp_path / "out" / status[("gd", 0)]["file"]).read_text().splitlines()
    assert len(gd_rows) == 2 + 1001
    report, rc = cmd_compare(manifest)
    by_method = {r["method"]: r for r in report}
    assert by_method[BAD_LABEL]["status"] == "diverged"
    assert by_method[BAD_LABEL]["slope"] is None
    assert rc == 3


def test_manifest_contents(tmp_path):
    path = write_config(tmp_path, T=30, seeds=(0, 1), d=20, methods=GD)
    cfg = load_config(path)
    manifest, _ = cmd_run(cfg)
    on_disk = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert on_disk["config_hash"] == cfg.hash() == manifest["config_hash"]
    for run in on_disk["runs"]:
        assert (tmp_path / "out" / run["file"]).exists()
        assert run["slopes"]["fgap"]["shrunk"]
    row = on_disk["summary"][0]
    assert row["theory"]["fgap"]["exponent"] == -1.5
    assert len(row["slopes"]["fgap"]["per_seed"]) == 2
    assert (tmp_path / "out" / row["aggregate_file"]).exists()


def test_compare_thresholds():
    manifest = {"summary": [
        {"problem": "p", "method": "gd", "n_diverged": 0,
         "theory": {"fgap": {"exponent": -1.5, "log_factor": False, "regime": "gd"}},
         "slopes": {"fgap": {"mean": -1.6, "std": 0.1}}},
        {"problem": "p", "method": "nesterov", "n_diverged": 0,
         "theory": {"fgap": {"exponent": -3.0, "log_factor": True, "regime": "critical"}},
         "slopes": {"fgap": {"mean": -2.75, "std": 0.1}}},
    ]}
    report, code = cmd_compare(manifest, tol=0.15)
    assert [r["status"] for r in report] == ["pass", "fail"] and code == 3
    report, code = cmd_compare(manifest, tol=0.15, log_tol=0.3)
    assert code == 0
    assert cmd_compare({}, tol=0.1) == ([], 0)


def test_config_validation(tmp_path):
    base = {"run": {"T": 5}, "problems": [], "methods": []}
    parse_config(base)
    for bad in (
        {**base, "extra": 1},
        {**base, "run": {"T": 5, "speed": 2}},
        {**base, "run": {"T": 0}},
        {**base, "run": {"T": 5, "seeds": [1, 1]}},
        {**base, "methods": [{"kind": "gcm", "alpha": 0.5}]},
        {**base, "methods": [{"kind": "gcm", "alpha": 0.5, "beta": -2}]},
        {**base, "methods": [{"kind": "adam"}]},
        {**base, "problems": [{"name": "x", "generator": "gram", "d": 0}]},
        {**base, "problems": [{"name": "x", "generator": "spectrum", "d": 3,
                               "distribution": {"variant": "beta", "tau": 0.5}}]},
    ):
        with pytest.raises(ConfigError):
            parse_config(bad)
    path = tmp_path / "bad.toml"
    path.write_text("[run]\nT = 5\nbogus = true\n[[problems]]\n[[methods]]\n")
    assert main(["run", "--config", str(path)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 1


def test_parse_spec():
    assert parse_spec("gcm:alpha=1/2,beta=0.5") == ("gcm", {"alpha": Fraction(1, 2), "beta": Fraction(1, 2)})
    assert parse_spec("gd") == ("gd", {})
    with pytest.raises(ConfigError):
        parse_spec("gcm:alpha")


def test_rates_rows_and_grid():
    rows = cmd_rates(Fraction(1, 2), Fraction(-1, 2), ["gd"])
    assert len(rows) == 1 and rows[0]["exponent"] == -1.5
    lines = heatmap_csv(Fraction(1, 2), Fraction(-1, 2), n=100).splitlines()
    assert lines[0] == "alpha,beta,exponent,log_factor,converges" and len(lines) == 1 + 100 * 100
    cells = [ln.split(",") for ln in lines[1:]]
    best = min(float(c[2]) for c in cells)
    assert best == -3
    assert any(c[0] == "0.5" and c[1] == "1.5" and float(c[2]) == best for c in cells)


def test_quadrature_command():
    text = cmd_quadrature("beta:tau=1/2,xi=-1/2", "gcm:alpha=1/2,beta=3/2", 20)
    lines = text.splitlines()
    assert lines[0] == "t,metric_l0,metric_l1,metric_l2"
    assert len(lines) == 22
    assert float(lines[1].split(",")[1]) == pytest.approx(1.0, rel=1e-13)
    only = cmd_quadrature("mp:r=1", "nesterov", 5, (1,)).splitlines()
    assert only[0] == "t,metric_l1"
    with pytest.raises(ConfigError):
        cmd_quadrature("gamma:alpha=0", "gd", 5)


def test_cli_smoke(tmp_path, capsys):
    assert main(["rates", "--tau", "1/2", "--xi", "-1/2", "--method", "nesterov"]) == 0
    out = capsys.readouterr().out
    assert "t^-3 log t" in out
    assert main(["quadrature", "--dist", "beta:tau=1/2,xi=1/2", "--method", "gd", "-T", "3", "-l", "1"]) == 0
    assert capsys.readouterr().out.startswith("t,metric_l1\n0,")
    path = write_config(tmp_path, T=10, d=5)
    assert main(["run", "--config", str(path)]) == 0
    manifest = tmp_path / "out" / "manifest.json"
    assert main(["compare", "--manifest", str(manifest), "--tol", "100"]) == 0
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    assert main(["compare", "--manifest", str(empty)]) == 0
    assert main(["quadrature", "--dist", "beta:tau=1/2,xi=1/2", "--method", "gd", "-T", "300", "--nodes", "20"]) == 2
