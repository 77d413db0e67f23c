import csv
import io
import json
import subprocess
import sys

import pytest

from pcombine.cli import main
from pcombine.combine import combine
from pcombine.thresholds import decide, threshold


def _strict_json(text):
    def bad_constant(name):
        raise ValueError(f"non-standard JSON constant {name}")

    return json.loads(text, parse_constant=bad_constant)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def pfile(tmp_path):
    def make(values, name="p.txt"):
        f = tmp_path / name
        f.write_text("".join(f"{v!r}\n" for v in values))
        return f

    return make


# --- combine ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "values, kind, family, reject",
    [
        ([0.001, 0.999], "pcct", "approx", True),
        ([0.001, 0.999], "cct", "approx", False),
        ([0.5], "pcct", "approx", False),
        ([0.5], "cct", "approx", False),
        ([0.5], "bonferroni", None, False),
        ([0.5, 0.5, 0.5], "hmp", "vwd", False),
        ([0.5, 0.5, 0.5], "pcct", "vad", False),
    ],
)
def test_combine_fixtures(capsys, pfile, values, kind, family, reject):
    argv = ["combine", pfile(values), "--kind", kind] + (["--family", family] if family else [])
    code, out, _ = run(capsys, *argv)
    assert code == 0
    rep = _strict_json(out)
    assert rep["reject"] is reject
    if family == "approx":
        assert 0 < rep["approx_pvalue"] <= 1
    else:
        assert rep["approx_pvalue"] is None


@pytest.mark.parametrize("kind, family", [("cct", "approx"), ("pcct", "vwd"), ("hmp", "vad"), ("bonferroni", None)])
def test_combine_round_trip_with_library(capsys, pfile, kind, family):
    values = [0.003, 0.2, 0.41, 0.97, 0.6, 0.05, 0.5, 0.33]
    argv = ["combine", pfile(values), "--kind", kind, "--alpha", "0.05"] + (["--family", family] if family else [])
    code, out, _ = run(capsys, *argv)
    rep = _strict_json(out)
    lib = decide(combine(values, kind), threshold(kind, family, len(values), 0.05))
    assert code == 0
    assert rep["reject"] == lib.reject
    assert rep["statistic"] == lib.statistic
    assert rep["mean_scale_threshold"] == lib.mean_scale_threshold


def test_combine_csv_output_full_precision(capsys, pfile):
    code, out, _ = run(capsys, "combine", pfile([0.1, 0.2, 0.3]), "--kind", "hmp", "--family", "vwd", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    lib = combine([0.1, 0.2, 0.3], "hmp")
    assert float(rows[0]["statistic"]) == lib.statistic
    assert rows[0]["reject"] in ("0", "1")


def test_combine_bad_file_exit_2(capsys, pfile):
    code, _, err = run(capsys, "combine", pfile([0.5, 1.5]), "--kind", "cct", "--family", "approx")
    assert code == 2
    assert ":2:" in err


def test_combine_missing_file_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, "combine", tmp_path / "nope.txt", "--kind", "cct", "--family", "approx")
    assert code == 2


def test_combine_domain_error_exit_3(capsys, pfile):
    code, _, err = run(capsys, "combine", pfile([0.3, 0.4]), "--kind", "cct", "--family", "vad", "--alpha", "0.7")
    assert code == 3
    assert "error" in err


def test_combine_unsupported_pair_exit_3(capsys, pfile):
    code, _, _ = run(capsys, "combine", pfile([0.3, 0.4]), "--kind", "hmp", "--family", "approx")
    assert code == 3
    code, _, _ = run(capsys, "combine", pfile([0.3, 0.4]), "--kind", "bonferroni", "--family", "vwd")
    assert code == 3
    code, _, _ = run(capsys, "combine", pfile([0.3, 0.4]), "--kind", "pcct")
    assert code == 3


def test_combine_zero_needs_sanitize(capsys, pfile):
    f = pfile([0.0, 0.5])
    assert run(capsys, "combine", f, "--kind", "pcct", "--family", "approx")[0] == 2
    code, out, _ = run(capsys, "combine", f, "--kind", "pcct", "--family", "approx", "--sanitize")
    assert code == 0 and _strict_json(out)["reject"]


def test_threshold_lookup(capsys):
    code, out, _ = run(capsys, "threshold", "--kind", "pcct", "--family", "vwd", "--k", 1000, "--alpha", 0.05)
    assert code == 0
    d = _strict_json(out)
    assert d["mean_scale_threshold"] == threshold("pcct", "vwd", 1000, 0.05).mean_scale_threshold
    assert set(d["diagnostics"]) == {"stable_quantile", "delta", "scale"}


# --- tables -------------------------------------------------------------------------


def _table(capsys, which, *extra):
    code, out, _ = run(capsys, "tables", which, *extra)
    rows = list(csv.DictReader(io.StringIO(out)))
    return code, {int(r["K"]): r for r in rows}


def test_tables_a1_cell(capsys):
    code, rows = _table(capsys, "A1", "--k-grid", "10,1000")
    assert code == 0
    assert float(rows[1000]["hmp@0.01"]) == pytest.approx(1.4637, abs=5e-4)


def test_tables_a2_cell_and_cct_row(capsys):
    code, rows = _table(capsys, "A2", "--k-grid", "100,100000000")
    assert code == 0
    assert float(rows[10**8]["pcct@0.001"]) == pytest.approx(1.0251, abs=2e-3)
    for r in rows.values():
        assert all(float(r[f"cct@{a}"]) == 1.0 for a in ("0.05", "0.01", "0.001"))


def test_tables_json_is_strict(capsys):
    code, out, _ = run(capsys, "tables", "a1", "--k-grid", "10", "--format", "json")
    assert code == 0
    d = _strict_json(out)
    assert d["columns"][0] == "K" and len(d["rows"]) == 1 and d["errors"] == []


def test_tables_failed_cell_sets_exit_code(capsys):
    code, out, err = run(capsys, "tables", "A1", "--k-grid", "2", "--alpha-grid", "0.5", "--kinds", "hmp")
    assert code == 3
    assert "K=2" in err
    assert list(csv.reader(io.StringIO(out)))[1] == ["2", ""]


# --- simulate -----------------------------------------------------------------------


def _config(tmp_path, plans, **top):
    cfg = {"version": 1, "plans": plans, **top}
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps(cfg))
    return f


PLAN = {
    "name": "ar1",
    "K": 200,
    "covariance": {"kind": "ar1", "rho": 0.2},
    "methods": ["cct:vwd", "pcct:vwd", "pcct:vad", "bonferroni"],
    "replicates": 1500,
    "seed": 99,
}


def test_simulate_same_seed_byte_identical(capsys, tmp_path):
    cfg = _config(tmp_path, [PLAN])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", cfg, "--out", a, "--threads", 1)[0] == 0
    assert run(capsys, "simulate", cfg, "--out", b, "--threads", 8)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(io.StringIO(a.read_text())))
    assert [r["method"] for r in rows] == PLAN["methods"]
    assert all(float(r["ci_low"]) <= float(r["frequency"]) <= float(r["ci_high"]) for r in rows)


def test_simulate_single_replicate(capsys, tmp_path):
    cfg = _config(tmp_path, [dict(PLAN, replicates=1)])
    code, out, _ = run(capsys, "simulate", cfg)
    assert code == 0
    assert {float(r["frequency"]) for r in csv.DictReader(io.StringIO(out))} <= {0.0, 1.0}


def test_simulate_json_and_power_grid(capsys, tmp_path):
    plan = dict(PLAN, signal={"pattern": "sparse", "sign_mode": "half_negative"}, strengths=[0.0, 2.0],
                replicates=300)
    code, out, _ = run(capsys, "simulate", _config(tmp_path, [plan]), "--format", "json")
    assert code == 0
    d = _strict_json(out)
    assert [r["plan"]["signal"]["strength"] for r in d["reports"]] == [0.0, 2.0]


@pytest.mark.parametrize(
    "mutate, pointer",
    [
        (lambda c: c["plans"][0].pop("seed"), "/plans/0"),
        (lambda c: c["plans"][0].update(K=0), "/plans/0/K"),
        (lambda c: c["plans"][0].update(extra=1), "/plans/0"),
        (lambda c: c["plans"][0].update(methods=["pcct:foo"]), "/plans/0/methods/0"),
        (lambda c: c["plans"][0]["covariance"].update(kind="toeplitz"), "/plans/0/covariance/kind"),
        (lambda c: c.update(version=2), "/version"),
    ],
)
def test_simulate_schema_errors(capsys, tmp_path, mutate, pointer):
    cfg = {"version": 1, "plans": [json.loads(json.dumps(PLAN))]}
    mutate(cfg)
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "simulate", f)
    assert code == 2
    assert f"{pointer}:" in err


def test_simulate_invalid_json(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"version": 1,\n "plans": [}\n')
    code, _, err = run(capsys, "simulate", f)
    assert code == 2
    assert "bad.json:2:" in err


def test_simulate_domain_error(capsys, tmp_path):
    cfg = _config(tmp_path, [dict(PLAN, covariance={"kind": "ar1", "rho": 1.0})])
    assert run(capsys, "simulate", cfg)[0] == 3


# --- regions ------------------------------------------------------------------------


def test_regions_csv_and_summary(capsys, tmp_path):
    f = tmp_path / "gwas.csv"
    lines = ["snp,p"] + [f"rs{i},{0.5 if i != 13 else 1e-15}" for i in range(25)]
    f.write_text("\n".join(lines) + "\n")
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "regions", f, "--k", 10, "--id-column", "snp",
                       "--methods", "bonferroni,pcct:vwd", "--summary", summary)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["first_id"], r["last_id"], r["short"]) for r in rows] == [
        ("rs0", "rs9", "0"), ("rs10", "rs19", "0"), ("rs20", "rs24", "1")]
    assert [r["pcct:vwd"] for r in rows] == ["0", "1", "0"]
    s = _strict_json(summary.read_text())
    assert s["significant_regions"] == {"bonferroni": 1, "pcct:vwd": 1}


def test_regions_bad_input(capsys, tmp_path):
    f = tmp_path / "x.txt"
    f.write_text("0.1\n0.2\n-3\n")
    code, _, err = run(capsys, "regions", f, "--k", 2)
    assert code == 2 and "x.txt:3:" in err


def test_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "pcombine.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "pcombine" in res.stdout
