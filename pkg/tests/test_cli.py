import json
import math

import numpy as np
import pytest

from torusfield import io
from torusfield.cli import EXIT_BUDGET, EXIT_OK, EXIT_USAGE, run
from torusfield.covariance import canonical_cov_closed_1d

SAMPLE = ["sample", "--family", "matern", "--dim", "1", "--nu", "1.5", "--rho", "0.2",
          "--sigma2", "1", "--grid-n", "256", "--seed", "7"]


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


# --- sample -----------------------------------------------------------------

def test_sample_writes_field_and_manifest(tmp_path):
    out = tmp_path / "f.csv"
    assert run(SAMPLE + ["--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# torus-field v1")
    assert len(lines) == 1 + 256
    man = io.read_json(tmp_path / "f.json")
    assert man["command"] == "sample"
    assert man["config"]["seed"] == 7 and man["config"]["nu"] == 1.5
    field = io.read_field(out)
    assert field.n == 256 and field.dim == 1
    assert field.provenance["seed"] == 7


def test_sample_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a" / "f.csv", tmp_path / "b" / "f.csv"
    a.parent.mkdir()
    b.parent.mkdir()
    assert run(SAMPLE + ["--out", str(a)]) == EXIT_OK
    assert run(SAMPLE + ["--out", str(b)]) == EXIT_OK
    assert _read_bytes(a) == _read_bytes(b)


def test_sample_thread_count_does_not_change_output(tmp_path, monkeypatch):
    outs = []
    for t in ("1", "4"):
        monkeypatch.setenv("TORUS_FIELD_THREADS", t)
        p = tmp_path / f"f{t}.csv"
        assert run(SAMPLE + ["--out", str(p)]) == EXIT_OK
        outs.append(_read_bytes(p))
    assert outs[0] == outs[1]


def test_negative_nu_is_usage_error(tmp_path, capsys):
    argv = [a if a != "1.5" else "-1" for a in SAMPLE]
    assert run(argv + ["--out", str(tmp_path / "f.csv")]) == EXIT_USAGE
    assert "--nu" in capsys.readouterr().err
    assert not (tmp_path / "f.csv").exists()


@pytest.mark.parametrize("extra, flag", [
    (["--rho", "0.2", "--kappa", "3"], "--rho"),
    (["--grid-n", "1"], "--grid-n"),
    (["--seed", "-3"], "--seed"),
    (["--grid-n", "many"], "--grid-n"),
    (["--sigma2", "0"], "--sigma2"),
])
def test_sample_validation_names_flag(tmp_path, capsys, extra, flag):
    argv = ["sample", "--family", "matern", "--nu", "1.5"]
    if "--rho" not in extra:
        argv += ["--rho", "0.2"]
    assert run(argv + extra + ["--out", str(tmp_path / "f.csv")]) == EXIT_USAGE
    assert flag in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "matern", "nu": 1.5, "rho": 0.2, "grid-n": 64,
                               "seed": 3}))
    out = tmp_path / "f.csv"
    assert run(["sample", "--config", str(cfg), "--seed", "11", "--out", str(out)]) == EXIT_OK
    man = io.read_json(tmp_path / "f.json")
    assert man["config"]["seed"] == 11
    assert man["config"]["grid_n"] == 64
    assert io.read_field(out).n == 64


def test_config_unknown_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nu": 1.5, "rho": 0.2, "bogus": 1}))
    assert run(["sample", "--config", str(cfg), "--out", str(tmp_path / "f.csv")]) == EXIT_USAGE
    assert "bogus" in capsys.readouterr().err


def test_missing_config_file_is_usage_error(tmp_path, capsys):
    assert run(["sample", "--config", str(tmp_path / "none.json")]) == EXIT_USAGE
    assert "--config" in capsys.readouterr().err


# --- cov --------------------------------------------------------------------

def test_cov_canonical_spectral_matches_closed(tmp_path):
    out = tmp_path / "c.csv"
    argv = ["cov", "--family", "canonical", "--dim", "1", "--method", "spectral",
            "--lag-grid", "64", "--out", str(out)]
    assert run(argv) == EXIT_OK
    comments, cols, rows = io.read_table(out)
    assert cols == ["lag_1", "value", "certified_bound", "method", "cutoff"]
    assert len(rows) == 64
    worst = max(abs(r[1] - canonical_cov_closed_1d(r[0])) for r in rows)
    assert worst <= 1e-8


def test_cov_canonical_all_routes_agree(tmp_path):
    out = tmp_path / "c.csv"
    argv = ["cov", "--family", "canonical", "--method", "all", "--lags", "0,0.1,0.37,0.5",
            "--out", str(out)]
    assert run(argv) == EXIT_OK
    man = io.read_json(tmp_path / "c.json")
    assert man["summary"]["max_disagreement"] <= 1e-8
    assert man["summary"]["within_bounds"] is True


def test_cov_matern_all_within_bounds(tmp_path):
    out = tmp_path / "c.csv"
    argv = ["cov", "--family", "matern", "--nu", "0.5", "--rho", "0.2", "--method", "all",
            "--lag-grid", "16", "--tol", "1e-6", "--out", str(out)]
    assert run(argv) == EXIT_OK
    comments, cols, rows = io.read_table(out)
    assert {r[3] for r in rows} == {"spectral", "periodized"}
    assert any(c.startswith("max_disagreement=") and c.endswith("within_bounds=True")
               for c in comments)
    series = {r[0]: r for r in rows if r[3] == "spectral"}
    per = {r[0]: r for r in rows if r[3] == "periodized"}
    for lag in series:
        gap = abs(series[lag][1] - per[lag][1])
        assert gap <= series[lag][2] + per[lag][2] + 1e-13
    # the closed form of the periodized exponential kernel
    for lag, r in per.items():
        exact = math.cosh((0.5 - lag) / 0.2) / math.cosh(0.5 / 0.2)
        assert abs(r[1] - exact) <= r[2] + 1e-13


def test_cov_json_variant(tmp_path):
    out = tmp_path / "c.json"
    argv = ["cov", "--family", "matern", "--nu", "1.5", "--rho", "0.2", "--method", "all",
            "--lags", "0,0.25", "--format", "json", "--tol", "1e-6", "--out", str(out)]
    assert run(argv) == EXIT_OK
    rep = io.read_json(out)
    assert rep["model"]["family"] == "matern" and rep["model"]["nu"] == 1.5
    assert len(rep["rows"]) == 4
    assert {"lag", "value", "certified_bound", "method", "cutoff"} <= set(rep["rows"][0])
    assert rep["summary"]["within_bounds"] is True
    assert (tmp_path / "c.manifest.json").exists()


def test_cov_two_dimensional_lags(tmp_path):
    out = tmp_path / "c.csv"
    argv = ["cov", "--family", "matern", "--dim", "2", "--nu", "2.5", "--rho", "0.2",
            "--lags", "0:0,0.1:0.2,0.3", "--tol", "1e-6", "--out", str(out)]
    assert run(argv) == EXIT_OK
    _, cols, rows = io.read_table(out)
    assert cols[:2] == ["lag_1", "lag_2"]
    assert [r[:2] for r in rows] == [[0.0, 0.0], [0.1, 0.2], [0.3, 0.0]]


def test_cov_empty_lag_list_is_usage_error(tmp_path, capsys):
    argv = ["cov", "--family", "canonical", "--lags", "", "--out", str(tmp_path / "c.csv")]
    assert run(argv) == EXIT_USAGE
    assert "--lags" in capsys.readouterr().err


def test_cov_unavailable_route_is_usage_error(tmp_path, capsys):
    argv = ["cov", "--family", "matern", "--nu", "1.5", "--rho", "0.2", "--method", "closed",
            "--lags", "0", "--out", str(tmp_path / "c.csv")]
    assert run(argv) == EXIT_USAGE
    assert "--method" in capsys.readouterr().err


def test_cov_budget_failure_exit_3(tmp_path, capsys):
    argv = ["cov", "--family", "matern", "--nu", "0.5", "--rho", "0.2", "--lags", "0.1",
            "--tol", "1e-12", "--max-cutoff", "8", "--out", str(tmp_path / "c.csv")]
    assert run(argv) == EXIT_BUDGET
    err = capsys.readouterr().err
    assert "budget" in err and "0.1" in err


# --- spde -------------------------------------------------------------------

def test_spde_matern_white_noise_table(tmp_path):
    out = tmp_path / "s.csv"
    argv = ["spde", "--symbol", "matern", "--dim", "1", "--nu", "2", "--kappa", "1.5",
            "--radius", "64", "--out", str(out)]
    assert run(argv) == EXIT_OK
    _, cols, rows = io.read_table(out)
    assert cols == ["k_1", "symbol_abs", "mu_X", "mu_U"]
    assert len(rows) == 129
    for k, _, _, mu in rows:
        exact = (2 * math.pi) ** -1 * (1.5**2 + k * k) ** -2.0
        assert mu == pytest.approx(exact, rel=4 * np.finfo(float).eps)
    man = io.read_json(tmp_path / "s.json")
    assert man["result"]["status"] == "solution"
    assert man["result"]["unique"] is True


def test_spde_zero_at_origin_reports_no_solution(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["spde", "--symbol", "norm", "--dim", "2", "--radius", "8",
                "--out", str(out)]) == EXIT_OK
    comments, _, rows = io.read_table(out)
    assert rows == []
    assert "status=no-solution" in comments[0] and "k=(0, 0)" in comments[0]
    man = io.read_json(tmp_path / "s.json")
    assert man["result"]["status"] == "no-solution"
    assert man["result"]["k"] == [0, 0]


def test_spde_canonical_forcing_with_norm_symbol(tmp_path):
    # the forcing also vanishes at k = 0, so the origin is admissible but not unique
    out = tmp_path / "s.csv"
    assert run(["spde", "--symbol", "norm", "--forcing", "canonical", "--radius", "4",
                "--out", str(out)]) == EXIT_OK
    man = io.read_json(tmp_path / "s.json")
    res = man["result"]
    assert res["status"] == "solution"
    assert res["unique"] is False
    assert res["zero_set"] == [[0]]


def test_spde_uniqueness_flag_iff_zero_free(tmp_path):
    for symbol, expected in (("identity", True), ("matern", True)):
        out = tmp_path / f"{symbol}.csv"
        assert run(["spde", "--symbol", symbol, "--radius", "6", "--out", str(out)]) == EXIT_OK
        _, _, rows = io.read_table(out)
        zero_free = all(r[1] > 0 for r in rows)
        assert io.read_json(tmp_path / f"{symbol}.json")["result"]["unique"] is zero_free
        assert zero_free is expected


# --- verify-kernel ----------------------------------------------------------

def test_verify_kernel_singularity_example(tmp_path):
    out = tmp_path / "k.json"
    argv = ["verify-kernel", "--order", "0.5", "--N", "2", "--out", str(out)]
    assert run(argv) == EXIT_OK
    rep = io.read_json(out)
    assert rep["passed"] is True
    again = tmp_path / "k2.json"
    assert run(argv[:-1] + [str(again)]) == EXIT_OK
    assert _read_bytes(out) == _read_bytes(again)


def test_verify_kernel_holder_example(tmp_path):
    out = tmp_path / "k.json"
    assert run(["verify-kernel", "--order", "-2.5", "--N", "-1", "--out", str(out)]) == EXIT_OK
    assert io.read_json(out)["passed"] is True


def test_verify_kernel_threshold_violation(tmp_path, capsys):
    out = tmp_path / "k.json"
    assert run(["verify-kernel", "--order", "0.5", "--N", "1", "--out", str(out)]) == EXIT_USAGE
    assert "--N" in capsys.readouterr().err


def test_verify_kernel_requires_order(tmp_path, capsys):
    assert run(["verify-kernel", "--N", "2", "--out", str(tmp_path / "k.json")]) == EXIT_USAGE
    assert "--order" in capsys.readouterr().err


# --- discrete-canonical -----------------------------------------------------

def test_discrete_canonical_table(tmp_path):
    out = tmp_path / "d.csv"
    assert run(["discrete-canonical", "--k", "1", "--n-list", "64,128,256,512",
                "--out", str(out)]) == EXIT_OK
    _, cols, rows = io.read_table(out)
    assert cols[0] == "n" and "ratio_unit" in cols
    assert [r[0] for r in rows] == [64, 128, 256, 512]
    ratios = [r[cols.index("ratio_unit")] for r in rows]
    assert all(abs(1 - a) > abs(1 - b) for a, b in zip(ratios, ratios[1:]))
    order = io.read_json(tmp_path / "d.json")["report"]["order"]
    assert abs(order - 2.0) <= 0.2


def test_discrete_canonical_zero_frequency(tmp_path, capsys):
    assert run(["discrete-canonical", "--k", "0", "--out", str(tmp_path / "d.csv")]) == EXIT_USAGE
    assert "--k" in capsys.readouterr().err


# --- analyze ----------------------------------------------------------------

def test_analyze_input_field(tmp_path):
    field = tmp_path / "f.csv"
    assert run(["sample", "--family", "matern", "--nu", "0.5", "--rho", "0.5", "--grid-n",
                "4096", "--seed", "1", "--out", str(field)]) == EXIT_OK
    rep_path = tmp_path / "r.json"
    assert run(["analyze", "--input", str(field), "--out", str(rep_path)]) == EXIT_OK
    rep = io.read_json(rep_path)
    assert abs(rep["alpha_hat"] - 0.5) < 0.15
    assert rep["paper_exponent"] == pytest.approx(-1.0)
    assert rep["spectral_tail_exponent"] == pytest.approx(0.5)


def test_analyze_model_report(tmp_path):
    rep_path = tmp_path / "r.json"
    argv = ["analyze", "--family", "matern", "--nu", "0.5", "--rho", "0.5", "--grid-n", "1024",
            "--seeds", "0:15", "--out", str(rep_path)]
    assert run(argv) == EXIT_OK
    rep = io.read_json(rep_path)
    assert {"alpha_hat", "stderr", "paper_exponent", "spectral_tail_exponent", "summary"} <= set(rep)
    assert "DISCREPANCY" in rep["summary"]
    assert rep["seeds"] == list(range(16))


def test_analyze_too_few_seeds(tmp_path, capsys):
    argv = ["analyze", "--family", "matern", "--nu", "0.5", "--rho", "0.5", "--seeds", "0:3",
            "--out", str(tmp_path / "r.json")]
    assert run(argv) == EXIT_USAGE
    assert "--seeds" in capsys.readouterr().err


# --- rerun ------------------------------------------------------------------

RERUN_CASES = [
    (SAMPLE, "f.csv", "f.json"),
    (["cov", "--family", "canonical", "--method", "all", "--lag-grid", "8"], "c.csv", "c.json"),
    (["cov", "--family", "matern", "--nu", "1.5", "--rho", "0.2", "--lags", "0,0.3",
      "--format", "json"], "c.json", "c.manifest.json"),
    (["spde", "--symbol", "matern", "--radius", "8"], "s.csv", "s.json"),
    (["verify-kernel", "--order", "-3", "--N", "0", "--ladder", "3:6", "--cutoffs", "10:12"],
     "k.json", "k.manifest.json"),
    (["discrete-canonical", "--k", "2"], "d.csv", "d.json"),
]


@pytest.mark.parametrize("argv, name, manifest", RERUN_CASES,
                         ids=["sample", "cov", "cov-json", "spde", "verify-kernel",
                              "discrete-canonical"])
def test_rerun_reproduces_bytes(tmp_path, argv, name, manifest):
    out = tmp_path / name
    assert run(argv + ["--out", str(out)]) == EXIT_OK
    before = _read_bytes(out)
    man_before = _read_bytes(tmp_path / manifest)
    out.unlink()
    assert run(["rerun", str(tmp_path / manifest)]) == EXIT_OK
    assert _read_bytes(out) == before
    assert _read_bytes(tmp_path / manifest) == man_before


def test_rerun_bad_manifest(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"command": "fly"}))
    assert run(["rerun", str(bad)]) == EXIT_USAGE
    assert "fly" in capsys.readouterr().err
