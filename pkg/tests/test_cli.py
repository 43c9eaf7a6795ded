"""Command-line driver: CSV output, determinism, config files, exit codes."""

import json
import os

import numpy as np
import pytest

from robustcp import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def stump_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, 80)
    y = (x > 0.4).astype(float) + 0.1 * rng.standard_normal(80)
    path = tmp_path / "stump.csv"
    np.savetxt(path, np.column_stack([x, y]), delimiter=",")
    return str(path)


@pytest.fixture
def plane_csv(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((60, 2))
    y = np.where(x[:, 0] <= 0, 1.0, -1.0) + 0.2 * rng.standard_normal(60)
    path = tmp_path / "plane.csv"
    np.savetxt(path, np.column_stack([x, y]), delimiter=",")
    return str(path)


def test_no_command_exits_1(capsys):
    code, _, _ = run_cli([], capsys)
    assert code == 1


def test_unknown_flag_exits_1(capsys):
    code, _, _ = run_cli(["quantiles", "--mu", "1", "--no-such-flag"], capsys)
    assert code == 1


def test_quantiles_stdout_and_determinism(capsys):
    argv = ["quantiles", "--mu", "1", "--criterion", "l2", "--laws", "normal",
            "--reps", "10000", "--seed", "3"]
    code, out1, _ = run_cli(argv, capsys)
    assert code == 0
    code, out2, _ = run_cli(argv, capsys)
    assert code == 0
    assert out1 == out2
    lines = out1.strip().split("\n")
    assert lines[0].startswith("# command=quantiles version=")
    assert lines[2] == "law,q90,q95,q975,q99,q995"
    assert lines[3].startswith("normal,")


def test_quantiles_rejects_small_budget(tmp_path, capsys):
    out = tmp_path / "q.csv"
    code, _, err = run_cli(["quantiles", "--mu", "1", "--reps", "100",
                            "-o", str(out)], capsys)
    assert code == 1
    assert "config error" in err
    # a failed run leaves neither the output nor a partial file behind
    assert not out.exists()
    assert not list(tmp_path.glob("*.part"))


def test_unknown_law_exits_1(capsys):
    code, _, err = run_cli(["quantiles", "--mu", "1", "--laws", "cauchy",
                            "--reps", "10000"], capsys)
    assert code == 1
    assert "config error" in err


def test_stump_fit_output_matches_library(stump_csv, tmp_path, capsys):
    out = tmp_path / "fit.csv"
    code, _, _ = run_cli(["stump-fit", "--data", stump_csv, "--criterion", "l2",
                          "-o", str(out)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[1] == "alpha_hat,beta_hat,d_hat,d_lo,d_hi,criterion_value"
    alpha, beta, d_hat = (float(v) for v in lines[2].split(",")[:3])
    from robustcp import CriterionSpec, Dataset1D, fit_stump
    data = np.loadtxt(stump_csv, delimiter=",")
    fit = fit_stump(Dataset1D(data[:, 0], data[:, 1]), CriterionSpec.l2())
    assert alpha == pytest.approx(fit.alpha_hat)
    assert beta == pytest.approx(fit.beta_hat)
    assert d_hat == pytest.approx(fit.d_hat)


def test_stump_fit_rejects_wide_data(plane_csv, capsys):
    code, _, err = run_cli(["stump-fit", "--data", plane_csv], capsys)
    assert code == 1
    assert "config error" in err


def test_missing_data_file_is_runtime_error(capsys):
    code, _, err = run_cli(["stump-fit", "--data", "/nonexistent/x.csv"], capsys)
    assert code == 2
    assert "runtime error" in err


def test_cpp_tails_reports_slope(tmp_path, capsys):
    out = tmp_path / "tails.csv"
    code, _, _ = run_cli(["cpp-tails", "--delta", "1", "--criterion", "l1",
                          "--law", "t3", "--reps", "20000", "-o", str(out)], capsys)
    assert code == 0
    text = out.read_text()
    assert "# log10_survival_slope=" in text
    assert "x,survival,half_width" in text


def test_parallel_rates_row_count(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    code, _, _ = run_cli(["parallel-rates", "--grid-m", "2,4", "--n", "300",
                          "--reps", "2", "-o", str(out)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[1] == "criterion,m,n,gamma,norm_logm_median,norm_mgamma_median,replications,seed"
    assert len(lines) == 2 + 4  # header rows + (2 criteria x 2 grid points)


def test_plane_fit_csv(plane_csv, tmp_path, capsys):
    out = tmp_path / "plane_fit.csv"
    code, _, _ = run_cli(["plane-fit", "--data", plane_csv, "--search", "restarts",
                          "--restarts", "20", "-o", str(out)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[1] == "alpha_hat,beta_hat,criterion_value,d0,d1"
    values = [float(v) for v in lines[2].split(",")]
    assert len(values) == 5
    # canonical ordering of the fitted levels
    assert values[0] >= values[1]


def test_sparse_plane_csv(tmp_path, capsys):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((150, 6))
    y = np.where(x[:, 1] <= 0, 1.0, -1.0)
    path = tmp_path / "sparse.csv"
    np.savetxt(path, np.column_stack([x, y]), delimiter=",")
    out = tmp_path / "sparse_fit.csv"
    code, _, _ = run_cli(["sparse-plane", "--data", str(path), "--criterion", "l2",
                          "-o", str(out)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    row = lines[2].split(",")
    assert int(row[0]) == 1  # selected_m
    assert row[1] == "1"  # support


def test_curvature_check_csv(capsys):
    code, out, _ = run_cli(["curvature-check", "--criterion", "huber1", "--mu", "0.3",
                            "--law", "normal", "--reps", "20000"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[1] == "lhs,rhs,lhs_se,rhs_se"
    lhs, rhs, lhs_se, _ = (float(v) for v in lines[2].split(","))
    assert lhs >= rhs - 3 * lhs_se


def test_config_file_expansion(tmp_path, capsys):
    cfg = {"command": "quantiles",
           "parameters": {"mu": 1.0, "criterion": "l2", "laws": "normal",
                          "reps": 10000, "seed": 3}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out_cfg, _ = run_cli(["--config", str(path)], capsys)
    assert code == 0
    code, out_flags, _ = run_cli(["quantiles", "--mu", "1", "--criterion", "l2",
                                  "--laws", "normal", "--reps", "10000", "--seed", "3"], capsys)
    assert code == 0
    assert out_cfg == out_flags


def test_config_file_validation(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"parameters": {}}))
    code, _, err = run_cli(["--config", str(path)], capsys)
    assert code == 1
    assert "config error" in err
    code, _, _ = run_cli(["--config"], capsys)
    assert code == 1


def test_output_written_atomically(tmp_path, capsys, stump_csv):
    out = tmp_path / "atomic.csv"
    code, _, _ = run_cli(["stump-fit", "--data", stump_csv, "-o", str(out)], capsys)
    assert code == 0
    assert out.exists()
    assert not list(tmp_path.glob("*.part"))
