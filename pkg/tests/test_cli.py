import io
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from knninfo import distributions as D
from knninfo.cli import EXIT_DATA, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, main
from knninfo.report_io import save_samples

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def usage_code(*argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv), out=io.StringIO())
    return exc.value.code


@pytest.fixture
def uniform_file(tmp_path):
    p = tmp_path / "u.csv"
    save_samples(D.Uniform01(1).sample(2000, seed=1).data, p)
    return p


def value_of(text):
    return float(text.splitlines()[0].split(":")[1].split()[0])


def test_entropy_uniform(uniform_file):
    code, out = run("entropy", "--input", str(uniform_file), "--k", "3")
    assert code == EXIT_OK
    assert math.isfinite(value_of(out)) and abs(value_of(out)) < 0.1
    assert "mean_epsilon" in out


def test_entropy_truncate_default_beta(tmp_path):
    p = tmp_path / "g.csv"
    save_samples(D.GaussianStd(2).sample(500, seed=2).data, p)
    code, out = run("entropy", "--input", str(p), "--truncate")
    assert code == EXIT_OK
    assert "beta: 0.25" in out and "A: 1.0" in out


def test_entropy_options(uniform_file):
    code, out = run("entropy", "--input", str(uniform_file), "--truncate", "--A", "2", "--beta", "0.2",
                    "--metric", "linf")
    assert code == EXIT_OK and "beta: 0.2" in out and "metric: linf" in out


def test_entropy_usage_errors(uniform_file):
    assert usage_code("entropy", "--input", str(uniform_file), "--k", "0") == EXIT_USAGE
    assert usage_code("entropy", "--input", str(uniform_file), "--bogus") == EXIT_USAGE
    assert usage_code("entropy") == EXIT_USAGE
    assert usage_code() == EXIT_USAGE
    code, _ = run("entropy", "--input", str(uniform_file), "--A", "2")
    assert code == EXIT_USAGE


def test_entropy_data_errors(tmp_path, uniform_file):
    assert run("entropy", "--input", str(tmp_path / "missing.csv"))[0] == EXIT_DATA
    bad = tmp_path / "bad.csv"
    bad.write_text("1\n2\nabc\n")
    assert run("entropy", "--input", str(bad))[0] == EXIT_DATA
    dup = tmp_path / "dup.csv"
    dup.write_text("1\n1\n2\n3\n")
    assert run("entropy", "--input", str(dup), "--k", "1")[0] == EXIT_DATA
    assert run("entropy", "--input", str(uniform_file), "--truncate", "--beta", "1.5")[0] == EXIT_DATA


@pytest.fixture
def mi_files(tmp_path):
    x, y = D.JointGaussianEquicorr(1, 2, 0.6).sample(1000, seed=3)
    save_samples(x.data, tmp_path / "x.csv")
    save_samples(y.data, tmp_path / "y.csv")
    save_samples(np.hstack([x.data, y.data]), tmp_path / "xy.csv")
    return tmp_path


def test_mi_two_files_and_split_agree(mi_files):
    code, a = run("mi", "--x", str(mi_files / "x.csv"), "--y", str(mi_files / "y.csv"), "--k", "3")
    assert code == EXIT_OK
    code, b = run("mi", "--input", str(mi_files / "xy.csv"), "--dx", "1")
    assert code == EXIT_OK
    assert value_of(a) == value_of(b)
    assert abs(value_of(a) - D.true_mi(D.JointGaussianEquicorr(1, 2, 0.6))) < 0.1


def test_mi_errors(mi_files, tmp_path):
    save_samples(np.arange(999.0), tmp_path / "short.csv")
    assert run("mi", "--x", str(mi_files / "x.csv"), "--y", str(tmp_path / "short.csv"))[0] == EXIT_DATA
    assert run("mi", "--x", str(mi_files / "x.csv"))[0] == EXIT_USAGE
    assert run("mi", "--input", str(mi_files / "xy.csv"))[0] == EXIT_USAGE
    assert run("mi", "--x", str(mi_files / "x.csv"), "--y", str(mi_files / "y.csv"),
               "--input", str(mi_files / "xy.csv"), "--dx", "1")[0] == EXIT_USAGE
    assert run("mi")[0] == EXIT_USAGE


def test_rates_examples():
    code, out = run("rates", "--estimator", "kl", "--dx", "6")
    assert code == EXIT_OK and "bias slope: 0.25" in out and "variance slope: 1.00" in out
    code, out = run("rates", "--estimator", "ksg", "--dx", "1", "--dy", "2")
    assert "bias slope: 0.33" in out
    code, out = run("rates", "--estimator", "kl", "--dx", "1", "--alpha", "2")
    assert "tau < 2/3" in out and "bias slope: 0.44  [4/9] (approached from below)" in out


def test_rates_errors():
    assert run("rates", "--estimator", "kl", "--dx", "1", "--tau", "1.5")[0] == EXIT_USAGE
    assert run("rates", "--estimator", "ksg", "--dx", "1")[0] == EXIT_USAGE
    assert run("rates", "--estimator", "kl", "--dx", "1", "--dy", "2")[0] == EXIT_USAGE
    assert usage_code("rates", "--estimator", "kl", "--dx", "1", "--tau", "0.5", "--alpha", "2") == EXIT_USAGE
    assert usage_code("rates", "--estimator", "kl", "--dx", "1", "--tau", "0") == EXIT_USAGE


def test_experiment_threads_identical_bytes(tmp_path):
    cfg = str(GOLDEN / "mini.toml")
    c1, out = run("experiment", "--config", cfg, "--out", str(tmp_path / "t1"), "--threads", "1")
    c8, _ = run("experiment", "--config", cfg, "--out", str(tmp_path / "t8"), "--threads", "8", "--quiet")
    assert c1 == c8 == EXIT_NOT_CONVERGED
    for name in ("report.csv", "summary.json", "plot_data.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t8" / name).read_bytes()
    assert (tmp_path / "t1" / "report.csv").read_bytes() == (GOLDEN / "mini_report.csv").read_bytes()
    assert "empirical" in out and "theoretical" in out and "n=100" in out


def test_experiment_converged_exit_zero(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('seed = 1\n[distribution]\nfamily = "joint_gaussian_equicorr"\nd_x = 1\nd_y = 1\n'
                   'rho = 0.6\n[estimator]\nkind = "ksg"\n[grid]\nn = [30, 60, 120]\n')
    code, out = run("experiment", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet")
    assert code == EXIT_OK
    assert (tmp_path / "o" / "report.csv").exists()


def test_experiment_errors(tmp_path):
    assert run("experiment", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path))[0] == EXIT_DATA
    assert run("experiment", "--out", str(tmp_path))[0] == EXIT_USAGE
    bad = tmp_path / "bad.toml"
    bad.write_text('[distribution]\nfamily = "uniform01"\n[estimator]\nkind = "kl"\nk = 3\n'
                   '[grid]\nn = [100, 50]\n')
    code = run("experiment", "--config", str(bad), "--out", str(tmp_path / "o"))[0]
    assert code == EXIT_DATA


def test_experiment_error_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[distribution]\nfamily = "uniform01"\n[estimator]\nkind = "kl"\nk = 3\n'
                   '[grid]\nn = [100, 50]\n')
    run("experiment", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert "n_grid" in capsys.readouterr().err


def test_experiment_list():
    code, out = run("experiment", "--list")
    assert code == EXIT_OK and "table2_row1" in out.split()


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("KNNINFO_THREADS", "zero")
    assert run("experiment", "--config", str(GOLDEN / "mini.toml"), "--out", str(tmp_path))[0] == EXIT_USAGE
    monkeypatch.setenv("KNNINFO_THREADS", "2")
    code, _ = run("experiment", "--config", str(GOLDEN / "mini.toml"), "--out", str(tmp_path), "--quiet")
    assert code == EXIT_NOT_CONVERGED
    assert (tmp_path / "report.csv").read_bytes() == (GOLDEN / "mini_report.csv").read_bytes()


def test_max_trials_override(tmp_path):
    code, _ = run("experiment", "--config", str(GOLDEN / "mini.toml"), "--out", str(tmp_path),
                  "--max-trials", "100", "--quiet")
    assert code == EXIT_NOT_CONVERGED
    assert (tmp_path / "report.csv").read_text().splitlines()[1].startswith("100,100,")


def test_help_documents_every_flag():
    for sub, flags in {"entropy": ["--input", "--k", "--truncate", "--A", "--beta", "--metric"],
                       "mi": ["--x", "--y", "--input", "--dx", "--k"],
                       "experiment": ["--config", "--out", "--threads", "--max-trials"],
                       "rates": ["--estimator", "--dx", "--dy", "--tau", "--alpha"]}.items():
        proc = subprocess.run([sys.executable, "-m", "knninfo", sub, "--help"], capture_output=True,
                              text=True, env={**os.environ})
        assert proc.returncode == 0
        for flag in flags:
            assert flag in proc.stdout


def test_module_entry_point_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "knninfo", "entropy", "--k", "0", "--input", "x"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    assert "usage" in proc.stderr
