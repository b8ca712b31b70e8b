import csv
import json
import shutil
import subprocess
import sys

import pytest

from lipscope.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, main, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == EXIT_OK
    for name in ("monomial:K", "expce", "fracce:R", "dlnn3", "dlnnN:N,D"):
        assert name.split(":")[0] in out


def test_classify_to_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "classify", "--fn", "monomial:0", "--samples", "200", "--out", str(path))
    assert code == EXIT_OK
    assert "verdict: global-evidence" in out
    assert json.loads(path.read_text())["verdict"] == "global-evidence"


def test_classify_to_stdout(capsys):
    code, out, err = run(capsys, "classify", "--fn", "expce", "--samples", "200", "--radii", "1,2")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["config"]["radii"] == [1.0, 2.0]
    assert err.startswith("verdict: ")


@pytest.mark.parametrize("argv", [
    ["classify"],
    ["classify", "--fn", "nope"],
    ["classify", "--fn", "expce", "--samples", "many"],
    ["classify", "--fn", "expce", "--radii", "4,2"],
    ["classify", "--fn", "expce", "--bogus", "1"],
    ["witness", "--fn", "expce"],
    ["witness", "--fn", "dlnnN", "--N", "3"],
    ["check-grad", "--fn", "expce", "--points", "0"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_one(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_USAGE


def test_config_file_and_precedence(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nfn = expce\nrho-grid=0,1\nsamples=150\nseed=4\n\nradii = 1,2,4\n")
    out = tmp_path / "r.json"
    monkeypatch.setenv("LIPSCOPE_SEED", "99")
    code, _, _ = run(capsys, "classify", "--config", str(cfg), "--samples", "120", "--out", str(out))
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["function"] == "expce"
    assert doc["rho_grid"] == [0.0, 1.0]
    assert doc["config"]["samples"] == 120  # flag beats file
    assert doc["seed"] == 4  # file beats environment


def test_seed_from_environment(capsys, tmp_path, monkeypatch):
    out = tmp_path / "r.json"
    monkeypatch.setenv("LIPSCOPE_SEED", "17")
    run(capsys, "classify", "--fn", "monomial:0", "--samples", "10", "--out", str(out))
    assert json.loads(out.read_text())["seed"] == 17
    run(capsys, "classify", "--fn", "monomial:0", "--samples", "10", "--seed", "3", "--out", str(out))
    assert json.loads(out.read_text())["seed"] == 3
    monkeypatch.setenv("LIPSCOPE_SEED", "x")
    code, _, err = run(capsys, "classify", "--fn", "monomial:0", "--samples", "10")
    assert code == EXIT_USAGE and "seed" in err


def test_config_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("samples 10\n")
    assert run(capsys, "classify", "--fn", "expce", "--config", str(bad))[0] == EXIT_USAGE
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour=blue\n")
    assert run(capsys, "classify", "--fn", "expce", "--config", str(unknown))[0] == EXIT_USAGE
    assert run(capsys, "classify", "--fn", "expce", "--config", str(tmp_path / "missing"))[0] == EXIT_USAGE


def test_read_config_normalises_keys(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("n-max = 50\nrho_grid=1\n  # note\n")
    assert read_config(str(p)) == {"n_max": "50", "rho_grid": "1"}


def test_witness_csv(capsys, tmp_path):
    out = tmp_path / "w.csv"
    code, stdout, _ = run(capsys, "witness", "--fn", "dlnn3", "--rho", "0.5", "--n-max", "1000",
                          "--count", "8", "--out", str(out))
    assert code == EXIT_OK
    assert "refuted over 8 values" in stdout
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["n", "grad_norm", "hess_lb", "kappa", "kappa_g_rho", "lower_bound", "upper_bound"]
    assert len(rows) == 9 and rows[1][0] == "2" and rows[-1][0] == "1000"


@pytest.mark.parametrize("argv", [["--fn", "dlnnN", "--N", "5", "--d", "2"], ["--fn", "dlnnN:5,2"]])
def test_witness_deep_network_spellings(capsys, argv):
    code, out, _ = run(capsys, "witness", *argv, "--count", "8")
    assert code == EXIT_OK
    assert out.startswith("dlnnN:5,2 rho=1: refuted")


def test_witness_count_clipped_to_available_n(capsys):
    code, out, _ = run(capsys, "witness", "--fn", "dlnn3", "--n-max", "5", "--count", "32")
    assert code == EXIT_OK and "over 4 values" in out


@pytest.mark.parametrize("fn", ["expce", "dlnn3", "dlnnN:4,2"])
def test_check_grad_passes(capsys, fn):
    code, out, _ = run(capsys, "check-grad", "--fn", fn, "--points", "10")
    assert code == EXIT_OK
    assert "max gradient error" in out


def test_check_grad_failure_exit_code(capsys, monkeypatch):
    import lipscope.cli as cli
    from lipscope.fields import ScalarField
    import numpy as np

    wrong = ScalarField(dim=1, name="wrong", value=lambda x: float(x[0] ** 2),
                        gradient=lambda x: 3 * x, hessian=lambda x: np.array([[2.0]]))
    monkeypatch.setattr(cli, "resolve", lambda fn_id: wrong)
    assert run(capsys, "check-grad", "--fn", "wrong", "--points", "5")[0] == EXIT_CHECK_FAILED


def test_violated_fit_exit_code(capsys, monkeypatch):
    import lipscope.cli as cli

    real = cli.classify

    def tampered(fn_id, cfg):
        report = real(fn_id, cfg)
        report.fits[0].max_violation = 1.0
        return report

    monkeypatch.setattr(cli, "classify", tampered)
    code, _, err = run(capsys, "classify", "--fn", "monomial:0", "--samples", "10", "--radii", "1")
    assert code == EXIT_CHECK_FAILED and "violated on 1 fits" in err


@pytest.mark.skipif(shutil.which("lipscope") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["lipscope", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("lipscope ")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lipscope.cli", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "expce" in res.stdout
