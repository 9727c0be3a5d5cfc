import argparse
import csv
import io
import subprocess
import sys

import pytest

from layerfit.cli import main, parse_epsilon


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_epsilon():
    assert parse_epsilon("2^-10") == 2.0**-10
    assert parse_epsilon("2**-40") == 2.0**-40
    assert parse_epsilon("9.765625e-4") == 2.0**-10
    for bad in ("2^3", "0", "1.5", "abc"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_epsilon(bad)


def test_solve_csv(capsys):
    code, out, err = run(
        ["solve", "--problem", "paper-example-1", "--mesh", "modified-shishkin", "--N", "64", "--epsilon", "9.765625e-4"],
        capsys,
    )
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["i", "x_i", "y_numeric", "y_exact", "abs_error"]
    assert len(rows) == 1 + 65
    assert float(rows[1][2]) == 0.0 and float(rows[-1][2]) == 0.0
    assert "M-matrix: yes" in err and "iterations=" in err and "residual=" in err
    max_err = float(err.split("max error=")[1].split()[0])
    # reference table: 8.388e-2 for this cell
    assert max_err == pytest.approx(8.388e-2, rel=0.05)
    assert max_err == pytest.approx(max(float(r[4]) for r in rows[1:]))


def test_solve_out_file_and_jacobian(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    jac = tmp_path / "jac.csv"
    code, stdout, _ = run(["solve", "--mesh", "liseikin", "--N", "16", "--epsilon", "2^-5",
                           "--out", str(out), "--dump-jacobian", str(jac)], capsys)
    assert code == 0
    assert out.read_text().startswith("i,x_i,y_numeric,y_exact,abs_error\n")
    assert jac.read_text().splitlines()[0] == "i,sub,main,super"
    assert len(jac.read_text().splitlines()) == 18
    assert "max error=" in stdout


def test_solve_markdown(capsys):
    code, out, _ = run(["solve", "--mesh", "shishkin", "--N", "8", "--epsilon", "2^-3", "--format", "markdown"], capsys)
    assert code == 0
    assert out.startswith("| i | x_i | y_numeric | y_exact | abs_error |")


def test_solve_bad_N(capsys):
    code, _, err = run(["solve", "--mesh", "shishkin", "--N", "10", "--epsilon", "2^-10"], capsys)
    assert code == 1
    assert "multiple of 4" in err


def test_usage_errors_exit_2(capsys):
    for argv in (["solve"], ["bogus"], ["sweep", "--format", "xml"], ["solve", "--N", "8", "--epsilon", "2^3"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
    capsys.readouterr()


def test_sweep_single_family(capsys):
    code, out, _ = run(["sweep", "--mesh", "bakhvalov", "--epsilon", "2^-20"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["family", "epsilon", "k", "N", "E_N", "Ord"]
    assert len(rows) == 1 + 9
    assert [int(r[2]) for r in rows[1:]] == list(range(4, 13))


def test_sweep_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--mesh", "modified-shishkin", "--mesh", "liseikin", "--epsilon", "2^-10",
            "--epsilon", "2^-40", "--k-min", "4", "--k-max", "9"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_sweep_default_markdown(capsys):
    code, out, _ = run(["sweep", "--format", "markdown"], capsys)
    assert code == 0
    assert out.count("### ") == 4
    assert "| 2^10 | 9.126e-6 |" in out  # Shishkin block, eps = 2^-3


def test_sweep_total_failure(capsys):
    # the preset Bakhvalov a = 1/2 breaks a < q/eps = 0.25/0.6 in every cell
    code, out, err = run(["sweep", "--mesh", "bakhvalov", "--epsilon", "0.6", "--k-min", "4", "--k-max", "5"], capsys)
    assert code == 1
    assert "every cell failed" in err
    assert out.count("—") == 2
    # partial failure still exits 0
    code, _, _ = run(["sweep", "--mesh", "bakhvalov", "--mesh", "shishkin", "--epsilon", "0.6",
                      "--k-min", "4", "--k-max", "5"], capsys)
    assert code == 0


def test_sweep_bad_k_range(capsys):
    code, _, err = run(["sweep", "--mesh", "shishkin", "--k-min", "6", "--k-max", "5"], capsys)
    assert code == 1 and "k-min" in err


def test_mesh_command(capsys):
    code, out, err = run(["mesh", "--mesh", "modified-shishkin", "--N", "16", "--epsilon", "2^-10"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "i,x_i,h_i" and len(lines) == 18
    assert "h_max*N=" in err and "dh_max*N^2=" in err


def test_check_passes(capsys):
    code, out, _ = run(["check", "--N", "16", "--epsilon", "2^-3"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 6 and all(line.startswith("PASS") for line in lines)
    assert "h_max*N=" in out and "dh_max*N^2=" in out


@pytest.mark.parametrize("mesh", ["shishkin", "modified-shishkin", "bakhvalov", "liseikin"])
def test_check_all_families(mesh, capsys):
    code, out, _ = run(["check", "--mesh", mesh], capsys)
    assert code == 0, out


def test_check_gamma_below_fy(capsys):
    code, out, _ = run(["check", "--gamma", "0.5"], capsys)
    assert code == 1
    mm = [line for line in out.splitlines() if "M-matrix" in line][0]
    assert mm.startswith("FAIL")


def test_check_small_eps_skips_identity(capsys):
    code, out, _ = run(["check", "--mesh", "shishkin", "--epsilon", "2^-40", "--N", "64"], capsys)
    assert code == 0
    assert "SKIP  three-point integral identity" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "layerfit", "solve", "--N", "9", "--epsilon", "0.1"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "layerfit", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 2
