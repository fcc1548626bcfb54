import csv
import math

import numpy as np
import pytest

from conftest import problem_with_radius
from gensylv import cli
from gensylv.problem import GeneralizedSylvesterProblem
from gensylv.problems import random_problem, save_problem


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(out))
    return out


def problem_file(tmp_path, p, name="p.txt"):
    path = tmp_path / name
    save_problem(p, path)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_exit_code_table_is_stable():
    assert (cli.EXIT_OK, cli.EXIT_USAGE, cli.EXIT_MAX_ITERATIONS, cli.EXIT_DIVERGED,
            cli.EXIT_OPERATOR_ERROR, cli.EXIT_ORACLE_MISMATCH) == (0, 2, 10, 11, 12, 13)
    assert sorted(set(cli.STATUS_EXIT.values())) == [0, 10, 11, 12]


# solve

def test_solve_no_coupling_single_row(tmp_path, outdir):
    path = problem_file(tmp_path, random_problem(6, 0, seed=0))
    assert cli.main(["solve", "--problem", path, "--method", "FP"]) == 0
    rows = read_csv(outdir / "trace.csv")
    assert len(rows) == 1
    summary = read_csv(outdir / "summary.csv")
    assert summary[0]["status"] == "Converged" and summary[0]["method"] == "FP"


def test_solve_trace_format(tmp_path, outdir):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=1, radius=0.7))
    assert cli.main(["solve", "--problem", path, "--method", "PAAA"]) == 0
    with open(outdir / "trace.csv") as fh:
        assert fh.readline().strip() == ",".join(cli.TRACE_HEADER)
    with open(outdir / "summary.csv") as fh:
        assert fh.readline().strip() == ",".join(cli.SUMMARY_HEADER)
    rows = read_csv(outdir / "trace.csv")
    assert [int(r["iter"]) for r in rows] == list(range(1, len(rows) + 1))
    assert all(float(r["relres"]) > 0 for r in rows[:-1])
    assert {r["step_kind"] for r in rows} <= {"FixedPoint", "Anderson", "Preconditioned", "Stop"}
    assert rows[-1]["step_kind"] == "Stop"
    summary = read_csv(outdir / "summary.csv")[0]
    assert float(summary["final_relres"]) < 1e-9 and float(summary["exact_relres"]) < 1e-8


def test_solve_is_reproducible(tmp_path):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=2, radius=0.8))
    cols = []
    for run in range(2):
        trace = tmp_path / f"t{run}.csv"
        assert cli.main(["solve", "--problem", path, "--method", "AA", "--trace", str(trace)]) == 0
        cols.append([(r["iter"], r["relres"], r["step_kind"], r["kernel_solves"])
                     for r in read_csv(trace)])
    assert cols[0] == cols[1]


def test_solve_max_iterations_exit(tmp_path):
    path = problem_file(tmp_path, problem_with_radius(6, 1, seed=3, radius=0.9))
    assert cli.main(["solve", "--problem", path, "--method", "FP", "--max-iter", "3"]) == 10


def test_solve_diverged_exit(tmp_path):
    path = problem_file(tmp_path, problem_with_radius(6, 1, seed=3, radius=1.5))
    assert cli.main(["solve", "--problem", path, "--method", "FP", "--max-iter", "1000"]) == 11


def test_solve_operator_error_exit(tmp_path):
    a = np.triu(np.ones((3, 3)))
    p = GeneralizedSylvesterProblem(a, -a, (0.1 * np.eye(3),), (np.eye(3),), np.eye(3))
    assert cli.main(["solve", "--problem", problem_file(tmp_path, p), "--method", "FP"]) == 12


def test_solve_generated_family(outdir):
    code = cli.main(["solve", "--family", "BilinearTridiag", "--param", "n=30",
                     "--param", "gamma=0.25", "--seed", "1", "--method", "PAAA"])
    assert code == 0
    assert read_csv(outdir / "summary.csv")[0]["status"] == "Converged"


@pytest.mark.slow
def test_solve_carleman_paaa_converges(outdir):
    # paper: residual of order 1e-9 for P-aAA; budget of 200 iterations as in the paper
    code = cli.main(["solve", "--family", "CarlemanRc", "--param", "n0=30", "--method", "PAAA",
                     "--max-iter", "200", "--epsilon", "1e-9"])
    summary = read_csv(outdir / "summary.csv")[0]
    assert code == 0 and float(summary["final_relres"]) <= 1e-9


@pytest.mark.slow
def test_solve_carleman_fp_fails(outdir):
    code = cli.main(["solve", "--family", "CarlemanRc", "--param", "n0=30", "--method", "FP",
                     "--max-iter", "200"])
    assert code in (cli.EXIT_MAX_ITERATIONS, cli.EXIT_DIVERGED)


# config handling

def test_config_file_and_override(tmp_path, outdir):
    path = problem_file(tmp_path, problem_with_radius(6, 1, seed=4, radius=0.6))
    cfg = tmp_path / "run.yaml"
    cfg.write_text(f"problem: {path}\nmethod: FP\nmax_iter: 2\nepsilon: 1e-10\n")
    assert cli.main(["solve", "--config", str(cfg)]) == 10
    assert cli.main(["solve", "--config", str(cfg), "--max-iter", "500"]) == 0
    assert read_csv(outdir / "summary.csv")[0]["method"] == "FP"


def test_config_params_merge(tmp_path, outdir):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("family: BilinearTridiag\nparams: {n: 10, gamma: 0.25}\nmethod: FP\n")
    assert cli.main(["spectral", "--config", str(cfg), "--param", "n=12"]) == 0


def test_output_dir_flag_beats_environment(tmp_path, outdir):
    path = problem_file(tmp_path, random_problem(4, 0, seed=0))
    other = tmp_path / "elsewhere"
    assert cli.main(["solve", "--problem", path, "--output-dir", str(other)]) == 0
    assert (other / "trace.csv").exists() and not (outdir / "trace.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["solve"],
        ["solve", "--family", "Nope"],
        ["solve", "--problem", "/nonexistent/p.txt"],
        ["solve", "--family", "Heat1", "--param", "n0"],
        ["solve", "--family", "Heat1", "--param", "bogus=1"],
        ["solve", "--family", "Heat1", "--method", "nope"],
        ["solve", "--family", "Heat1", "--epsilon", "-1"],
        ["compare", "--family", "Heat1", "--param", "n0=3", "--methods", "FP"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("family: Heat1\nfoo: 1\n")
    assert cli.main(["solve", "--config", str(cfg)]) == 2


def test_unwritable_output(tmp_path):
    path = problem_file(tmp_path, random_problem(4, 0, seed=0))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["solve", "--problem", path, "--trace", str(blocker / "t.csv")]) == 2


# compare

def test_compare_outputs(tmp_path, outdir, capsys):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=5, radius=0.7))
    assert cli.main(["compare", "--problem", path, "--methods", "FP,AA,AAA,PAAA,PRECONDITIONED"]) == 0
    long = read_csv(outdir / "compare_trace.csv")
    assert list(long[0].keys()) == cli.COMPARE_TRACE_HEADER
    summary = read_csv(outdir / "compare_summary.csv")
    assert [r["method"] for r in summary] == ["FP", "AA", "AAA", "PAAA", "PRECONDITIONED"]
    assert len({r["rho_estimate"] for r in summary}) == 1
    assert "PRECONDITIONED" in capsys.readouterr().out


def test_compare_aa_without_memory_matches_fp(tmp_path, outdir):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=6, radius=0.8))
    assert cli.main(["compare", "--problem", path, "--methods", "AA,FP", "--m-max", "0"]) == 0
    long = read_csv(outdir / "compare_trace.csv")
    aa = [(r["iter"], r["relres"]) for r in long if r["method"] == "AA"]
    fp = [(r["iter"], r["relres"]) for r in long if r["method"] == "FP"]
    assert aa == fp


def test_compare_preconditioned_halves_iterations(tmp_path, outdir):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=7, radius=0.6, symmetric=True))
    assert cli.main(["compare", "--problem", path, "--methods", "FP,PRECONDITIONED"]) == 0
    its = {r["method"]: int(r["iterations"]) for r in read_csv(outdir / "compare_summary.csv")}
    assert its["PRECONDITIONED"] <= math.ceil(its["FP"] / 2) + 1


def test_compare_required_methods(tmp_path):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=8, radius=0.9))
    argv = ["compare", "--problem", path, "--methods", "FP,PAAA", "--max-iter", "80"]
    assert cli.main(argv) == 10
    assert cli.main(argv + ["--required", "PAAA"]) == 0


@pytest.mark.slow
def test_compare_bilinear_paaa_fewer_iterations(outdir):
    code = cli.main(["compare", "--family", "BilinearTridiag", "--param", "n=1000",
                     "--param", "gamma=0.3333333333333333", "--methods", "FP,PAAA",
                     "--required", "PAAA"])
    its = {r["method"]: int(r["iterations"]) for r in read_csv(outdir / "compare_summary.csv")}
    assert code == 0
    assert its["PAAA"] <= its["FP"]


# spectral

def test_spectral_no_coupling(tmp_path, capsys):
    path = problem_file(tmp_path, random_problem(5, 0, seed=0))
    assert cli.main(["spectral", "--problem", path]) == 0
    out = capsys.readouterr().out
    assert float(out.split()[1]) == 0.0


def test_spectral_with_oracle(tmp_path, capsys):
    path = problem_file(tmp_path, random_problem(5, 1, seed=1, symmetric=True))
    assert cli.main(["spectral", "--problem", path, "--oracle", "--tol", "1e-9"]) == 0
    vals = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert float(vals["estimate"]) == pytest.approx(float(vals["oracle_radius"]), abs=1e-4)
    assert float(vals["oracle_norm"]) >= float(vals["oracle_radius"]) - 1e-12


def test_spectral_oracle_size_cap(tmp_path):
    path = problem_file(tmp_path, random_problem(26, 1, seed=0))
    assert cli.main(["spectral", "--problem", path, "--oracle"]) == 2


@pytest.mark.slow
def test_spectral_bilinear_paper_value(capsys):
    # paper value 0.57
    assert cli.main(["spectral", "--family", "BilinearTridiag", "--param", "n=1000",
                     "--param", "gamma=0.3333333333333333"]) == 0
    vals = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert 0.55 <= float(vals["estimate"]) <= 0.59


# oracle-check

def test_oracle_check_no_coupling(tmp_path, capsys):
    path = problem_file(tmp_path, random_problem(6, 0, seed=2))
    assert cli.main(["oracle-check", "--problem", path, "--method", "AA", "--rtol", "1e-10"]) == 0


def test_oracle_check_paaa(tmp_path):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=9, radius=0.6))
    assert cli.main(["oracle-check", "--problem", path, "--method", "PAAA"]) == 0


def test_oracle_check_mismatch(tmp_path):
    path = problem_file(tmp_path, problem_with_radius(8, 2, seed=9, radius=0.6))
    argv = ["oracle-check", "--problem", path, "--method", "PAAA", "--epsilon", "1e-3",
            "--rtol", "1e-12"]
    assert cli.main(argv) == 13


def test_oracle_check_singular(tmp_path):
    eye = np.eye(3)
    p = GeneralizedSylvesterProblem(eye, -eye, (0.1 * eye,), (eye,), eye)
    assert cli.main(["oracle-check", "--problem", problem_file(tmp_path, p)]) == 12


def test_oracle_check_size_cap(tmp_path):
    path = problem_file(tmp_path, random_problem(61, 0, seed=0))
    assert cli.main(["oracle-check", "--problem", path]) == 2


# generate

def test_generate_then_solve(tmp_path, outdir):
    out = tmp_path / "heat.txt"
    assert cli.main(["generate", "--family", "Heat1", "--param", "n0=8", "--out", str(out)]) == 0
    assert cli.main(["solve", "--problem", str(out), "--method", "PAAA"]) == 0
