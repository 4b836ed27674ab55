import io
import json
import math

import pandas as pd
import pytest

from src.cli import RunConfig, build_parser, main

LINEAR = '{"family": "linear", "alpha": 1}'
HALF_SQUARE = '{"family": "power_norm", "alpha": 0.5, "p": 2}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_writes_a_trajectory_csv(capsys):
    code, out, _ = run(
        capsys, "solve", "--family-json", LINEAR, "--x0", "5", "--rho0", "3"
    )
    assert code == 0
    frame = pd.read_csv(io.StringIO(out))
    assert list(frame.columns) == ["n", "x", "rho", "f_x", "step_norm"]
    assert frame["x"].iloc[0] == 5.0
    assert abs(frame["x"].iloc[-1]) < 1e-5


def test_solve_as_json(capsys):
    code, out, _ = run(
        capsys, "solve", "--family-json", LINEAR, "--x0", "1", "--format", "json"
    )
    payload = json.loads(out)
    assert code == 0
    assert payload["method"] == "DR"
    assert payload["termination"] == "StepTolerance"
    assert payload["f_values"][0] == 1.0


def test_project(capsys):
    code, out, _ = run(
        capsys, "project", "--family-json", HALF_SQUARE, "--x=-0.01", "--rho", "0.5"
    )
    (proj,) = json.loads(out)
    assert code == 0
    assert proj["p"][0] == pytest.approx(-0.019992, abs=1e-6)
    assert proj["multivalued"] is False


def test_stability(capsys):
    code, out, _ = run(capsys, "stability", "--family-json", LINEAR, "--xbar", "0")
    report = json.loads(out)
    assert code == 0
    assert report["modulus"] == pytest.approx(1.0 / math.sqrt(2.0))
    assert report["jacobian_T_inverse"] == [[1.0, 1.0], [-1.0, 1.0]]


def test_lyapunov_csv_with_verdict_file(capsys, tmp_path):
    verdict = tmp_path / "verdict.json"
    code, out, _ = run(
        capsys,
        "lyapunov",
        "--family-json",
        '{"family": "exponential", "alpha": 0.1, "beta": 1.0}',
        "--x0",
        "0",
        "--verdict",
        str(verdict),
    )
    assert code == 0
    assert out.startswith("n,V,margin,orthogonality_residual,in_domain\n")
    assert json.loads(verdict.read_text())["verdict"] == "Certified"


def test_compare_table(capsys):
    code, out, _ = run(
        capsys,
        "compare",
        "--family-json",
        '{"family": "piecewise_convex"}',
        "--x0=-5",
        "--format",
        "table",
    )
    assert code == 0
    assert "ConvergedToSolution" in out
    assert "Stalled" in out
    assert "Undefined" in out


def test_basin_to_file(capsys, tmp_path):
    target = tmp_path / "basin.csv"
    code, out, _ = run(
        capsys,
        "basin",
        "--family-json",
        LINEAR,
        "--x-range=-1,1",
        "--rho-range=-1,1",
        "--resolution",
        "3,3",
        "--threads",
        "2",
        "--output",
        str(target),
    )
    assert code == 0
    assert out == ""
    frame = pd.read_csv(target)
    assert len(frame) == 9
    assert set(frame["class"]) == {"Solution"}


def test_basin_trajectory_dump(capsys, tmp_path):
    folder = tmp_path / "cells"
    code, _, _ = run(
        capsys,
        "basin",
        "--family-json",
        LINEAR,
        "--x-range=-1,1",
        "--rho-range=-1,1",
        "--resolution",
        "2,2",
        "--dump-trajectories",
        str(folder),
        "--dump-limit",
        "3",
    )
    assert code == 0
    assert sorted(p.name for p in folder.iterdir()) == [
        "cell_0000_0000.csv",
        "cell_0000_0001.csv",
        "cell_0001_0000.csv",
    ]


def test_rate(capsys):
    code, out, _ = run(
        capsys,
        "rate",
        "--family-json",
        LINEAR,
        "--x0",
        "5",
        "--rho0",
        "3",
        "--tol",
        "1e-12",
    )
    assert code == 0
    assert json.loads(out)["q_rate"] == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-3)


def test_config_file_overrides(capsys, tmp_path):
    config = tmp_path / "numeric.json"
    config.write_text(json.dumps({"max_iterations": 2}))
    code, out, _ = run(
        capsys,
        "solve",
        "--family-json",
        LINEAR,
        "--x0",
        "5",
        "--rho0",
        "3",
        "--config",
        str(config),
    )
    assert code == 0
    assert len(pd.read_csv(io.StringIO(out))) == 3


@pytest.mark.parametrize(
    "argv, error",
    [
        (
            ["solve", "--family-json", '{"family": "quartic"}', "--x0", "1"],
            "validation_error",
        ),
        (["solve", "--x0", "1"], "validation_error"),
        (["solve", "--family-json", LINEAR, "--x0", "1,2"], "validation_error"),
        (
            ["stability", "--family-json", LINEAR, "--xbar", "0", "--format", "csv"],
            "validation_error",
        ),
        (
            ["solve", "--family-json", LINEAR, "--x0", "1"]
            + ["--config", '{"max_iters": 3}'],
            "config_error",
        ),
        (["project", "--family-json", LINEAR, "--x", "abc"], "validation_error"),
        (["frobnicate"], "validation_error"),
    ],
)
def test_validation_failures_exit_with_1(capsys, argv, error):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert out == ""
    assert json.loads(err.strip().splitlines()[-1])["error"] == error


def test_numerical_failures_exit_with_2(capsys):
    code, _, err = run(
        capsys,
        "stability",
        "--family-json",
        HALF_SQUARE,
        "--xbar",
        "0",
        "--rhobar",
        "-1",
    )
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "singular_jacobian"


def parse(*argv):
    return RunConfig.from_args(build_parser().parse_args(list(argv)))


def test_basin_tol_is_the_target_distance_and_solver_tol_the_stopping_rule():
    cfg = parse(
        "basin", "--family-json", LINEAR, "--tol", "0.5", "--solver-tol", "1e-9"
    )
    assert cfg.options["tol"] == 0.5
    assert cfg.numeric.step_tolerance == 1e-9
    assert cfg.numeric.residual_tolerance == 1e-9
    untouched = parse("basin", "--family-json", LINEAR, "--tol", "0.5")
    assert untouched.numeric.step_tolerance == 1e-6


def test_other_subcommands_keep_tol_as_the_solver_tolerance():
    cfg = parse("solve", "--family-json", LINEAR, "--x0", "1", "--tol", "1e-9")
    assert cfg.numeric.step_tolerance == 1e-9
    assert cfg.numeric.residual_tolerance == 1e-9
    assert "tol" not in cfg.options


def test_a_loose_basin_tol_stops_runs_early(capsys):
    def iterations(*extra):
        code, out, _ = run(
            capsys,
            "basin",
            "--family-json",
            LINEAR,
            "--x-range=-4,4",
            "--rho-range=-4,4",
            "--resolution",
            "3,3",
            "--threads",
            "1",
            *extra,
        )
        assert code == 0
        return pd.read_csv(io.StringIO(out)).set_index(["row", "col"])["iterations"]

    tight = iterations()
    loose = iterations("--tol", "1.0")
    assert (loose <= tight).all()
    assert loose.sum() < tight.sum()
    assert loose.loc[(0, 0)] < tight.loc[(0, 0)]
