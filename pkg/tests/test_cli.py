import argparse
import json
import logging
import math

import numpy as np
import pandas as pd
import pytest

from riesz_adi import config
from riesz_adi.main import main, parse_config, parse_levels, parse_step
from riesz_adi.services.numerics.operators import assemble_riesz_matrix
from riesz_adi.services.utils.logger import set_level


@pytest.mark.parametrize(
    "text, expected",
    [
        ("0.05pi", 0.05 * math.pi),
        ("0.1*pi", 0.1 * math.pi),
        ("π", math.pi),
        ("0.1", 0.1),
        ("1e-3", 0.001),
        (0.25, 0.25),
    ],
)
def test_parse_step(text, expected):
    assert parse_step(text) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "pi pi", "0.1pie"])
def test_parse_step_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_step(text)


def test_parse_levels():
    assert parse_levels("0.1,0.05, 0.025") == [0.1, 0.05, 0.025]
    assert parse_levels("0.1pi,0.05pi") == pytest.approx([0.1 * math.pi, 0.05 * math.pi])
    assert parse_levels([0.2, "0.1"]) == [0.2, 0.1]


def _solve_args(tmp_path, *extra):
    return ["solve", "--problem", "example1", "--h", "0.25", "--dt", "0.01", "--t-end", "0.5",
            "--out", str(tmp_path), *extra]


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--problem", "example1", "--h", "0.25", "--m1", "4", "--dt", "0.01"],
        ["solve", "--problem", "example1", "--h", "0.25"],
        ["solve", "--h", "0.25", "--dt", "0.01"],
        ["solve", "--problem", "example1", "--h", "0.25", "--dt", "0.01", "--order", "3"],
        ["study", "--problem", "example1", "--axis", "space", "--levels", "0.05,0.1"],
        ["study", "--problem", "example1", "--levels", "0.1,0.05"],
        ["study", "--problem", "example1", "--axis", "space", "--levels", "0.1,0.05", "--workers", "0"],
        ["verify", "--n", "0"],
        ["solve", "--problem", "example1", "--h", "abc", "--dt", "0.01"],
        ["explore"],
    ],
)
def test_usage_errors_exit_with_status_two(argv):
    with pytest.raises(SystemExit) as excinfo:
        parse_config(argv)
    assert excinfo.value.code == 2


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"problem": "example1", "speed": 3}))
    with pytest.raises(SystemExit) as excinfo:
        parse_config(["solve", "--config", str(path), "--h", "0.25", "--dt", "0.01"])
    assert excinfo.value.code == 2


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"problem": "example2", "h": "0.1pi", "dt": 0.1, "t_end": 1.0}))
    cfg = parse_config(["solve", "--config", str(path), "--dt", "0.05"])
    assert cfg.problem == "example2"
    assert cfg.h == pytest.approx(0.1 * math.pi)
    assert cfg.dt == 0.05
    assert cfg.t_end == 1.0
    assert cfg.order == 4
    assert cfg.compare_mode is False


def test_config_file_argument(tmp_path):
    path = tmp_path / "study.json"
    path.write_text(json.dumps({"problem": "example1", "axis": "time", "levels": [0.1, 0.05]}))
    cfg = parse_config(["study"], config_file=str(path))
    assert cfg.axis == "time"
    assert cfg.levels == [0.1, 0.05]


def test_solve_writes_outputs(tmp_path, capsys):
    assert main(_solve_args(tmp_path)) == 0
    assert "example1: max error" in capsys.readouterr().out

    frame = pd.read_csv(tmp_path / "example1_solution.csv")
    assert list(frame.columns) == ["x", "y", "u", "exact", "abs_error"]
    assert len(frame) == 9
    assert (frame["abs_error"] - (frame["u"] - frame["exact"]).abs()).abs().max() < 1e-15

    summary = json.loads((tmp_path / "example1_summary.json").read_text())
    assert summary["step_count"] == 50
    assert summary["t_end"] == 0.5
    assert summary["grid"]["m1"] == 4
    assert summary["problem"]["alpha"] == 1.8
    assert summary["max_error"] == pytest.approx(frame["abs_error"].max())
    assert "created_at" in summary["metadata"]
    assert summary["metadata"]["env"] == config.ENV
    assert not (tmp_path / "example1_checkpoints.csv").exists()


def test_solve_compare_mode_is_reproducible(tmp_path):
    outputs = []
    for name in ("a", "b"):
        assert main(_solve_args(tmp_path / name, "--compare-mode")) == 0
        outputs.append((tmp_path / name / "example1_summary.json").read_bytes())
    assert outputs[0] == outputs[1]
    assert "metadata" not in json.loads(outputs[0])


def test_verbose_solve_writes_checkpoints(tmp_path):
    try:
        assert main(_solve_args(tmp_path, "-v")) == 0
    finally:
        set_level(logging.INFO)
    checkpoints = pd.read_csv(tmp_path / "example1_checkpoints.csv")
    assert len(checkpoints) == 50
    assert checkpoints["step"].tolist() == list(range(1, 51))


def test_solve_unknown_problem(tmp_path, capsys):
    argv = ["solve", "--problem", "example9", "--h", "0.25", "--dt", "0.01", "--out", str(tmp_path)]
    assert main(argv) == 1
    assert "unknown problem" in capsys.readouterr().err


def test_solve_grid_that_does_not_fit(tmp_path, capsys):
    argv = ["solve", "--problem", "example1", "--h", "0.3", "--dt", "0.01", "--out", str(tmp_path)]
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_study_command(tmp_path, capsys):
    path = tmp_path / "study.json"
    path.write_text(json.dumps({"t_end": 0.5}))
    argv = [
        "study", "--problem", "example1", "--axis", "space", "--levels", "0.25,0.125",
        "--dt", "0.01", "--config", str(path), "--out", str(tmp_path / "out"),
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "space refinement" in out
    for suffix in ("csv", "json", "dat"):
        assert (tmp_path / "out" / f"example1_space_study.{suffix}").exists()
    report = json.loads((tmp_path / "out" / "example1_space_study.json").read_text())
    assert report["t_end"] == 0.5
    assert len(report["rates"]) == 1


def test_verify_single_order(capsys):
    assert main(["verify", "--gamma", "1.8", "--n", "8"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "FAIL" not in out


def test_verify_exact_order_two(capsys):
    assert main(["verify", "--gamma", "2.0", "--n", "8"]) == 0
    assert "exact at gamma=2.0" in capsys.readouterr().out


def test_verify_order_one_fails(capsys):
    assert main(["verify", "--gamma", "1.0", "--n", "8"]) == 1
    captured = capsys.readouterr()
    assert "OrderDomainError" in captured.out
    assert "failed checks:" in captured.err
    for name in ("coefficient signs and sums", "SPD operators", "operator order"):
        assert name in captured.err


def test_verify_dumps_matrices(tmp_path):
    assert main(["verify", "--gamma", "1.8", "--n", "8", "--dump-matrices", "--out", str(tmp_path)]) == 0
    dumped = np.loadtxt(tmp_path / "riesz_matrix_gamma1.8_n8.csv", delimiter=",")
    assert np.array_equal(dumped, assemble_riesz_matrix(1.8, 8, 1 / 9).matrix)


def test_verify_dump_of_invalid_order_fails(tmp_path, capsys):
    assert main(["verify", "--gamma", "1.0", "--n", "4", "--dump-matrices", "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []
