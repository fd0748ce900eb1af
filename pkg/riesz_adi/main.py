import argparse
import logging
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from . import config
from .services.analysis.convergence import (
    format_table,
    refinement_study,
    summarize_field,
    write_report,
)
from .services.analysis.verify import SPD_ORDERS, format_check_table, run_property_suite
from .services.numerics.adi import solve
from .services.numerics.operators import assemble_riesz_matrix, dump_matrix
from .services.outputs.writers import write_csv_atomic, write_json_atomic
from .services.problems.catalog import read_json_file, resolve_problem, with_end_time
from .services.utils.exceptions import ConfigurationError, RieszAdiError
from .services.utils.logger import app_logger, set_level

COMMANDS = ("solve", "study", "verify")
DUMP_MATRIX_SIZE = 16
_FILE_KEYS = {
    "problem",
    "h",
    "m1",
    "m2",
    "dt",
    "t_end",
    "axis",
    "levels",
    "order",
    "out",
    "verbose",
    "workers",
    "compare_mode",
    "gamma",
    "n",
    "dump_matrices",
}
_STEP_PATTERN = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*(pi|π)?\s*$")


@dataclass
class RunConfig:
    command: str
    problem: Optional[str] = None
    h: Optional[float] = None
    m1: Optional[int] = None
    m2: Optional[int] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    axis: Optional[str] = None
    levels: List[float] = field(default_factory=list)
    order: int = 4
    out: str = config.OUTPUT_DIR
    verbose: int = 0
    workers: Optional[int] = None
    compare_mode: bool = False
    gamma: Optional[float] = None
    n: Optional[int] = None
    dump_matrices: bool = False


def parse_step(text) -> float:
    """
    Parse a step size; a "pi" suffix multiplies by pi ("0.05pi", "pi", "0.1*pi").
    """
    if isinstance(text, (int, float)):
        return float(text)
    match = _STEP_PATTERN.match(str(text))
    if not match or (match.group(1) is None and match.group(2) is None):
        raise argparse.ArgumentTypeError(f"not a step size: {text!r}")
    value = float(match.group(1)) if match.group(1) is not None else 1.0
    return value * math.pi if match.group(2) else value


def parse_levels(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [parse_step(item) for item in text]
    return [parse_step(item) for item in str(text).split(",") if item.strip()]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file with run settings")
    common.add_argument("--out", help=f"output directory (default $RIESZ_ADI_OUTPUT_DIR or {config.OUTPUT_DIR})")
    common.add_argument("-v", "--verbose", action="count", default=None, help="repeat for more detail")
    common.add_argument(
        "--compare-mode",
        action="store_true",
        default=None,
        help="leave timestamps and wall times out of JSON outputs",
    )

    parser = argparse.ArgumentParser(
        prog="riesz_adi",
        description="Crank-Nicolson ADI solver for the 2D Riesz space-fractional "
        "advection-dispersion equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_parser = sub.add_parser("solve", parents=[common], help="solve one problem")
    solve_parser.add_argument("--problem", help="catalog name or problem JSON file")
    solve_parser.add_argument("--h", type=parse_step, help="grid step, dx = dy = h")
    solve_parser.add_argument("--m1", type=int, help="cells along x")
    solve_parser.add_argument("--m2", type=int, help="cells along y (default m1)")
    solve_parser.add_argument("--dt", type=parse_step, help="time step")
    solve_parser.add_argument("--t-end", dest="t_end", type=parse_step, help="end time override")
    solve_parser.add_argument("--order", type=int, choices=(2, 4), help="spatial order")

    study_parser = sub.add_parser("study", parents=[common], help="run a refinement study")
    study_parser.add_argument("--problem", help="catalog name or problem JSON file")
    study_parser.add_argument("--axis", choices=("space", "time"))
    study_parser.add_argument("--levels", type=parse_levels, help="comma-separated decreasing steps")
    study_parser.add_argument("--dt", type=parse_step, help="fixed time step of a space study")
    study_parser.add_argument("--h", type=parse_step, help="fixed grid step of a time study")
    study_parser.add_argument("--order", type=int, choices=(2, 4), help="spatial order")
    study_parser.add_argument("--workers", type=int, help="levels solved concurrently")

    verify_parser = sub.add_parser("verify", parents=[common], help="run the property suite")
    verify_parser.add_argument("--gamma", type=float, help="check a single fractional order")
    verify_parser.add_argument("--n", type=int, help="matrix size for the matrix checks")
    verify_parser.add_argument(
        "--dump-matrices",
        dest="dump_matrices",
        action="store_true",
        default=None,
        help="write the operator matrices of the checked orders to --out",
    )
    return parser


def parse_config(argv: Sequence[str] = None, config_file: str = None) -> RunConfig:
    """
    Build a RunConfig from command-line arguments and an optional JSON file.

    Command-line flags override file values. Usage errors exit with status 2.

    :param argv: Arguments without the program name; defaults to sys.argv[1:].
    :param config_file: JSON file read before the flags, in addition to --config.
    :return: The run configuration.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    values = {}

    for path in (config_file, args.config):
        if not path:
            continue
        try:
            payload = read_json_file(path)
        except ConfigurationError as exc:
            parser.error(str(exc))
        unknown = sorted(set(payload) - _FILE_KEYS)
        if unknown:
            parser.error(f"{path}: unknown keys {unknown}")
        values.update(payload)

    for key, value in vars(args).items():
        if key not in ("command", "config") and value is not None:
            values[key] = value

    try:
        for key in ("h", "dt", "t_end"):
            if values.get(key) is not None:
                values[key] = parse_step(values[key])
        if "levels" in values:
            values["levels"] = parse_levels(values["levels"])
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))

    cfg = RunConfig(command=args.command, **values)
    _validate(cfg, parser)
    return cfg


def _validate(cfg: RunConfig, parser: argparse.ArgumentParser) -> None:
    if cfg.command in ("solve", "study") and not cfg.problem:
        parser.error(f"{cfg.command} needs --problem")
    if cfg.order not in (2, 4):
        parser.error(f"order must be 2 or 4, got {cfg.order}")

    if cfg.command == "solve":
        if cfg.h is not None and (cfg.m1 is not None or cfg.m2 is not None):
            parser.error("--h conflicts with --m1/--m2")
        if cfg.h is None and cfg.m1 is None:
            parser.error("solve needs --h or --m1")
        if cfg.dt is None:
            parser.error("solve needs --dt")
    elif cfg.command == "study":
        if cfg.axis not in ("space", "time"):
            parser.error("study needs --axis space|time")
        if not cfg.levels:
            parser.error("study needs --levels")
        if any(level <= 0 for level in cfg.levels):
            parser.error("levels must be positive")
        if any(b >= a for a, b in zip(cfg.levels, cfg.levels[1:])):
            parser.error(f"levels must be strictly decreasing: {cfg.levels}")
        if cfg.workers is not None and cfg.workers < 1:
            parser.error("--workers must be at least 1")
    elif cfg.command == "verify":
        if cfg.n is not None and cfg.n < 1:
            parser.error("--n must be at least 1")


def _configure_logging(cfg: RunConfig) -> None:
    if cfg.verbose >= 1:
        set_level(logging.DEBUG)


def _fail(exc: Exception) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return 1


def run_solve(cfg: RunConfig) -> int:
    """
    Solve one problem and write the final field CSV and a summary JSON.
    """
    started = time.perf_counter()
    try:
        problem = resolve_problem(cfg.problem)
        if cfg.t_end is not None:
            problem = with_end_time(problem, cfg.t_end)
        grid = problem.grid(h=cfg.h) if cfg.h is not None else problem.grid(m1=cfg.m1, m2=cfg.m2)

        checkpoints = []

        def record(state):
            checkpoints.append({"step": state.step, "t": state.t, "max_abs_u": state.max_abs()})

        numeric = solve(
            problem,
            grid,
            cfg.dt,
            fit_dt=config.FIT_TIME_STEP,
            order=cfg.order,
            on_step=record if cfg.verbose >= 1 else None,
        )
        wall_time = time.perf_counter() - started

        X, Y = grid.mesh()
        columns = {"x": X.reshape(-1), "y": Y.reshape(-1), "u": numeric.values.reshape(-1)}
        if problem.exact is not None:
            exact = np.asarray(problem.exact(X, Y, numeric.t), dtype=np.float64) * np.ones(grid.shape)
            columns["exact"] = exact.reshape(-1)
            columns["abs_error"] = np.abs(numeric.values - exact).reshape(-1)

        stem = os.path.join(cfg.out, problem.name)
        write_csv_atomic(pd.DataFrame(columns), f"{stem}_solution.csv")
        if checkpoints:
            write_csv_atomic(pd.DataFrame(checkpoints), f"{stem}_checkpoints.csv")

        summary = {
            "problem": problem.metadata(),
            "grid": {"m1": grid.m1, "m2": grid.m2, "dx": grid.dx, "dy": grid.dy},
            "dt": problem.t_end / numeric.step if numeric.step else cfg.dt,
            "requested_dt": cfg.dt,
            "step_count": numeric.step,
            "t_end": numeric.t,
            "order": cfg.order,
            "max_abs_u": numeric.max_abs(),
            **(summarize_field(numeric, problem, grid) or {"max_error": None, "l2_error": None}),
        }
        if not cfg.compare_mode:
            summary["metadata"] = {
                "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                "wall_time": wall_time,
                "env": config.ENV,
            }
        write_json_atomic(summary, f"{stem}_summary.json")
    except RieszAdiError as exc:
        return _fail(exc)

    if summary["max_error"] is not None:
        print(f"{problem.name}: max error {summary['max_error']:.5e}, L2 error {summary['l2_error']:.5e}")
    else:
        print(f"{problem.name}: max |u| {summary['max_abs_u']:.5e}")
    return 0


def run_study(cfg: RunConfig) -> int:
    """
    Run a refinement study and write its CSV, JSON and plot-data files.
    """
    try:
        problem = resolve_problem(cfg.problem)
        if cfg.t_end is not None:
            problem = with_end_time(problem, cfg.t_end)
        fixed_step = cfg.dt if cfg.axis == "space" else cfg.h
        report = refinement_study(
            problem,
            cfg.axis,
            cfg.levels,
            fixed_step=fixed_step,
            order=cfg.order,
            workers=cfg.workers,
        )
        write_report(report, cfg.out, compare_mode=cfg.compare_mode)
    except RieszAdiError as exc:
        return _fail(exc)

    print(format_table(report))
    return 0


def _dump_operator_matrices(cfg: RunConfig) -> List[str]:
    n = cfg.n or DUMP_MATRIX_SIZE
    h = 1.0 / (n + 1)
    paths = []
    for gamma in SPD_ORDERS if cfg.gamma is None else (cfg.gamma,):
        M = assemble_riesz_matrix(gamma, n, h)
        paths.append(dump_matrix(M, os.path.join(cfg.out, f"riesz_matrix_gamma{gamma:g}_n{n}.csv")))
    return paths


def run_verify(cfg: RunConfig) -> int:
    """
    Run the property suite and print a pass/fail table.

    With ``dump_matrices`` the operator matrices of the checked orders on the
    unit interval are also written to CSV.
    """
    results = run_property_suite(gamma=cfg.gamma, n=cfg.n)
    print(format_check_table(results))
    failed = [result.name for result in results if not result.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
    if cfg.dump_matrices:
        try:
            _dump_operator_matrices(cfg)
        except RieszAdiError as exc:
            return _fail(exc)
    return 1 if failed else 0


def main(argv: Sequence[str] = None) -> int:
    """
    Main function to run the command-line interface.
    """
    cfg = parse_config(argv)
    _configure_logging(cfg)
    app_logger.info(f"Running {cfg.command}")
    handlers = {"solve": run_solve, "study": run_study, "verify": run_verify}
    return handlers[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
