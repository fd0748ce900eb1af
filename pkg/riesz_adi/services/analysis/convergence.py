"""
Error norms, convergence rates and refinement studies.

A study refines either the spatial step (dx = dy = h, fixed dt) or the time
step (fixed h), solves each level to the problem's end time and measures the
error against the exact solution at that final time only.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ... import config
from ..numerics.adi import SolutionField, solve, step_count
from ..numerics.grid import GridSpec
from ..outputs.writers import write_columns_atomic, write_csv_atomic, write_json_atomic
from ..problems.catalog import ProblemSpec
from ..utils.exceptions import (
    ConfigurationError,
    DegenerateRateError,
    RefinementLevelError,
    RieszAdiError,
    ShapeError,
)
from ..utils.logger import app_logger

AXES = ("space", "time")


def error_norms(
    numeric: SolutionField, exact: Callable, grid: GridSpec
) -> Tuple[float, float]:
    """
    Max-abs and cell-weighted discrete L2 errors on the interior nodes.

    :param numeric: Numerical field; ``numeric.t`` is the evaluation time.
    :param exact: Exact solution u(x, y, t).
    :param grid: Grid of the field.
    :raises ShapeError: If the field does not match the grid.
    :return: (max_error, l2_error) with l2 = sqrt(dx*dy*sum(e^2)).
    """
    values = np.asarray(numeric.values, dtype=np.float64)
    if values.shape != grid.shape:
        app_logger.error(f"field shape {values.shape} does not match grid {grid.shape}")
        raise ShapeError(f"field shape {values.shape} does not match grid {grid.shape}")
    X, Y = grid.mesh()
    difference = values - exact(X, Y, numeric.t)
    max_error = float(np.max(np.abs(difference))) if difference.size else 0.0
    l2_error = float(np.sqrt(grid.dx * grid.dy * np.sum(difference**2)))
    return max_error, l2_error


def convergence_rates(errors: Sequence[float], steps: Sequence[float]) -> List[float]:
    """
    rate[m] = log(e_m / e_{m+1}) / log(h_m / h_{m+1}).

    :raises ConfigurationError: If the lists differ in length or have fewer than 2 entries.
    :raises DegenerateRateError: On zero or negative entries, or repeated steps.
    """
    errors = np.asarray(errors, dtype=np.float64)
    steps = np.asarray(steps, dtype=np.float64)
    if errors.shape != steps.shape or errors.ndim != 1 or errors.size < 2:
        app_logger.error("rates need two equal-length lists with at least 2 entries")
        raise ConfigurationError("rates need two equal-length lists with at least 2 entries")
    if np.any(errors <= 0) or np.any(steps <= 0):
        app_logger.error("rates need strictly positive errors and steps")
        raise DegenerateRateError("rates need strictly positive errors and steps")
    step_ratios = np.log(steps[:-1] / steps[1:])
    if np.any(step_ratios == 0):
        app_logger.error("rates need distinct consecutive steps")
        raise DegenerateRateError("rates need distinct consecutive steps")
    return (np.log(errors[:-1] / errors[1:]) / step_ratios).tolist()


def fitted_order(errors: Sequence[float], steps: Sequence[float]) -> float:
    """
    Least-squares slope of log(error) against log(step).
    """
    errors = np.asarray(errors, dtype=np.float64)
    steps = np.asarray(steps, dtype=np.float64)
    if np.any(errors <= 0) or np.any(steps <= 0) or errors.size < 2:
        app_logger.error("a fitted order needs at least 2 positive errors and steps")
        raise DegenerateRateError("a fitted order needs at least 2 positive errors and steps")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)


@dataclass(frozen=True)
class LevelResult:
    step: float
    requested_step: float
    max_error: float
    l2_error: float
    grid_cells: Tuple[int, int]
    time_steps: int
    wall_time: float


@dataclass(frozen=True)
class ConvergenceReport:
    problem: str
    axis: str
    levels: List[LevelResult]
    rates: List[float]
    fixed_step: float
    t_end: float
    order: int = 4
    l2_rates: List[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        """
        One row per level: step, max_error, l2_error, rate (empty on the first row).
        """
        return pd.DataFrame(
            {
                "step": [level.step for level in self.levels],
                "max_error": [level.max_error for level in self.levels],
                "l2_error": [level.l2_error for level in self.levels],
                "rate": [np.nan] + list(self.rates),
            }
        )

    def to_dict(self, include_timing: bool = True) -> dict:
        levels = []
        for level in self.levels:
            entry = {
                "step": level.step,
                "requested_step": level.requested_step,
                "max_error": level.max_error,
                "l2_error": level.l2_error,
                "grid_cells": list(level.grid_cells),
                "time_steps": level.time_steps,
            }
            if include_timing:
                entry["wall_time"] = level.wall_time
            levels.append(entry)
        payload = {
            "problem": self.problem,
            "axis": self.axis,
            "order": self.order,
            "fixed_step": self.fixed_step,
            "t_end": self.t_end,
            "levels": levels,
            "rates": list(self.rates),
            "l2_rates": list(self.l2_rates),
            "parameters": self.metadata.get("parameters", {}),
        }
        if include_timing:
            payload["metadata"] = {
                key: value for key, value in self.metadata.items() if key != "parameters"
            }
        return payload


def _run_level(
    problem: ProblemSpec, axis: str, level: float, fixed_step: float, order: int, fit_dt: bool
) -> LevelResult:
    if axis == "space":
        grid, dt = problem.grid(h=level), fixed_step
    else:
        grid, dt = problem.grid(h=fixed_step), level
    steps, effective_dt = step_count(problem.t_end, dt, fit_dt=fit_dt)

    app_logger.info(f"Level {level!r} ({axis}): grid {grid.nx}x{grid.ny}, {steps} steps")
    started = time.perf_counter()
    numeric = solve(problem, grid, effective_dt, order=order)
    wall_time = time.perf_counter() - started
    max_error, l2_error = error_norms(numeric, problem.exact, grid)
    app_logger.info(f"Level {level!r} done: max error {max_error:.5e}, {wall_time:.2f}s")

    return LevelResult(
        step=grid.dx if axis == "space" else effective_dt,
        requested_step=float(level),
        max_error=max_error,
        l2_error=l2_error,
        grid_cells=(grid.m1, grid.m2),
        time_steps=steps,
        wall_time=wall_time,
    )


def default_fixed_step(problem: ProblemSpec, axis: str) -> float:
    """
    dt = 0.001 for space studies; h = 0.02 * side length for time studies.
    """
    if axis == "space":
        return 0.001
    return config.TIME_STUDY_FIXED_FRACTION * (problem.domain[1] - problem.domain[0])


def refinement_study(
    problem: ProblemSpec,
    axis: str,
    levels: Sequence[float],
    fixed_step: float = None,
    order: int = 4,
    fit_dt: bool = None,
    workers: int = None,
) -> ConvergenceReport:
    """
    Solve the problem at each refinement level and estimate convergence rates.

    :param problem: Problem with an exact solution.
    :param axis: "space" (levels are h, dt fixed) or "time" (levels are dt, h fixed).
    :param levels: Strictly decreasing step sizes.
    :param fixed_step: The step that is not refined; see ``default_fixed_step``.
    :param order: Spatial order of the operators.
    :param fit_dt: Fit dt to the end time, defaults to ``config.FIT_TIME_STEP``.
    :param workers: Levels solved concurrently, defaults to ``config.STUDY_WORKERS``.
    :raises RefinementLevelError: If a level fails; chains the solver error.
    :return: The convergence report.
    """
    if axis not in AXES:
        app_logger.error(f"axis must be one of {AXES}, got {axis!r}")
        raise ConfigurationError(f"axis must be one of {AXES}, got {axis!r}")
    if problem.exact is None:
        app_logger.error(f"{problem.name} has no exact solution to measure errors against")
        raise ConfigurationError(f"{problem.name} has no exact solution to measure errors against")
    levels = [float(level) for level in levels]
    if not levels or any(level <= 0 for level in levels):
        app_logger.error("levels must be a non-empty list of positive steps")
        raise ConfigurationError("levels must be a non-empty list of positive steps")
    if any(b >= a for a, b in zip(levels, levels[1:])):
        app_logger.error(f"levels must be strictly decreasing: {levels}")
        raise ConfigurationError(f"levels must be strictly decreasing: {levels}")

    fixed_step = default_fixed_step(problem, axis) if fixed_step is None else float(fixed_step)
    fit_dt = config.FIT_TIME_STEP if fit_dt is None else fit_dt
    workers = max(1, config.STUDY_WORKERS if workers is None else int(workers))
    app_logger.info(
        f"Refinement study of {problem.name} along {axis}: {len(levels)} levels, "
        f"fixed step {fixed_step!r}, {workers} worker(s)"
    )

    def run(level: float) -> LevelResult:
        try:
            return _run_level(problem, axis, level, fixed_step, order, fit_dt)
        except RieszAdiError as exc:
            app_logger.error(f"Level {level!r} failed: {exc}")
            raise RefinementLevelError(level, exc) from exc

    started = time.perf_counter()
    if workers == 1:
        results = [run(level) for level in levels]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, levels))

    max_errors = [level.max_error for level in results]
    steps = [level.step for level in results]
    rates, l2_rates = [], []
    if len(results) > 1:
        rates = convergence_rates(max_errors, steps)
        l2_rates = convergence_rates([level.l2_error for level in results], steps)
        if any(b >= a for a, b in zip(max_errors, max_errors[1:])):
            app_logger.warning(f"max errors do not decrease monotonically: {max_errors}")

    return ConvergenceReport(
        problem=problem.name,
        axis=axis,
        levels=results,
        rates=rates,
        fixed_step=fixed_step,
        t_end=problem.t_end,
        order=order,
        l2_rates=l2_rates,
        metadata={
            "parameters": problem.metadata(),
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "wall_time": time.perf_counter() - started,
            "env": config.ENV,
            "workers": workers,
        },
    )


def format_table(report: ConvergenceReport) -> str:
    """
    Plain-text table: step, maximum absolute error, estimated rate.
    """
    step_label = "h" if report.axis == "space" else "dt"
    fixed_label = "dt" if report.axis == "space" else "h"
    lines = [
        f"{report.problem}: {report.axis} refinement, fixed {fixed_label} = {report.fixed_step:.6g}, "
        f"t_end = {report.t_end:.6g}",
        f"{step_label:>12}  {'max abs error':>14}  {'rate':>8}",
    ]
    rates = [None] + list(report.rates)
    for level, rate in zip(report.levels, rates):
        rate_text = "-" if rate is None else f"{rate:.5f}"
        lines.append(f"{level.step:>12.5f}  {level.max_error:>14.5e}  {rate_text:>8}")
    return "\n".join(lines)


def report_paths(report: ConvergenceReport, out_dir: str) -> dict:
    stem = os.path.join(out_dir, f"{report.problem}_{report.axis}_study")
    return {"csv": f"{stem}.csv", "json": f"{stem}.json", "plot": f"{stem}.dat"}


def write_report(report: ConvergenceReport, out_dir: str, compare_mode: bool = False) -> dict:
    """
    Write <problem>_<axis>_study.{csv,json,dat} into ``out_dir``.

    The .dat file holds two columns, log(step) and log(max error), for plotting.
    With ``compare_mode`` the JSON leaves out timestamps and wall times so
    repeated runs give identical files.
    """
    paths = report_paths(report, out_dir)
    write_csv_atomic(report.to_frame(), paths["csv"])
    write_json_atomic(report.to_dict(include_timing=not compare_mode), paths["json"])
    rows = [(np.log(level.step), np.log(level.max_error)) for level in report.levels if level.max_error > 0]
    write_columns_atomic(rows, paths["plot"], header="log(step) log(max_error)")
    app_logger.info(f"Study report written: {', '.join(paths.values())}")
    return paths


def summarize_field(
    numeric: SolutionField, problem: ProblemSpec, grid: GridSpec
) -> Optional[dict]:
    """
    Error summary of a final field, None when the problem has no exact solution.
    """
    if problem.exact is None:
        return None
    max_error, l2_error = error_norms(numeric, problem.exact, grid)
    return {"max_error": max_error, "l2_error": l2_error}
