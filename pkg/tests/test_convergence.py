import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from riesz_adi import config
from riesz_adi.services.analysis.convergence import (
    ConvergenceReport,
    LevelResult,
    convergence_rates,
    default_fixed_step,
    error_norms,
    fitted_order,
    format_table,
    refinement_study,
    summarize_field,
    write_report,
)
from riesz_adi.services.numerics.adi import SolutionField, solve
from riesz_adi.services.problems.catalog import with_end_time
from riesz_adi.services.utils.exceptions import (
    ConfigurationError,
    DegenerateRateError,
    RefinementLevelError,
    ShapeError,
)

EXAMPLE1_REFERENCE_ERRORS = (3.19826e-3, 2.61740e-4, 1.90572e-5, 1.33477e-6)
EXAMPLE1_REFERENCE_RATES = (3.61108, 3.77973, 3.83567)
EXAMPLE2_REFERENCE_ERRORS = (3.26587e-4, 2.60038e-5, 1.81670e-6, 1.26448e-7)
EXAMPLE2_REFERENCE_RATES = (3.65067, 3.83933, 3.84471)


@pytest.mark.parametrize(
    "errors, expected",
    [
        ((3.19826e-3, 2.61740e-4), 3.61108),
        ((4.79240e-3, 1.46420e-3), 1.71063),
    ],
)
def test_reference_rates(errors, expected):
    [rate] = convergence_rates(errors, (0.1, 0.05))
    assert rate == pytest.approx(expected, abs=5e-5)


def test_reference_rates_from_reference_errors():
    rates = convergence_rates(EXAMPLE1_REFERENCE_ERRORS, (0.1, 0.05, 0.025, 0.0125))
    assert_allclose(rates, EXAMPLE1_REFERENCE_RATES, atol=1e-4)
    steps = np.pi * np.array([0.1, 0.05, 0.025, 0.0125])
    assert_allclose(convergence_rates(EXAMPLE2_REFERENCE_ERRORS, steps), EXAMPLE2_REFERENCE_RATES, atol=1e-4)


def test_rates_of_exact_power_law():
    steps = [0.2, 0.1, 0.05, 0.025]
    errors = [7.0 * h**3 for h in steps]
    assert_allclose(convergence_rates(errors, steps), 3.0, rtol=1e-12)
    assert fitted_order(errors, steps) == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize(
    "errors, steps, error",
    [
        ((1e-3,), (0.1,), ConfigurationError),
        ((1e-3, 1e-4), (0.1, 0.05, 0.025), ConfigurationError),
        ((1e-3, 0.0), (0.1, 0.05), DegenerateRateError),
        ((1e-3, 1e-4), (0.1, -0.05), DegenerateRateError),
        ((1e-3, 1e-4), (0.1, 0.1), DegenerateRateError),
    ],
)
def test_rate_errors(errors, steps, error):
    with pytest.raises(error):
        convergence_rates(errors, steps)


def test_error_norms(problem1, small_grid):
    X, Y = small_grid.mesh()
    exact = problem1.exact(X, Y, 0.5)
    numeric = SolutionField(values=exact + 0.01, t=0.5)
    max_error, l2_error = error_norms(numeric, problem1.exact, small_grid)
    assert max_error == pytest.approx(0.01)
    cells = small_grid.nx * small_grid.ny
    assert l2_error == pytest.approx(0.01 * np.sqrt(small_grid.dx * small_grid.dy * cells))

    with pytest.raises(ShapeError):
        error_norms(SolutionField(values=np.zeros((3, 3)), t=0.5), problem1.exact, small_grid)


def test_summarize_field(problem1, zero, small_grid):
    numeric = SolutionField(values=np.zeros(small_grid.shape), t=0.0)
    assert summarize_field(numeric, problem1, small_grid) == {"max_error": 0.0, "l2_error": 0.0}
    no_exact = replace(zero, exact=None)
    assert summarize_field(numeric, no_exact, small_grid) is None


def test_default_fixed_step(problem1, problem2):
    assert default_fixed_step(problem1, "space") == 0.001
    assert default_fixed_step(problem1, "time") == pytest.approx(0.02)
    assert default_fixed_step(problem2, "time") == pytest.approx(0.02 * np.pi)


def _quick_space_study(problem, workers=1):
    return refinement_study(
        with_end_time(problem, 0.5), "space", [0.25, 0.125, 0.0625], fixed_step=0.01, workers=workers
    )


def test_space_study_report(problem1):
    report = _quick_space_study(problem1)
    assert report.axis == "space"
    assert [level.step for level in report.levels] == pytest.approx([0.25, 0.125, 0.0625])
    assert [level.grid_cells for level in report.levels] == [(4, 4), (8, 8), (16, 16)]
    assert all(level.time_steps == 50 for level in report.levels)
    assert len(report.rates) == 2 and len(report.l2_rates) == 2
    assert all(rate > 0 for rate in report.rates)

    frame = report.to_frame()
    assert list(frame.columns) == ["step", "max_error", "l2_error", "rate"]
    assert len(frame) == 3
    assert np.isnan(frame["rate"].iloc[0])


def test_study_is_independent_of_workers(problem1):
    serial = _quick_space_study(problem1, workers=1)
    pooled = _quick_space_study(problem1, workers=3)
    assert [level.max_error for level in serial.levels] == [level.max_error for level in pooled.levels]


def test_time_study_uses_effective_steps(problem1):
    report = refinement_study(problem1, "time", [0.5, 0.25], fixed_step=0.25)
    # pi / 0.5 is not integral; steps are fitted to the end time.
    assert report.levels[0].time_steps == 7
    assert report.levels[0].step == pytest.approx(np.pi / 7)
    assert report.levels[0].requested_step == 0.5
    assert report.fixed_step == 0.25


def test_single_level_has_no_rates(problem1):
    report = refinement_study(with_end_time(problem1, 0.1), "space", [0.25], fixed_step=0.01)
    assert report.rates == []
    assert "-" in format_table(report)


@pytest.mark.parametrize(
    "axis, levels",
    [
        ("diagonal", [0.1, 0.05]),
        ("space", [0.05, 0.1]),
        ("space", [0.1, 0.1]),
        ("space", []),
        ("space", [0.1, -0.05]),
    ],
)
def test_study_arguments(problem1, axis, levels):
    with pytest.raises(ConfigurationError):
        refinement_study(problem1, axis, levels)


def test_failed_level_is_wrapped(problem1):
    with pytest.raises(RefinementLevelError) as excinfo:
        refinement_study(with_end_time(problem1, 0.1), "space", [0.5, 0.3], fixed_step=0.01)
    assert excinfo.value.level == 0.3
    assert isinstance(excinfo.value.__cause__, ConfigurationError)


def test_format_table():
    levels = [
        LevelResult(0.1, 0.1, 3.19826e-3, 1e-3, (10, 10), 3142, 0.1),
        LevelResult(0.05, 0.05, 2.61740e-4, 1e-4, (20, 20), 3142, 0.2),
    ]
    report = ConvergenceReport("example1", "space", levels, [3.61108], 0.001, np.pi)
    text = format_table(report)
    lines = text.splitlines()
    assert "fixed dt = 0.001" in lines[0]
    assert lines[1].split() == ["h", "max", "abs", "error", "rate"]
    assert lines[2].split() == ["0.10000", "3.19826e-03", "-"]
    assert lines[3].split() == ["0.05000", "2.61740e-04", "3.61108"]


def test_write_report_files(problem1, tmp_path):
    report = _quick_space_study(problem1)
    paths = write_report(report, str(tmp_path))
    assert sorted(paths) == ["csv", "json", "plot"]

    frame = pd.read_csv(paths["csv"], float_precision="round_trip")
    assert len(frame) == 3
    assert frame["max_error"].tolist() == [level.max_error for level in report.levels]

    payload = json.loads(open(paths["json"]).read())
    assert payload["rates"] == report.rates
    assert payload["parameters"]["alpha"] == 1.8
    assert "created_at" in payload["metadata"]
    assert payload["metadata"]["env"] == config.ENV

    rows = np.loadtxt(paths["plot"])
    assert_allclose(rows[:, 0], np.log([0.25, 0.125, 0.0625]))


def test_compare_mode_is_byte_identical(problem1, tmp_path):
    first = write_report(_quick_space_study(problem1), str(tmp_path / "a"), compare_mode=True)
    second = write_report(_quick_space_study(problem1), str(tmp_path / "b"), compare_mode=True)
    for key in ("csv", "json", "plot"):
        with open(first[key], "rb") as a, open(second[key], "rb") as b:
            assert a.read() == b.read()
    assert "metadata" not in json.loads(open(first["json"]).read())


@pytest.mark.slow
def test_spatial_convergence_example1(problem1):
    levels = [0.1, 0.05, 0.025, 0.0125]
    report = refinement_study(problem1, "space", levels, fixed_step=0.001)
    measured = [level.max_error for level in report.levels]
    assert measured[0] == pytest.approx(1.0011e-5, rel=0.05)
    assert all(b < a for a, b in zip(measured, measured[1:]))
    assert all(1.4 < rate < 2.5 for rate in report.rates)
    assert 1.6 <= fitted_order(measured, levels) <= 2.3


@pytest.mark.slow
def test_spatial_convergence_example2(problem2):
    # x(pi-x) extended by zero is only continuous across the boundary.
    levels = [0.1 * np.pi, 0.05 * np.pi, 0.025 * np.pi, 0.0125 * np.pi]
    report = refinement_study(problem2, "space", levels, fixed_step=0.001)
    measured = [level.max_error for level in report.levels]
    assert_allclose(measured[:3], [2.8805e-2, 1.33e-2, 6.13e-3], rtol=0.05)
    assert all(b < a for a, b in zip(measured, measured[1:]))
    assert all(1.0 < rate < 1.3 for rate in report.rates)


@pytest.mark.slow
def test_temporal_convergence_example1(problem1):
    report = refinement_study(problem1, "time", [0.1, 0.05, 0.025, 0.0125], fixed_step=0.00625)
    assert report.rates[-1] >= 1.75
    assert all(rate > 1.4 for rate in report.rates)


@pytest.mark.slow
def test_temporal_study_example2_reaches_spatial_floor(problem2):
    report = refinement_study(problem2, "time", [0.1, 0.05, 0.025, 0.0125], fixed_step=0.0125 * np.pi)
    finest, previous = report.levels[-1].max_error, report.levels[-2].max_error
    assert finest == pytest.approx(previous, rel=0.05)
    assert report.rates[-1] < 0.5


@pytest.mark.slow
def test_temporal_self_convergence_example2(problem2):
    # Differences between successive dt on one grid cancel the spatial error.
    grid = problem2.grid(h=0.05 * np.pi)
    steps = [0.1, 0.05, 0.025, 0.0125]
    fields = [solve(problem2, grid, dt).values for dt in steps]
    gaps = [np.max(np.abs(a - b)) for a, b in zip(fields, fields[1:])]
    rates = convergence_rates(gaps, steps[:-1])
    assert rates[-1] >= 1.75
    assert all(rate > 1.4 for rate in rates)
