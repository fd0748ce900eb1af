"""
Crank-Nicolson Peaceman-Rachford time stepping.

With the weighted directional operators

    Lx = d_alpha M_alpha + c_beta M_beta      (nx x nx, acting along x)
    Ly = d_mu M_mu + c_nu M_nu                (ny x ny, acting along y)

and Mx = (dt/2) Lx, My = (dt/2) Ly, one step solves

    (I + Mx) u*      = (I - My) u^n + (dt/2) s^{n+1/2}
    (I + My) u^{n+1} = (I - Mx) u*  + (dt/2) s^{n+1/2}

Because Mx and My act on different axes they commute, and the two half
steps recombine exactly into the factored scheme
(I + Mx)(I + My) u^{n+1} = (I - Mx)(I - My) u^n + dt s^{n+1/2}.

Fields are (nx, ny) arrays indexed [i, j] with i along x. A solve along x
treats every column j as a right-hand side of one factorization, a solve along
y every row i; all slices of a half step go to LAPACK in a single call.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from ... import config
from ..problems.catalog import ProblemSpec
from ..utils.exceptions import (
    ArgumentError,
    ConfigurationError,
    DivergenceError,
    OracleCapacityError,
    ShapeError,
    SingularityError,
)
from ..utils.logger import app_logger
from .grid import GridSpec
from .operators import apply_along_x, apply_along_y, assemble_riesz_matrix


@dataclass(frozen=True)
class SolutionField:
    """
    Interior values u[i, j] at (x_i, y_j) after ``step`` steps, at time ``t``.
    """

    values: np.ndarray
    t: float = 0.0
    step: int = 0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


class Factorization:
    """
    Factorization of a symmetric matrix reused for many solves.

    Cholesky is tried first; an LU factorization is the fallback for
    matrices that are not numerically positive definite.
    """

    def __init__(self, matrix: np.ndarray, label: str = "matrix"):
        self.label = label
        try:
            self._factor = linalg.cho_factor(matrix, lower=True)
            self.kind = "cholesky"
        except linalg.LinAlgError:
            app_logger.warning(f"Cholesky failed for {label}, falling back to LU")
            lu, piv = linalg.lu_factor(matrix, check_finite=True)
            if np.any(np.diag(lu) == 0.0):
                app_logger.error(f"{label} is singular")
                raise SingularityError(f"{label} is singular")
            self._factor = (lu, piv)
            self.kind = "lu"

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.kind == "cholesky":
            return linalg.cho_solve(self._factor, rhs, check_finite=False)
        return linalg.lu_solve(self._factor, rhs, check_finite=False)


@dataclass(frozen=True)
class SweepOperators:
    mx: np.ndarray = field(repr=False)
    my: np.ndarray = field(repr=False)
    factor_x: Factorization = field(repr=False)
    factor_y: Factorization = field(repr=False)
    dt: float = 0.0

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.mx.shape[0], self.my.shape[0])


def _validate_dt(dt: float) -> float:
    if not (np.isfinite(dt) and dt > 0):
        app_logger.error(f"time step must be positive, got {dt!r}")
        raise ArgumentError(f"time step must be positive, got {dt!r}")
    return float(dt)


def _check_grid(problem: ProblemSpec, grid: GridSpec) -> None:
    if not np.allclose(grid.domain, problem.domain, rtol=1e-12, atol=1e-12):
        app_logger.error(f"grid domain {grid.domain} differs from problem domain {problem.domain}")
        raise ConfigurationError(
            f"grid domain {grid.domain} differs from problem domain {problem.domain}"
        )


def _weighted_operator(
    n: int, h: float, dispersion: Tuple[float, float], advection: Tuple[float, float], order: int
) -> np.ndarray:
    (gamma_d, weight_d), (gamma_c, weight_c) = dispersion, advection
    operator = weight_d * assemble_riesz_matrix(gamma_d, n, h, order=order).matrix
    if weight_c != 0.0:
        operator = operator + weight_c * assemble_riesz_matrix(gamma_c, n, h, order=order).matrix
    return operator


def directional_operators(
    problem: ProblemSpec, grid: GridSpec, order: int = 4
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted operators (Lx, Ly); the semi-discrete system is u' = -(Lx u + u Ly^T) + s.
    """
    _check_grid(problem, grid)
    lx = _weighted_operator(
        grid.nx, grid.dx, (problem.alpha, problem.d_alpha), (problem.beta, problem.c_beta), order
    )
    ly = _weighted_operator(
        grid.ny, grid.dy, (problem.mu, problem.d_mu), (problem.nu, problem.c_nu), order
    )
    return lx, ly


def build_sweep_operators(
    problem: ProblemSpec, grid: GridSpec, dt: float, order: int = 4
) -> SweepOperators:
    """
    Assemble Mx, My and factorize (I + Mx), (I + My) once for all steps.

    :param problem: The problem; its orders and coefficients were validated on construction.
    :param grid: Grid on the problem's rectangle.
    :param dt: Time step.
    :param order: Spatial order of the Riesz operators (4 or 2).
    :raises SingularityError: If a factorization fails.
    :return: The sweep operators.
    """
    dt = _validate_dt(dt)
    lx, ly = directional_operators(problem, grid, order=order)
    mx = 0.5 * dt * lx
    my = 0.5 * dt * ly
    mx.setflags(write=False)
    my.setflags(write=False)
    factor_x = Factorization(np.eye(grid.nx) + mx, "I + Mx")
    factor_y = Factorization(np.eye(grid.ny) + my, "I + My")
    app_logger.debug(
        f"Sweep operators built for {problem.name}: grid {grid.nx}x{grid.ny}, dt={dt!r}, "
        f"factorizations {factor_x.kind}/{factor_y.kind}"
    )
    return SweepOperators(mx=mx, my=my, factor_x=factor_x, factor_y=factor_y, dt=dt)


def _check_finite(values: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(values)):
        app_logger.error(f"non-finite values after step {step}")
        raise DivergenceError(f"non-finite values after step {step}")


def _check_field_shape(values: np.ndarray, shape: Tuple[int, int], label: str) -> None:
    if values.shape != shape:
        app_logger.error(f"{label} has shape {values.shape}, expected {shape}")
        raise ShapeError(f"{label} has shape {values.shape}, expected {shape}")


def sample_source_half(
    problem: ProblemSpec, grid: GridSpec, t: float, dt: float
) -> np.ndarray:
    """
    (s^{n+1} + s^n) / 2 on the interior nodes for the step from t to t + dt.
    """
    X, Y = grid.mesh()
    return 0.5 * (problem.source(X, Y, t) + problem.source(X, Y, t + dt))


def pr_step(state: SolutionField, ops: SweepOperators, source_half: np.ndarray) -> SolutionField:
    """
    Advance one Peaceman-Rachford step.

    :param state: Field at t_n.
    :param ops: Sweep operators built for the same grid and time step.
    :param source_half: Interior samples of s^{n+1/2}.
    :raises ShapeError: If the shapes disagree.
    :raises DivergenceError: If the result is not finite.
    :return: Field at t_n + dt.
    """
    u = np.asarray(state.values, dtype=np.float64)
    source_half = np.asarray(source_half, dtype=np.float64)
    _check_field_shape(u, ops.shape, "state")
    _check_field_shape(source_half, ops.shape, "source")
    half_source = 0.5 * ops.dt * source_half

    # Step 1: implicit along x on every fixed-y column.
    u_star = ops.factor_x.solve(u - apply_along_y(ops.my, u) + half_source)
    # Step 2: implicit along y on every fixed-x row.
    rhs = u_star - apply_along_x(ops.mx, u_star) + half_source
    u_next = ops.factor_y.solve(rhs.T).T

    _check_finite(u_next, state.step + 1)
    return SolutionField(values=u_next, t=state.t + ops.dt, step=state.step + 1)


def _kron_operator(lx: np.ndarray, ly: np.ndarray) -> np.ndarray:
    # Row-major flattening of an (nx, ny) field: index i * ny + j.
    return np.kron(lx, np.eye(ly.shape[0])) + np.kron(np.eye(lx.shape[0]), ly)


def _check_capacity(unknowns: int, max_unknowns: Optional[int], label: str) -> None:
    cap = config.ORACLE_MAX_UNKNOWNS if max_unknowns is None else max_unknowns
    if unknowns > cap:
        app_logger.error(f"{label} needs {unknowns} unknowns, cap is {cap}")
        raise OracleCapacityError(f"{label} needs {unknowns} unknowns, cap is {cap}")


def cn_unsplit_step(
    state: SolutionField,
    problem: ProblemSpec,
    grid: GridSpec,
    dt: float,
    source_half: np.ndarray,
    order: int = 4,
    max_unknowns: int = None,
) -> SolutionField:
    """
    One unsplit Crank-Nicolson step with the dense Kronecker-assembled 2D operator.

    Solves [I + (dt/2) L] u^{n+1} = [I - (dt/2) L] u^n + dt s^{n+1/2}. Test
    oracle for small grids only.

    :raises OracleCapacityError: If nx*ny exceeds the oracle cap.
    """
    dt = _validate_dt(dt)
    unknowns = grid.nx * grid.ny
    _check_capacity(unknowns, max_unknowns, "unsplit Crank-Nicolson oracle")
    u = np.asarray(state.values, dtype=np.float64)
    source_half = np.asarray(source_half, dtype=np.float64)
    _check_field_shape(u, grid.shape, "state")
    _check_field_shape(source_half, grid.shape, "source")

    lx, ly = directional_operators(problem, grid, order=order)
    operator = 0.5 * dt * _kron_operator(lx, ly)
    identity = np.eye(unknowns)
    rhs = (identity - operator) @ u.reshape(-1) + dt * source_half.reshape(-1)
    u_next = linalg.solve(identity + operator, rhs, assume_a="pos").reshape(grid.shape)

    _check_finite(u_next, state.step + 1)
    return SolutionField(values=u_next, t=state.t + dt, step=state.step + 1)


def explicit_euler_step(
    state: SolutionField,
    problem: ProblemSpec,
    grid: GridSpec,
    dt: float,
    source_now: np.ndarray,
    operators: Tuple[np.ndarray, np.ndarray] = None,
    order: int = 4,
) -> SolutionField:
    """
    Forward-Euler reference step u^{n+1} = u^n - dt (Lx u^n + u^n Ly^T) + dt s^n.

    Only conditionally stable; the caller picks dt. ``operators`` may carry
    precomputed (Lx, Ly) to avoid reassembly on every step.
    """
    dt = _validate_dt(dt)
    u = np.asarray(state.values, dtype=np.float64)
    _check_field_shape(u, grid.shape, "state")
    _check_field_shape(np.asarray(source_now), grid.shape, "source")
    lx, ly = operators if operators is not None else directional_operators(problem, grid, order)

    u_next = u - dt * (apply_along_x(lx, u) + apply_along_y(ly, u)) + dt * np.asarray(source_now)

    _check_finite(u_next, state.step + 1)
    return SolutionField(values=u_next, t=state.t + dt, step=state.step + 1)


def step_count(t_end: float, dt: float, fit_dt: bool = False) -> Tuple[int, float]:
    """
    Number of uniform steps to reach t_end and the step actually used.

    :param fit_dt: When t_end/dt is not integral, use N = ceil(t_end/dt) steps
        of size t_end/N instead of failing.
    :raises ConfigurationError: If t_end/dt is not integral and fit_dt is off.
    """
    dt = _validate_dt(dt)
    if not (np.isfinite(t_end) and t_end > 0):
        app_logger.error(f"t_end must be positive, got {t_end!r}")
        raise ConfigurationError(f"t_end must be positive, got {t_end!r}")
    ratio = t_end / dt
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= config.STEP_COUNT_RTOL * ratio:
        return int(nearest), float(t_end / nearest)
    if not fit_dt:
        app_logger.error(f"t_end/dt = {ratio!r} is not an integer step count")
        raise ConfigurationError(f"t_end/dt = {ratio!r} is not an integer step count")
    steps = max(1, math.ceil(ratio))
    fitted = float(t_end / steps)
    app_logger.warning(f"dt={dt!r} does not divide t_end={t_end!r}; using {steps} steps of {fitted!r}")
    return steps, fitted


def initial_field(problem: ProblemSpec, grid: GridSpec) -> SolutionField:
    X, Y = grid.mesh()
    values = np.asarray(problem.initial(X, Y), dtype=np.float64) * np.ones(grid.shape)
    return SolutionField(values=values, t=0.0, step=0)


def solve(
    problem: ProblemSpec,
    grid: GridSpec,
    dt: float,
    t_end: float = None,
    fit_dt: bool = False,
    order: int = 4,
    on_step: Optional[Callable[[SolutionField], None]] = None,
) -> SolutionField:
    """
    Integrate from the initial data to t_end with Peaceman-Rachford steps.

    :param problem: Problem definition.
    :param grid: Grid on the problem's rectangle.
    :param dt: Time step.
    :param t_end: End time, defaults to ``problem.t_end``.
    :param fit_dt: Shrink dt to t_end/ceil(t_end/dt) when it does not divide t_end.
    :param order: Spatial order of the operators.
    :param on_step: Called with the field after every step.
    :raises ConfigurationError: On a non-integral step count without fit_dt.
    :raises DivergenceError: If the field stops being finite.
    :return: The field at t_end.
    """
    t_end = problem.t_end if t_end is None else float(t_end)
    steps, dt = step_count(t_end, dt, fit_dt=fit_dt)
    ops = build_sweep_operators(problem, grid, dt, order=order)

    X, Y = grid.mesh()
    state = initial_field(problem, grid)
    _check_finite(state.values, 0)
    app_logger.info(
        f"Solving {problem.name}: grid {grid.nx}x{grid.ny}, dt={dt!r}, {steps} steps to t={t_end!r}"
    )

    started = time.perf_counter()
    report_every = max(1, steps // 10)
    source_now = problem.source(X, Y, 0.0)
    for n in range(steps):
        source_next = problem.source(X, Y, (n + 1) * dt)
        state = pr_step(state, ops, 0.5 * (source_now + source_next))
        state = replace(state, t=(n + 1) * dt)
        source_now = source_next
        if on_step is not None:
            on_step(state)
        if (n + 1) % report_every == 0:
            app_logger.debug(f"step {n + 1}/{steps}, t={state.t:.6g}, max|u|={state.max_abs():.6g}")

    app_logger.info(f"Finished {steps} steps in {time.perf_counter() - started:.2f}s")
    return replace(state, t=t_end)


def pr_iteration_spectral_radius(
    ops: SweepOperators, lifted: bool = False, max_unknowns: int = None
) -> float:
    """
    Spectral radius of the Peaceman-Rachford iteration matrix
    (I+My)^{-1}(I-Mx)(I+Mx)^{-1}(I-My).

    Mx and My act on different axes, so the 2D matrix is the Kronecker
    product of the two 1D Cayley transforms and its radius is the product of
    their radii. ``lifted=True`` forms the 2D matrix and computes its
    eigenvalues directly.

    :raises OracleCapacityError: If the lifted matrix exceeds the oracle cap.
    """
    if lifted:
        nx, ny = ops.shape
        _check_capacity(nx * ny, max_unknowns, "lifted iteration matrix")
        cayley_x = ops.factor_x.solve(np.eye(nx) - ops.mx)
        cayley_y = ops.factor_y.solve(np.eye(ny) - ops.my)
        return float(np.max(np.abs(np.linalg.eigvals(np.kron(cayley_x, cayley_y)))))

    def radius(m: np.ndarray) -> float:
        eigenvalues = linalg.eigvalsh(m)
        return float(np.max(np.abs((1.0 - eigenvalues) / (1.0 + eigenvalues))))

    return radius(ops.mx) * radius(ops.my)


def scheme_residual(
    problem: ProblemSpec, grid: GridSpec, dt: float, t: float = 0.0, order: int = 4
) -> float:
    """
    Max-norm local truncation residual of the factored scheme on the exact solution

        [(I+Mx)(I+My) u(t+dt) - (I-Mx)(I-My) u(t) - dt s(t+dt/2)] / dt

    which is O(dt^2 + h^4) for smooth solutions.
    """
    if problem.exact is None:
        app_logger.error(f"{problem.name} has no exact solution")
        raise ConfigurationError(f"{problem.name} has no exact solution")
    ops = build_sweep_operators(problem, grid, dt, order=order)
    X, Y = grid.mesh()
    u_now = problem.exact(X, Y, t)
    u_next = problem.exact(X, Y, t + ops.dt)

    def forward(u, sign):
        v = u + sign * apply_along_y(ops.my, u)
        return v + sign * apply_along_x(ops.mx, v)

    residual = forward(u_next, 1.0) - forward(u_now, -1.0) - ops.dt * sample_source_half(
        problem, grid, t, ops.dt
    )
    return float(np.max(np.abs(residual)) / ops.dt)
