"""
Problem catalog for the two-dimensional Riesz space-fractional
advection-dispersion equation

    u_t = d_alpha R^alpha_x u + c_beta R^beta_x u + d_mu R^mu_y u + c_nu R^nu_y u + s

with homogeneous Dirichlet data on a rectangle.

Problems carry functions, not samples, so one definition serves every grid.
The manufactured families are separable, u = g(t) f(x) f(y), and their source
is recomputed from the problem's own orders and coefficients:

    s = g'(t) f(x) f(y) - g(t) [ (d_alpha R^alpha f + c_beta R^beta f)(x) f(y)
                                + f(x) (d_mu R^mu f + c_nu R^nu f)(y) ]
"""

import json
import os
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..numerics.coefficients import validate_order
from ..numerics.grid import GridSpec
from ..utils.exceptions import (
    ConfigurationError,
    OrderDomainError,
    ProblemSpecError,
    UnknownProblemError,
)
from ..utils.logger import app_logger
from .closed_forms import riesz_derivative_poly1, riesz_derivative_poly2

SpaceFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
SpaceTimeFunction = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

UNIT_SQUARE = (0.0, 1.0, 0.0, 1.0)
PI_SQUARE = (0.0, np.pi, 0.0, np.pi)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    alpha: float
    beta: float
    mu: float
    nu: float
    d_alpha: float
    c_beta: float
    d_mu: float
    c_nu: float
    domain: Tuple[float, float, float, float]
    t_end: float
    initial: SpaceFunction
    source: SpaceTimeFunction
    exact: Optional[SpaceTimeFunction] = None
    family: str = "custom"

    def __post_init__(self):
        _check_order(self.alpha, "alpha", dispersive=True)
        _check_order(self.mu, "mu", dispersive=True)
        _check_order(self.beta, "beta", dispersive=False)
        _check_order(self.nu, "nu", dispersive=False)
        if not (self.d_alpha > 0 and self.d_mu > 0):
            _fail(f"dispersion coefficients must be positive: d_alpha={self.d_alpha}, d_mu={self.d_mu}")
        if not (self.c_beta >= 0 and self.c_nu >= 0):
            _fail(f"advection coefficients must be >= 0: c_beta={self.c_beta}, c_nu={self.c_nu}")
        x_lo, x_hi, y_lo, y_hi = self.domain
        if not (x_hi > x_lo and y_hi > y_lo):
            _fail(f"degenerate domain {self.domain}")
        if not self.t_end > 0:
            _fail(f"t_end must be positive, got {self.t_end}")
        if self.exact is not None:
            self._check_exact_boundary()

    def _check_exact_boundary(self) -> None:
        x_lo, x_hi, y_lo, y_hi = self.domain
        s = np.linspace(0.0, 1.0, 7)
        xs = x_lo + (x_hi - x_lo) * s
        ys = y_lo + (y_hi - y_lo) * s
        bx = np.concatenate([xs, xs, np.full(7, x_lo), np.full(7, x_hi)])
        by = np.concatenate([np.full(7, y_lo), np.full(7, y_hi), ys, ys])
        for t in (0.0, 0.5 * self.t_end, self.t_end):
            if np.max(np.abs(self.exact(bx, by, t))) > 1e-12:
                _fail(f"exact solution of {self.name} does not vanish on the boundary")

    @property
    def orders(self) -> Dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "mu": self.mu, "nu": self.nu}

    @property
    def coefficients(self) -> Dict[str, float]:
        return {
            "d_alpha": self.d_alpha,
            "c_beta": self.c_beta,
            "d_mu": self.d_mu,
            "c_nu": self.c_nu,
        }

    def grid(self, h: float = None, m1: int = None, m2: int = None) -> GridSpec:
        """
        Grid on this problem's rectangle from a step h or cell counts (m1, m2).
        """
        if h is not None and (m1 is not None or m2 is not None):
            app_logger.error("give either a step h or cell counts, not both")
            raise ConfigurationError("give either a step h or cell counts, not both")
        if h is not None:
            return GridSpec.from_step(self.domain, h)
        if m1 is None:
            app_logger.error("a grid needs a step h or cell counts")
            raise ConfigurationError("a grid needs a step h or cell counts")
        return GridSpec(*self.domain, m1, m2 if m2 is not None else m1)

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            **self.orders,
            **self.coefficients,
            "domain": list(self.domain),
            "t_end": self.t_end,
        }


def _fail(message: str) -> None:
    app_logger.error(message)
    raise ProblemSpecError(message)


def _check_order(value: float, name: str, dispersive: bool) -> None:
    try:
        value = validate_order(value, name)
    except OrderDomainError as exc:
        raise ProblemSpecError(str(exc)) from exc
    if dispersive and not value > 1.0:
        _fail(f"{name}={value} outside (1, 2]")
    if not dispersive and not value < 1.0:
        _fail(f"{name}={value} outside (0, 1)")


@dataclass(frozen=True)
class _SeparableFamily:
    """
    u(x, y, t) = g(t) f(x) f(y) with the closed-form Riesz derivative of f.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    riesz: Callable[[float, np.ndarray], np.ndarray]
    g: Callable[[float], float]
    g_rate: Callable[[float], float]
    domain: Tuple[float, float, float, float]


def _separable_problem(
    name: str, family_name: str, family: _SeparableFamily, orders: dict, coefficients: dict, t_end: float
) -> ProblemSpec:
    alpha, beta, mu, nu = (orders[k] for k in ("alpha", "beta", "mu", "nu"))
    d_alpha, c_beta, d_mu, c_nu = (coefficients[k] for k in ("d_alpha", "c_beta", "d_mu", "c_nu"))
    f, riesz, g, g_rate = family.profile, family.riesz, family.g, family.g_rate

    def exact(x, y, t):
        return g(t) * f(x) * f(y)

    def initial(x, y):
        return exact(x, y, 0.0)

    def source(x, y, t):
        along_x = d_alpha * riesz(alpha, x) + c_beta * riesz(beta, x)
        along_y = d_mu * riesz(mu, y) + c_nu * riesz(nu, y)
        return g_rate(t) * f(x) * f(y) - g(t) * (along_x * f(y) + f(x) * along_y)

    return ProblemSpec(
        name=name,
        alpha=alpha,
        beta=beta,
        mu=mu,
        nu=nu,
        d_alpha=d_alpha,
        c_beta=c_beta,
        d_mu=d_mu,
        c_nu=c_nu,
        domain=family.domain,
        t_end=t_end,
        initial=initial,
        source=source,
        exact=exact,
        family=family_name,
    )


_POLY1 = _SeparableFamily(
    profile=lambda z: z**2 * (1.0 - z) ** 2,
    riesz=riesz_derivative_poly1,
    g=lambda t: np.sin(np.pi * t),
    g_rate=lambda t: np.pi * np.cos(np.pi * t),
    domain=UNIT_SQUARE,
)

_POLY2 = _SeparableFamily(
    profile=lambda z: z * (np.pi - z),
    riesz=riesz_derivative_poly2,
    g=lambda t: np.exp(-t),
    g_rate=lambda t: -np.exp(-t),
    domain=PI_SQUARE,
)

_EXAMPLE1_ORDERS = {"alpha": 1.8, "beta": 0.9, "mu": 1.6, "nu": 0.7}
_EXAMPLE2_ORDERS = {"alpha": 1.8, "beta": 0.7, "mu": 1.6, "nu": 0.5}
_DEFAULT_COEFFICIENTS = {"d_alpha": 0.25, "c_beta": 0.05, "d_mu": 0.25, "c_nu": 0.05}


def example1() -> ProblemSpec:
    """
    u = x^2 y^2 (1-x)^2 (1-y)^2 sin(pi t) on (0,1)^2, 0 < t <= pi.
    """
    return _separable_problem(
        "example1", "example1", _POLY1, _EXAMPLE1_ORDERS, _DEFAULT_COEFFICIENTS, np.pi
    )


def example2() -> ProblemSpec:
    """
    u = x y (pi-x) (pi-y) e^{-t} on (0,pi)^2, 0 < t <= 2.
    """
    return _separable_problem(
        "example2", "example2", _POLY2, _EXAMPLE2_ORDERS, _DEFAULT_COEFFICIENTS, 2.0
    )


def zero_problem(
    domain: Tuple[float, float, float, float] = UNIT_SQUARE,
    t_end: float = 1.0,
    orders: dict = None,
    coefficients: dict = None,
    name: str = "zero",
) -> ProblemSpec:
    """
    Homogeneous problem: zero initial data, source and exact solution.
    """
    orders = {**_EXAMPLE1_ORDERS, **(orders or {})}
    coefficients = {**_DEFAULT_COEFFICIENTS, **(coefficients or {})}

    def zero_field(x, y, t=0.0):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return ProblemSpec(
        name=name,
        **orders,
        **coefficients,
        domain=tuple(float(v) for v in domain),
        t_end=t_end,
        initial=zero_field,
        source=zero_field,
        exact=zero_field,
        family="zero",
    )


CATALOG: Dict[str, Callable[[], ProblemSpec]] = {
    "example1": example1,
    "example2": example2,
    "zero": zero_problem,
}

_FAMILIES = {"example1": (_POLY1, _EXAMPLE1_ORDERS, np.pi), "example2": (_POLY2, _EXAMPLE2_ORDERS, 2.0)}
_PROBLEM_FILE_KEYS = {
    "name",
    "family",
    "alpha",
    "beta",
    "mu",
    "nu",
    "d_alpha",
    "c_beta",
    "d_mu",
    "c_nu",
    "t_end",
    "domain",
}


def get_problem(name: str) -> ProblemSpec:
    """
    Look up a built-in problem by name.

    :raises UnknownProblemError: If the name is not in the catalog.
    """
    try:
        factory = CATALOG[name]
    except KeyError:
        app_logger.error(f"unknown problem: {name}")
        raise UnknownProblemError(f"unknown problem: {name}") from None
    return factory()


def read_json_file(path: str) -> dict:
    """
    Read a flat JSON object, naming the offending line when it is malformed.

    :raises ConfigurationError: If the file is not a JSON object.
    """
    if not os.path.exists(path):
        app_logger.error(f"file not found: {path}")
        raise ConfigurationError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as file:
        text = file.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        app_logger.error(f"{path}: line {exc.lineno}: {exc.msg}")
        raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        app_logger.error(f"{path}: line 1: expected a JSON object")
        raise ConfigurationError(f"{path}: line 1: expected a JSON object")
    return payload


def load_problem(path: str) -> ProblemSpec:
    """
    Load a problem file.

    The file names a ``family`` (example1, example2 or zero) and may override
    the orders, coefficients and ``t_end``; the zero family also accepts a
    ``domain`` [x_lo, x_hi, y_lo, y_hi].

    :raises ConfigurationError: On unknown keys or a malformed file.
    :raises ProblemSpecError: On invalid orders or coefficients.
    """
    payload = read_json_file(path)
    unknown = sorted(set(payload) - _PROBLEM_FILE_KEYS)
    if unknown:
        app_logger.error(f"{path}: unknown keys {unknown}")
        raise ConfigurationError(f"{path}: unknown keys {unknown}")

    family = payload.get("family", "zero")
    name = payload.get("name", os.path.splitext(os.path.basename(path))[0])
    orders = {k: float(payload[k]) for k in ("alpha", "beta", "mu", "nu") if k in payload}
    coefficients = {
        k: float(payload[k]) for k in ("d_alpha", "c_beta", "d_mu", "c_nu") if k in payload
    }

    if family == "zero":
        domain = payload.get("domain", UNIT_SQUARE)
        if len(domain) != 4:
            app_logger.error(f"{path}: domain needs 4 values")
            raise ConfigurationError(f"{path}: domain needs 4 values")
        problem = zero_problem(
            domain=domain,
            t_end=float(payload.get("t_end", 1.0)),
            orders=orders,
            coefficients=coefficients,
            name=name,
        )
    elif family in _FAMILIES:
        if "domain" in payload:
            app_logger.error(f"{path}: the {family} family has a fixed domain")
            raise ConfigurationError(f"{path}: the {family} family has a fixed domain")
        separable, default_orders, default_t_end = _FAMILIES[family]
        problem = _separable_problem(
            name,
            family,
            separable,
            {**default_orders, **orders},
            {**_DEFAULT_COEFFICIENTS, **coefficients},
            float(payload.get("t_end", default_t_end)),
        )
    else:
        app_logger.error(f"{path}: unknown family {family!r}")
        raise ConfigurationError(f"{path}: unknown family {family!r}")

    app_logger.info(f"Loaded problem {problem.name} ({family}) from {path}")
    return problem


def resolve_problem(name_or_path: str) -> ProblemSpec:
    """
    A catalog name or a path to a problem file.
    """
    if name_or_path in CATALOG:
        return get_problem(name_or_path)
    if name_or_path.endswith(".json") or os.path.exists(name_or_path):
        return load_problem(name_or_path)
    return get_problem(name_or_path)


def with_end_time(problem: ProblemSpec, t_end: float) -> ProblemSpec:
    return replace(problem, t_end=t_end)
