"""
Closed-form Riesz derivatives of the manufactured profiles.

With the Riemann-Liouville power rule 0D_x^g x^p = Gamma(p+1) x^{p-g} / Gamma(p+1-g)
the left plus right derivatives of z^2 (1-z)^2 on [0, 1] sum to 2*phi(g, z) and
those of z (pi-z) on [0, pi] sum to psi(g, z). The Riesz derivative is
-kappa_g times that sum, kappa_g = 1 / (2 cos(pi g / 2)).
"""

import numpy as np
from scipy import special

from ..numerics.coefficients import validate_order
from ..utils.exceptions import DomainError, ScalePoleError
from ..utils.logger import app_logger


def kappa(gamma: float) -> float:
    """
    Riesz scale 1 / (2 cos(pi*gamma/2)).

    :raises ScalePoleError: At gamma = 1.
    """
    if float(gamma) == 1.0:
        app_logger.error("kappa has a pole at gamma = 1")
        raise ScalePoleError("kappa has a pole at gamma = 1")
    gamma = validate_order(gamma)
    return 1.0 / (2.0 * np.cos(np.pi * gamma / 2.0))


def _check_interval(z: np.ndarray, lo: float, hi: float, closed: bool, label: str) -> None:
    inside = (z >= lo) & (z <= hi) if closed else (z > lo) & (z < hi)
    if not np.all(inside):
        bracket = f"[{lo}, {hi}]" if closed else f"({lo}, {hi})"
        app_logger.error(f"{label} evaluated outside {bracket}")
        raise DomainError(f"{label} evaluated outside {bracket}")


def _result(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def phi(gamma: float, z):
    """
    phi(g, z) = (z^{2-g} + (1-z)^{2-g}) / Gamma(3-g)
              - 6 (z^{3-g} + (1-z)^{3-g}) / Gamma(4-g)
              + 12 (z^{4-g} + (1-z)^{4-g}) / Gamma(5-g),  z in [0, 1].
    """
    gamma = validate_order(gamma)
    z = np.asarray(z, dtype=np.float64)
    _check_interval(z, 0.0, 1.0, closed=True, label="phi")
    w = 1.0 - z
    values = (
        (z ** (2 - gamma) + w ** (2 - gamma)) * special.rgamma(3 - gamma)
        - 6.0 * (z ** (3 - gamma) + w ** (3 - gamma)) * special.rgamma(4 - gamma)
        + 12.0 * (z ** (4 - gamma) + w ** (4 - gamma)) * special.rgamma(5 - gamma)
    )
    return _result(values)


def psi(gamma: float, z):
    """
    psi(g, z) = pi (z^{1-g} + (pi-z)^{1-g}) / Gamma(2-g)
              - 2 (z^{2-g} + (pi-z)^{2-g}) / Gamma(3-g).

    Defined on [0, pi] for g < 1 and on (0, pi) for g > 1, where z^{1-g} is
    singular at the endpoints.
    """
    gamma = validate_order(gamma)
    z = np.asarray(z, dtype=np.float64)
    _check_interval(z, 0.0, np.pi, closed=gamma < 1.0, label="psi")
    w = np.pi - z
    with np.errstate(divide="ignore"):
        # At gamma = 2, 1/Gamma(0) = 0 cancels the z^{-1} terms.
        singular = (z ** (1 - gamma) + w ** (1 - gamma)) * special.rgamma(2 - gamma)
    values = np.pi * singular - 2.0 * (z ** (2 - gamma) + w ** (2 - gamma)) * special.rgamma(
        3 - gamma
    )
    return _result(values)


def riesz_derivative_poly1(gamma: float, x):
    """
    Riesz derivative of x^2 (1-x)^2 on [0, 1]: -phi(g, x) / cos(pi g / 2).
    """
    scale = kappa(gamma)
    return _result(np.asarray(-2.0 * scale * np.asarray(phi(gamma, x))))


def riesz_derivative_poly2(gamma: float, x):
    """
    Riesz derivative of x (pi-x) on [0, pi]: -psi(g, x) / (2 cos(pi g / 2)).
    """
    scale = kappa(gamma)
    return _result(np.asarray(-scale * np.asarray(psi(gamma, x))))
