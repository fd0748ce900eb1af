"""
Fractional centered-difference coefficients.

The weights omega_k of the fractional centered difference of order gamma are

    omega_k = (-1)^k Gamma(gamma+1) / (Gamma(gamma/2-k+1) Gamma(gamma/2+k+1))

and are symmetric in k. They are generated here with the multiplicative
recurrence

    omega_0     = Gamma(gamma+1) / Gamma(gamma/2+1)^2
    omega_{k+1} = omega_k * (k - gamma/2) / (k + 1 + gamma/2)

which never touches the gamma-function poles of the direct formula. The
fourth-order correction uses the three weights rho = (-gamma/24, 1+gamma/12,
-gamma/24).
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from ..utils.exceptions import ArgumentError, OrderDomainError
from ..utils.logger import app_logger


def validate_order(gamma: float, name: str = "gamma") -> float:
    """
    Check that a fractional order lies in (0, 1) or (1, 2] and return it as a float.

    :param gamma: The fractional order.
    :param name: Name used in the error message.
    :raises OrderDomainError: If the order is not admissible.
    :return: The order as a Python float.
    """
    try:
        value = float(gamma)
    except (TypeError, ValueError):
        app_logger.error(f"{name} is not a number: {gamma!r}")
        raise OrderDomainError(f"{name} is not a number: {gamma!r}")

    if not np.isfinite(value) or value <= 0.0 or value > 2.0:
        app_logger.error(f"{name}={value} outside (0,1) U (1,2]")
        raise OrderDomainError(f"{name}={value} outside (0,1) U (1,2]")
    if value == 1.0:
        app_logger.error(f"{name}=1 is excluded (pole of the Riesz scale)")
        raise OrderDomainError(f"{name}=1 is excluded (pole of the Riesz scale)")
    return value


def _validate_count(K: int, name: str = "K") -> int:
    if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 1:
        app_logger.error(f"{name} must be a positive integer, got {K!r}")
        raise ArgumentError(f"{name} must be a positive integer, got {K!r}")
    return int(K)


@dataclass(frozen=True)
class CoefficientSet:
    """
    Coefficients of one fractional order.

    ``omega`` holds the symmetric half omega_0..omega_K (omega_{-k} = omega_k)
    and ``rho`` the correction triple (rho_{-1}, rho_0, rho_1).
    """

    gamma: float
    omega: np.ndarray
    rho: Tuple[float, float, float]

    @property
    def K(self) -> int:
        return len(self.omega) - 1

    def at(self, k: int) -> float:
        """
        omega_k for any integer k with |k| <= K.
        """
        return float(self.omega[abs(k)])

    def total(self) -> float:
        """
        Truncated full sum omega_0 + 2 * sum_{k=1..K} omega_k.
        """
        return float(self.omega[0] + 2.0 * np.sum(self.omega[1:]))

    def partial_sum(self, n: int, m: int) -> float:
        """
        Sum of omega_k for k = -m+n .. n.
        """
        k = np.arange(n - m, n + 1)
        if np.max(np.abs(k)) > self.K:
            app_logger.error(f"partial sum ({n}, {m}) needs more than K={self.K} terms")
            raise ArgumentError(f"partial sum ({n}, {m}) needs more than K={self.K} terms")
        return float(np.sum(self.omega[np.abs(k)]))


def rho_coefficients(gamma: float) -> Tuple[float, float, float]:
    """
    Fourth-order correction weights (rho_{-1}, rho_0, rho_1) for order gamma.
    """
    gamma = validate_order(gamma)
    side = -gamma / 24.0
    return (side, 1.0 + gamma / 12.0, side)


def omega_coefficients(gamma: float, K: int) -> CoefficientSet:
    """
    Compute omega_0..omega_K by the stable recurrence.

    :param gamma: Fractional order in (0,1) U (1,2].
    :param K: Truncation count, at least 1.
    :raises OrderDomainError: If gamma is not admissible.
    :raises ArgumentError: If K is not a positive integer.
    :return: The coefficient set of this order.
    """
    gamma = validate_order(gamma)
    K = _validate_count(K)

    half = gamma / 2.0
    omega0 = np.exp(special.gammaln(gamma + 1.0) - 2.0 * special.gammaln(half + 1.0))
    k = np.arange(K, dtype=np.float64)
    ratios = (k - half) / (k + 1.0 + half)
    omega = np.empty(K + 1, dtype=np.float64)
    omega[0] = omega0
    omega[1:] = omega0 * np.cumprod(ratios)
    omega.setflags(write=False)

    return CoefficientSet(gamma=gamma, omega=omega, rho=rho_coefficients(gamma))


def omega_from_gamma_functions(gamma: float, k: int) -> float:
    """
    Direct evaluation of omega_k through reciprocal gamma functions.

    Poles of Gamma(gamma/2 - k + 1) give 1/Gamma = 0, so the value is exact
    zero where the recurrence produces zero (gamma = 2, k >= 2). Accuracy
    degrades for large k; the recurrence is the production path.
    """
    gamma = validate_order(gamma)
    k = abs(int(k))
    return float(
        (-1.0) ** k
        * special.gamma(gamma + 1.0)
        * special.rgamma(gamma / 2.0 - k + 1.0)
        * special.rgamma(gamma / 2.0 + k + 1.0)
    )


def omega_tail_bound(coeffs: CoefficientSet) -> float:
    """
    Bound 2*|omega_K|*K/gamma on the magnitude of the truncated total sum.
    """
    return 2.0 * abs(float(coeffs.omega[-1])) * coeffs.K / coeffs.gamma


def generating_function(gamma: float, z, K: int):
    """
    Truncated generating function omega_0 + 2 * sum_{k=1..K} omega_k cos(k z).

    It converges to |2 sin(z/2)|^gamma as K grows.

    :param gamma: Fractional order.
    :param z: Angle in radians, scalar or array.
    :param K: Number of terms.
    :return: The truncated sum, with the shape of ``z``.
    """
    coeffs = omega_coefficients(gamma, K)
    z_arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z_arr)):
        app_logger.error("z must be finite")
        raise ArgumentError("z must be finite")

    k = np.arange(1, K + 1, dtype=np.float64)
    flat = z_arr.reshape(-1)
    # Chunked so that K = 1e5 with many z values stays within memory.
    values = np.empty(flat.shape, dtype=np.float64)
    chunk = max(1, 2_000_000 // K)
    for start in range(0, flat.size, chunk):
        block = flat[start : start + chunk]
        values[start : start + chunk] = coeffs.omega[0] + 2.0 * (
            np.cos(np.outer(block, k)) @ coeffs.omega[1:]
        )
    result = values.reshape(z_arr.shape)
    return float(result) if result.ndim == 0 else result
