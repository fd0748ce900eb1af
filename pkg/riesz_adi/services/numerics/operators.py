"""
Discrete Riesz-derivative operators.

For an order gamma, mesh width h and n interior unknowns the operator matrix
is M = h^{-gamma} * A * B with

    A = tridiag(-gamma/24, 1 + gamma/12, -gamma/24)
    B[i, j] = omega_{|i-j|}

taken as the product of the bi-infinite Toeplitz operators restricted to the
interior nodes. It is the symmetric Toeplitz matrix with first column

    c_k = rho_0 omega_k + rho_1 (omega_{|k-1|} + omega_{k+1})

and differs from the product of the truncated n x n factors only in its first
and last rows, where the correction also reaches the boundary nodes x_0 and
x_{n+1}. The truncated product is not symmetric for gamma < 2. The discrete
Riesz derivative of the interior values u is -M u; M is symmetric positive
definite, so +M is what appears on the implicit side of every scheme.
"""

from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
from scipy import linalg

from ... import config
from ..outputs.writers import write_matrix_csv
from ..utils.exceptions import (
    ArgumentError,
    ComplexSpectrumError,
    DegenerateMatrixError,
    ShapeError,
)
from ..utils.logger import app_logger
from .coefficients import omega_coefficients, rho_coefficients, validate_order


@dataclass(frozen=True)
class RieszMatrix:
    """
    Dense operator matrix of one direction and order.

    ``column`` is the first column of the symmetric Toeplitz ``matrix``.
    """

    gamma: float
    n: int
    h: float
    matrix: np.ndarray = field(repr=False)
    column: np.ndarray = field(repr=False)
    order: int = 4

    def __matmul__(self, other):
        return self.matrix @ other


MatrixLike = Union[RieszMatrix, np.ndarray]


def _validate_size(n: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        app_logger.error(f"matrix size must be a positive integer, got {n!r}")
        raise ArgumentError(f"matrix size must be a positive integer, got {n!r}")
    return int(n)


def _validate_step(h: float) -> float:
    if not (np.isfinite(h) and h > 0):
        app_logger.error(f"mesh width must be positive, got {h!r}")
        raise ArgumentError(f"mesh width must be positive, got {h!r}")
    return float(h)


def _as_array(M: MatrixLike) -> np.ndarray:
    return M.matrix if isinstance(M, RieszMatrix) else np.asarray(M, dtype=np.float64)


def assemble_A(gamma: float, n: int) -> np.ndarray:
    """
    Tridiagonal correction factor tridiag(rho_{-1}, rho_0, rho_1) of size n.
    """
    n = _validate_size(n)
    side, centre, _ = rho_coefficients(gamma)
    column = np.zeros(n)
    column[0] = centre
    if n > 1:
        column[1] = side
    return linalg.toeplitz(column)


def assemble_B(gamma: float, n: int, h: float) -> np.ndarray:
    """
    Symmetric Toeplitz matrix with entries h^{-gamma} * omega_{|i-j|}.
    """
    n = _validate_size(n)
    h = _validate_step(h)
    return linalg.toeplitz(_scaled_omega(gamma, n, h)[:n])


def _scaled_omega(gamma: float, n: int, h: float) -> np.ndarray:
    # omega_0..omega_n; the last one only enters the corrected first column.
    coeffs = omega_coefficients(gamma, n)
    return h ** (-coeffs.gamma) * np.asarray(coeffs.omega)


def _riesz_column(gamma: float, n: int, h: float, order: int = 4) -> np.ndarray:
    """
    First column of M: rho_0 omega_k + rho_1 (omega_{|k-1|} + omega_{k+1}),
    scaled by h^{-gamma}, or h^{-gamma} omega_k for order 2.
    """
    omega = _scaled_omega(gamma, n, h)
    if order == 2:
        return omega[:n].copy()
    side, centre, _ = rho_coefficients(gamma)
    k = np.arange(n)
    return centre * omega[k] + side * (omega[np.abs(k - 1)] + omega[k + 1])


def assemble_riesz_matrix(gamma: float, n: int, h: float, order: int = 4) -> RieszMatrix:
    """
    Assemble M = h^{-gamma} * A * B for one direction.

    :param gamma: Fractional order.
    :param n: Number of interior unknowns.
    :param h: Mesh width.
    :param order: 4 for the corrected operator, 2 for the plain fractional
        centered difference h^{-gamma} * B.
    :return: The assembled operator; the discrete derivative of u is -M u.
    """
    gamma = validate_order(gamma)
    n = _validate_size(n)
    h = _validate_step(h)
    if order not in (2, 4):
        app_logger.error(f"spatial order must be 2 or 4, got {order!r}")
        raise ArgumentError(f"spatial order must be 2 or 4, got {order!r}")

    column = _riesz_column(gamma, n, h, order)
    matrix = linalg.toeplitz(column)
    matrix.setflags(write=False)
    column.setflags(write=False)
    app_logger.debug(f"Assembled {n}x{n} operator, gamma={gamma}, h={h!r}, order {order}")
    return RieszMatrix(gamma=gamma, n=n, h=h, matrix=matrix, column=column, order=order)


def apply_along_x(M: MatrixLike, field_values: np.ndarray) -> np.ndarray:
    """
    Apply M to every fixed-y column of an (nx, ny) field.
    """
    matrix = _as_array(M)
    values = np.asarray(field_values, dtype=np.float64)
    if values.ndim != 2 or matrix.shape[1] != values.shape[0]:
        app_logger.error(f"cannot apply {matrix.shape} matrix along x of field {values.shape}")
        raise ShapeError(f"cannot apply {matrix.shape} matrix along x of field {values.shape}")
    return matrix @ values


def apply_along_y(M: MatrixLike, field_values: np.ndarray) -> np.ndarray:
    """
    Apply M to every fixed-x row of an (nx, ny) field.
    """
    matrix = _as_array(M)
    values = np.asarray(field_values, dtype=np.float64)
    if values.ndim != 2 or matrix.shape[1] != values.shape[1]:
        app_logger.error(f"cannot apply {matrix.shape} matrix along y of field {values.shape}")
        raise ShapeError(f"cannot apply {matrix.shape} matrix along y of field {values.shape}")
    return values @ matrix.T


def tridiag_toeplitz_eigenpairs(
    a: float, b: float, c: float, n: int
) -> List[Tuple[float, np.ndarray]]:
    """
    Analytic eigenpairs of the n x n tridiagonal Toeplitz matrix with
    subdiagonal a, diagonal b and superdiagonal c.

    lambda_j = b + 2a*sqrt(c/a)*cos(j*pi/(n+1)), j = 1..n, with eigenvector
    components (a/c)^{k/2} sin(k*j*pi/(n+1)), k = 1..n, scaled to unit length.

    :raises DegenerateMatrixError: If a = 0.
    :raises ComplexSpectrumError: If c/a < 0.
    """
    n = _validate_size(n)
    if a == 0:
        app_logger.error("tridiagonal Toeplitz eigenpairs need a nonzero subdiagonal")
        raise DegenerateMatrixError("tridiagonal Toeplitz eigenpairs need a nonzero subdiagonal")
    ratio = c / a
    if ratio < 0:
        app_logger.error(f"c/a = {ratio} < 0 gives a complex spectrum")
        raise ComplexSpectrumError(f"c/a = {ratio} < 0 gives a complex spectrum")

    j = np.arange(1, n + 1)
    theta = j * np.pi / (n + 1)
    eigenvalues = b + 2.0 * a * np.sqrt(ratio) * np.cos(theta)

    if n > 1 and ratio == 0:
        # c = 0 leaves a defective (Jordan) matrix with the single eigenvector e_n.
        app_logger.error("c = 0 gives a defective matrix without n eigenvectors")
        raise DegenerateMatrixError("c = 0 gives a defective matrix without n eigenvectors")

    k = np.arange(1, n + 1)
    pairs = []
    for lam, angle in zip(eigenvalues, theta):
        vector = np.sin(k * angle)
        if n > 1:
            vector = vector * (1.0 / ratio) ** (k / 2.0)
        vector = vector / np.linalg.norm(vector)
        pairs.append((float(lam), vector))
    return pairs


def certify_spd(M: MatrixLike, method: str = "eigen") -> Tuple[bool, float]:
    """
    Check whether a matrix is symmetric positive definite.

    :param M: Square matrix.
    :param method: "eigen" reports the minimum eigenvalue from a dense
        symmetric eigensolver; "cholesky" only attempts a Cholesky factorization
        and reports nan as the eigenvalue when it succeeds.
    :raises ShapeError: If the matrix is not square.
    :return: (is_spd, min_eigenvalue).
    """
    matrix = _as_array(M)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        app_logger.error(f"certify_spd needs a square matrix, got {matrix.shape}")
        raise ShapeError(f"certify_spd needs a square matrix, got {matrix.shape}")

    scale = max(np.max(np.abs(matrix)), np.finfo(float).tiny)
    if np.max(np.abs(matrix - matrix.T)) > config.SYMMETRY_RTOL * scale:
        min_real = float(np.min(np.linalg.eigvals(matrix).real))
        app_logger.debug(f"matrix not symmetric, min real eigenvalue {min_real}")
        return False, min_real

    if method == "cholesky":
        try:
            linalg.cho_factor(matrix, lower=True, check_finite=True)
        except linalg.LinAlgError:
            return False, float(np.min(linalg.eigvalsh(matrix)))
        return True, float("nan")
    if method != "eigen":
        app_logger.error(f"unknown certification method {method!r}")
        raise ArgumentError(f"unknown certification method {method!r}")

    min_eigenvalue = float(np.min(linalg.eigvalsh(matrix)))
    return min_eigenvalue > 0.0, min_eigenvalue


def dump_matrix(M: MatrixLike, path: str) -> str:
    """
    Write a matrix row-major to CSV with round-trip float formatting.
    """
    matrix = _as_array(M)
    write_matrix_csv(matrix, path)
    app_logger.info(f"Matrix {matrix.shape} written to {path}")
    return path
