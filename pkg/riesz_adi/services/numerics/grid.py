from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ... import config
from ..utils.exceptions import ConfigurationError
from ..utils.logger import app_logger


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform rectangular grid with m1 x m2 cells.

    Unknowns live on the interior nodes x_i = x_lo + i*dx (i = 1..m1-1) and
    y_j = y_lo + j*dy (j = 1..m2-1); the boundary carries homogeneous
    Dirichlet data and is never stored.
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    m1: int
    m2: int

    def __post_init__(self):
        for name in ("m1", "m2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 2:
                app_logger.error(f"{name} must be an integer >= 2, got {value!r}")
                raise ConfigurationError(f"{name} must be an integer >= 2, got {value!r}")
        if not (self.x_hi > self.x_lo and self.y_hi > self.y_lo):
            app_logger.error(f"degenerate domain {self.domain}")
            raise ConfigurationError(f"degenerate domain {self.domain}")

    @classmethod
    def from_step(cls, domain: Tuple[float, float, float, float], h: float) -> "GridSpec":
        """
        Build a grid with dx = dy = h on the given rectangle.

        :raises ConfigurationError: If h does not divide both side lengths.
        """
        x_lo, x_hi, y_lo, y_hi = domain
        if not h > 0:
            app_logger.error(f"grid step must be positive, got {h}")
            raise ConfigurationError(f"grid step must be positive, got {h}")
        m1 = _cell_count(x_hi - x_lo, h, "x")
        m2 = _cell_count(y_hi - y_lo, h, "y")
        return cls(x_lo, x_hi, y_lo, y_hi, m1, m2)

    @property
    def domain(self) -> Tuple[float, float, float, float]:
        return (self.x_lo, self.x_hi, self.y_lo, self.y_hi)

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.m1

    @property
    def dy(self) -> float:
        return (self.y_hi - self.y_lo) / self.m2

    @property
    def nx(self) -> int:
        return self.m1 - 1

    @property
    def ny(self) -> int:
        return self.m2 - 1

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    def interior_x(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(1, self.m1)

    def interior_y(self) -> np.ndarray:
        return self.y_lo + self.dy * np.arange(1, self.m2)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Interior node coordinates as (X, Y) arrays of shape (nx, ny), X[i, j] = x_i.
        """
        return np.meshgrid(self.interior_x(), self.interior_y(), indexing="ij")


def _cell_count(length: float, h: float, axis: str) -> int:
    ratio = length / h
    count = int(round(ratio))
    if count < 2 or abs(ratio - count) > config.STEP_COUNT_RTOL * max(1.0, ratio):
        app_logger.error(f"step {h} does not divide the {axis}-length {length} into >= 2 cells")
        raise ConfigurationError(
            f"step {h} does not divide the {axis}-length {length} into >= 2 cells"
        )
    return count
