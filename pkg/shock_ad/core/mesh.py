import logging
import math
from dataclasses import dataclass

import numpy as np

from shock_ad.config import settings
from shock_ad.core.dual import Dual, lift
from shock_ad.core.errors import BoundaryCellError, ConfigError, OutOfDomainError

logger = logging.getLogger(__name__)

PLUS = "plus"
MINUS = "minus"


@dataclass(frozen=True)
class Grid1D:
    """Equidistant cells; cell i spans [x_left + i*dx, x_left + (i+1)*dx]."""
    x_left: float
    dx: float
    n_cells: int

    def __post_init__(self):
        if not self.dx > 0:
            raise ConfigError(f"Cell width must be positive, got {self.dx}")
        if self.n_cells < 3:
            raise ConfigError(f"At least 3 cells are required, got {self.n_cells}")

    @classmethod
    def covering(cls, x_left: float, length: float, dx: float) -> "Grid1D":
        """Smallest grid of width dx starting at x_left that reaches x_left + length."""
        n_cells = int(math.ceil(length / dx - 1e-9))
        return cls(x_left=x_left, dx=dx, n_cells=n_cells)

    @property
    def x_right(self) -> float:
        return self.x_left + self.n_cells * self.dx

    @property
    def centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    def center(self, i: int) -> float:
        return self.x_left + (i + 0.5) * self.dx

    def locate(self, x: float) -> int:
        """Index of the cell containing x; a point on a face belongs to the right cell."""
        if not (self.x_left <= x <= self.x_right):
            raise OutOfDomainError(f"x={x} outside grid [{self.x_left}, {self.x_right}]")
        i = int(math.floor((x - self.x_left) / self.dx))
        return min(i, self.n_cells - 1)


@dataclass(frozen=True, eq=False)
class CellField:
    """
    Cell averages on a grid. data is a Dual whose last axis runs over cells:
    shape (n_cells,) for a scalar law, (3, n_cells) for Euler primitives (rho, u, p).
    """
    grid: Grid1D
    data: Dual

    def __post_init__(self):
        if np.shape(self.data.value)[-1] != self.grid.n_cells:
            raise ConfigError(
                f"Field length {np.shape(self.data.value)[-1]} does not match grid of {self.grid.n_cells} cells"
            )

    @property
    def values(self) -> np.ndarray:
        return self.data.value

    @property
    def tangents(self) -> np.ndarray:
        return self.data.tangent

    @property
    def n_vars(self) -> int:
        return 1 if np.ndim(self.data.value) == 1 else np.shape(self.data.value)[0]

    def component(self, k: int) -> "CellField":
        if self.n_vars == 1:
            return self
        return CellField(self.grid, self.data[k])

    def with_data(self, data: Dual) -> "CellField":
        return CellField(self.grid, data)


def cell_average(fn, grid: Grid1D, breakpoints=()) -> CellField:
    """
    Cell means of a vectorized fn by 5-point Gauss-Legendre quadrature. Cells are
    split at the given breakpoints, so piecewise polynomials of degree <= 9 with
    kinks or jumps only at breakpoints are integrated exactly.
    """
    inner = [b for b in breakpoints if grid.x_left < b < grid.x_right]
    edges = np.union1d(grid.faces, inner)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes, weights = np.polynomial.legendre.leggauss(settings.GAUSS_POINTS)
    x = half[:, None] * nodes + (0.5 * (a + b))[:, None]
    samples = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)
    integrals = half * (samples @ weights)
    owner = np.minimum(((0.5 * (a + b) - grid.x_left) / grid.dx).astype(int), grid.n_cells - 1)
    sums = np.bincount(owner, weights=integrals, minlength=grid.n_cells)
    return CellField(grid, lift(sums / grid.dx))


def eval_constant(field: CellField, x) -> Dual:
    """Piecewise-constant reconstruction; has no dependence on the position."""
    position = x.value if isinstance(x, Dual) else x
    return field.data[..., field.grid.locate(position)]


def one_sided_slopes(field: CellField, i: int):
    n = field.grid.n_cells
    if not (1 <= i <= n - 2):
        raise BoundaryCellError(f"One-sided slopes need an interior cell, got {i} of {n}")
    u = field.data
    s_plus = (u[..., i + 1] - u[..., i]) / field.grid.dx
    s_minus = (u[..., i] - u[..., i - 1]) / field.grid.dx
    return s_plus, s_minus


def eval_linear(field: CellField, x: Dual, side: str) -> Dual:
    """
    One-sided piecewise-linear reconstruction U_i + (x - X_i) * s_i. Since x is a
    Dual, the result tangent holds both the field tangent and slope * x-tangent.
    """
    if side not in (PLUS, MINUS):
        raise ValueError(f"side must be '{PLUS}' or '{MINUS}', got {side!r}")
    i = field.grid.locate(x.value)
    s_plus, s_minus = one_sided_slopes(field, i)
    slope = s_plus if side == PLUS else s_minus
    return field.data[..., i] + (x - field.grid.center(i)) * slope
