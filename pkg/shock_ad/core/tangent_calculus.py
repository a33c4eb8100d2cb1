"""
Generalized tangent vectors and their use.

Analytic oracles for the shifted Burgers ramp and for the Euler moving shock,
the tangential shift u~ = u + eps*v + chi*du that turns (U, U_dot, x_s, xi) into
an approximation of the perturbed solution, and the L1 metrics used to score it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from shock_ad.config import settings
from shock_ad.core.dual import lift
from shock_ad.core.errors import ConfigError, OutOfDomainError, TrackingLostError
from shock_ad.core.flux_models import MovingShockSetup, riemann_cell_average
from shock_ad.core.mesh import MINUS, PLUS, CellField, Grid1D, cell_average, eval_linear
from shock_ad.core.shock_tracker import ShockState

logger = logging.getLogger(__name__)


# --- Burgers ramp ----------------------------------------------------------

@dataclass(frozen=True)
class BurgersRampOracle:
    """
    Entropy solution of Burgers' equation for the ramp u0 = (1+eps)(x - shift) on
    [shift, shift + 1], zero elsewhere:
    U(t, x) = (1+eps)(x - shift) / (1 + (1+eps)t) up to the shock at
    shift + sqrt(1 + (1+eps)t).
    """
    shift: float = settings.BURGERS_RAMP_SHIFT
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.epsilon > -1.0:
            raise ConfigError(f"Ramp perturbation must satisfy eps > -1, got {self.epsilon}")

    @property
    def amplitude(self) -> float:
        return 1.0 + self.epsilon

    def shock_position(self, t: float) -> float:
        return self.shift + math.sqrt(1.0 + self.amplitude * t)

    def shock_speed(self, t: float) -> float:
        return 0.5 * self.amplitude / math.sqrt(1.0 + self.amplitude * t)

    def left_state(self, t: float) -> float:
        """Value just left of the shock; the right state is zero."""
        return self.amplitude * math.sqrt(1.0 + self.amplitude * t) / (1.0 + self.amplitude * t)

    def solution(self, t: float, x):
        if t < 0:
            raise ConfigError(f"Oracle time must be non-negative, got {t}")
        xr = np.asarray(x, dtype=float) - self.shift
        inside = (xr >= 0.0) & (xr <= self.shock_position(t) - self.shift)
        u = np.where(inside, self.amplitude * xr / (1.0 + self.amplitude * t), 0.0)
        return float(u) if np.ndim(u) == 0 else u

    def cell_averages(self, grid: Grid1D, t: float) -> CellField:
        return cell_average(lambda x: self.solution(t, x), grid, breakpoints=(self.shift, self.shock_position(t)))


def oracle_solution(t: float, x, epsilon: float = 0.0, shift: float = settings.BURGERS_RAMP_SHIFT):
    return BurgersRampOracle(shift, epsilon).solution(t, x)


def ramp_xi(t: float) -> float:
    """Shock tangent of the ramp family, d/deps of the shock position at eps = 0."""
    return t / (2.0 * math.sqrt(1.0 + t))


def oracle_tangent(t: float, shift: float = settings.BURGERS_RAMP_SHIFT) -> Tuple[Callable, float]:
    """(v, xi) with v(x) = (x - shift)/(1+t)^2 left of the shock and xi = t / (2 sqrt(1+t))."""
    if t < 0:
        raise ConfigError(f"Oracle time must be non-negative, got {t}")
    end = math.sqrt(1.0 + t)

    def v(x):
        xr = np.asarray(x, dtype=float) - shift
        out = np.where((xr >= 0.0) & (xr <= end), xr / (1.0 + t) ** 2, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    return v, ramp_xi(t)


def _xi_rhs(t: float, xi: float) -> float:
    # v at the left of the shock is (1+t)^(-3/2), u_x there is 1/(1+t)
    return 0.5 * ((1.0 + t) ** -1.5 + xi / (1.0 + t))


def xi_ode_oracle(t_final: float, dt: float = 1e-4) -> float:
    """Integrates the linearized Rankine-Hugoniot ODE for the ramp with classical RK4."""
    if t_final < 0:
        raise ConfigError(f"t_final must be non-negative, got {t_final}")
    n = int(math.ceil(t_final / dt - 1e-12))
    if n == 0:
        return 0.0
    h = t_final / n
    t, xi = 0.0, 0.0
    for _ in range(n):
        k1 = _xi_rhs(t, xi)
        k2 = _xi_rhs(t + 0.5 * h, xi + 0.5 * h * k1)
        k3 = _xi_rhs(t + 0.5 * h, xi + 0.5 * h * k2)
        k4 = _xi_rhs(t + h, xi + h * k3)
        xi += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        t += h
    return xi


# --- Euler moving shock ----------------------------------------------------

class EulerShockOracle:
    """Exact single moving shock x_s = x0 + (S + eps)t, cell averaged on the grid."""

    def __init__(self, setup: MovingShockSetup):
        self.setup = setup

    def shock_position(self, t: float, epsilon: float = 0.0) -> float:
        return self.setup.x_shock0 + (self.setup.shock_speed + epsilon) * t

    def cell_averages(self, grid: Grid1D, t: float, epsilon: float = 0.0) -> CellField:
        left = self.setup.left_state()
        right = self.setup.right_state(self.setup.shock_speed + epsilon)
        field = riemann_cell_average(grid, self.shock_position(t, epsilon), left, right)
        return CellField(grid, lift(field.values))


# --- Tangent vectors -------------------------------------------------------

@dataclass
class TangentVector:
    v: CellField
    xi: List[float]
    delta_u: List[float]

    def __post_init__(self):
        if len(self.xi) != len(self.delta_u):
            raise ConfigError(f"{len(self.xi)} shock tangents but {len(self.delta_u)} jump sizes")


def tangent_field(field: CellField) -> CellField:
    """The tangent part of a Dual field as a plain field of reals."""
    return CellField(field.grid, lift(field.tangents))


def _check_same_grid(a: CellField, b: CellField):
    if a.grid != b.grid:
        raise ConfigError(f"Grid mismatch: {a.grid} vs {b.grid}")
    if np.shape(a.values) != np.shape(b.values):
        raise ConfigError(f"Field shape mismatch: {np.shape(a.values)} vs {np.shape(b.values)}")


def l1_norm(field: CellField) -> float:
    """dx * sum |U_i|, summed over all components of a system."""
    return float(field.grid.dx * np.sum(np.abs(field.values)))


def l1_error(a: CellField, b: CellField) -> float:
    _check_same_grid(a, b)
    return float(a.grid.dx * np.sum(np.abs(a.values - b.values)))


def tangent_norm(tv: TangentVector) -> float:
    """||(v, xi)|| = ||v||_L1 + sum_i |du_i| |xi_i|."""
    jumps = sum(float(np.sum(np.abs(du))) * abs(xi) for du, xi in zip(tv.delta_u, tv.xi))
    return l1_norm(tv.v) + jumps


def jump_estimate(field: CellField, shock: ShockState, delta: float):
    """du = U(x_s + delta) - U(x_s - delta) from the one-sided linear probes."""
    try:
        plus = eval_linear(field, shock.position + delta, PLUS)
        minus = eval_linear(field, shock.position - delta, MINUS)
    except OutOfDomainError as e:
        raise TrackingLostError(f"Jump probe of shock {shock.index} left the grid: {e}") from e
    jump = plus.value - minus.value
    floor = settings.DENOM_FLOOR_FACTOR * max(float(np.max(np.abs(plus.value))), float(np.max(np.abs(minus.value))), 1.0)
    if np.all(np.abs(jump) <= floor):
        logger.warning(f"Jump at shock {shock.index} is {np.max(np.abs(jump)):.3e}, below floor {floor:.3e}")
    return float(jump) if np.ndim(jump) == 0 else np.asarray(jump)


def overlap_fraction(grid: Grid1D, a: float, b: float) -> np.ndarray:
    """Fraction of each cell covered by [a, b]."""
    faces = grid.faces
    covered = np.minimum(faces[1:], b) - np.maximum(faces[:-1], a)
    return np.clip(covered, 0.0, None) / grid.dx


@dataclass
class ShiftComponents:
    u: np.ndarray
    v_eps: np.ndarray
    chi_du: np.ndarray

    @property
    def u_tilde(self) -> np.ndarray:
        return self.u + self.v_eps + self.chi_du


def shift_components(U: CellField, Udot: CellField, shocks: Sequence[ShockState], jumps: Sequence,
                     epsilon: float, delta: float) -> ShiftComponents:
    """
    Splits u~ into u, eps*v (zero within delta of any shock) and the cell-averaged
    indicator term. A shock displaced to the right is filled with the left state,
    i.e. -du on [x_s, x_s + eps*xi]; a shock displaced to the left gets +du on
    [x_s + eps*xi, x_s].
    """
    _check_same_grid(U, Udot)
    grid = U.grid
    centers = grid.centers
    keep = np.ones(grid.n_cells, dtype=bool)
    chi_du = np.zeros_like(np.asarray(U.values, dtype=float))

    for shock, du in zip(shocks, jumps):
        x_s = float(shock.position.value)
        moved = x_s + epsilon * float(shock.position.tangent)
        if not (grid.x_left <= moved <= grid.x_right):
            raise OutOfDomainError(f"Shock {shock.index} displaced to x={moved:.6g}, outside the grid")
        keep &= np.abs(centers - x_s) > delta
        if moved >= x_s:
            chi_du = chi_du - np.multiply.outer(np.asarray(du, dtype=float), overlap_fraction(grid, x_s, moved))
        else:
            chi_du = chi_du + np.multiply.outer(np.asarray(du, dtype=float), overlap_fraction(grid, moved, x_s))

    v_eps = epsilon * np.where(keep, Udot.values, 0.0)
    return ShiftComponents(np.asarray(U.values, dtype=float), v_eps, chi_du)


def tangential_shift(U: CellField, Udot: CellField, shock: ShockState, delta_u, epsilon: float, delta: float) -> CellField:
    return shift_all(U, Udot, [shock], [delta_u], epsilon, delta)


def shift_all(U: CellField, Udot: CellField, shocks: Sequence[ShockState], jumps: Sequence,
              epsilon: float, delta: float) -> CellField:
    parts = shift_components(U, Udot, shocks, jumps, epsilon, delta)
    return CellField(U.grid, lift(parts.u_tilde))


def linear_shift(U: CellField, Udot: CellField, epsilon: float) -> CellField:
    """u + eps*v everywhere: what a tangent without shock information gives."""
    _check_same_grid(U, Udot)
    return CellField(U.grid, lift(U.values + epsilon * Udot.values))
