"""
Flux models: Burgers' equation and the 1D Euler equations with a single moving
shock. Everything is written over Dual so tangents flow through the physics.

Euler quantities are nondimensional with the rest state (rho, u, p, T) = (1, 0, 1/gamma, 1),
so the speed of sound is a = sqrt(T) with T = gamma p / rho.
"""

import logging
from dataclasses import dataclass

import numpy as np

from shock_ad.config import settings
from shock_ad.core import dual as ad
from shock_ad.core.dual import Dual, lift
from shock_ad.core.errors import DomainError, NoShockError, ProbeDegenerateError, StateError
from shock_ad.core.mesh import CellField, Grid1D

logger = logging.getLogger(__name__)


def _active(x) -> Dual:
    return x if isinstance(x, Dual) else lift(x)


# --- Burgers ---------------------------------------------------------------

def burgers_flux(u: Dual) -> Dual:
    return 0.5 * (u * u)


def burgers_char_speed(u: Dual) -> Dual:
    return u


class BurgersModel:
    """f(u) = u^2 / 2, f'(u) = u."""
    name = "burgers"
    n_vars = 1

    def flux(self, u: Dual) -> Dual:
        return burgers_flux(u)

    def char_speed(self, u: Dual) -> Dual:
        return burgers_char_speed(u)

    def max_wave_speed(self, field: CellField) -> float:
        return float(np.max(np.abs(field.values)))

    def point_speed(self, state: Dual) -> Dual:
        return self.char_speed(state)

    def probe_speed(self, minus: Dual, plus: Dual, floor_factor: float = None) -> Dual:
        """Rankine-Hugoniot quotient [f(v+) - f(v-)] / [v+ - v-]."""
        floor_factor = settings.DENOM_FLOOR_FACTOR if floor_factor is None else floor_factor
        jump = plus - minus
        floor = floor_factor * max(abs(plus.value), abs(minus.value), 1.0)
        if abs(jump.value) <= floor:
            raise ProbeDegenerateError(
                f"Probe jump {jump.value:.3e} below floor {floor:.3e}; delta too small or no shock"
            )
        return (self.flux(plus) - self.flux(minus)) / jump


# --- Euler -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EulerState:
    rho: Dual
    u: Dual
    p: Dual
    gamma: float = settings.GAMMA

    @property
    def T(self) -> Dual:
        return self.gamma * self.p / self.rho

    @property
    def a(self) -> Dual:
        return ad.sqrt(self.T)

    @property
    def e(self) -> Dual:
        return self.p / (self.rho * (self.gamma - 1.0))

    @property
    def E(self) -> Dual:
        return self.e + 0.5 * (self.u * self.u)

    def validate(self) -> "EulerState":
        bad = np.flatnonzero(np.atleast_1d((np.asarray(self.rho.value) <= 0) | (np.asarray(self.p.value) <= 0)))
        if bad.size:
            raise StateError(f"Non-physical Euler state (rho or p <= 0) at cell {bad[0]}", cell=int(bad[0]))
        return self

    def conservatives(self):
        return self.rho, self.rho * self.u, self.rho * self.E

    @classmethod
    def from_conservatives(cls, rho: Dual, m: Dual, energy: Dual, gamma: float = settings.GAMMA) -> "EulerState":
        if np.any(np.asarray(rho.value) <= 0):
            bad = int(np.flatnonzero(np.atleast_1d(np.asarray(rho.value) <= 0))[0])
            raise StateError(f"Non-positive density at cell {bad}", cell=bad)
        u = m / rho
        p = (gamma - 1.0) * (energy - 0.5 * (m * u))
        return cls(rho, u, p, gamma).validate()

    @classmethod
    def from_field(cls, field: CellField, gamma: float = settings.GAMMA) -> "EulerState":
        return cls(field.data[0], field.data[1], field.data[2], gamma)

    def as_dual(self) -> Dual:
        return ad.stack([self.rho, self.u, self.p])


def euler_flux(q: EulerState):
    q.validate()
    mass = q.rho * q.u
    momentum = mass * q.u + q.p
    energy = q.u * (q.rho * q.E + q.p)
    return mass, momentum, energy


def euler_char_speed_sa(q: EulerState) -> Dual:
    """Slow acoustic characteristic speed u - a."""
    return q.u - q.a


def euler_left_state(mach, gamma: float = settings.GAMMA) -> EulerState:
    mach = _active(mach)
    if mach.value < 0:
        raise DomainError(f"Mach number must be non-negative, got {mach.value}")
    T = 1.0 / (1.0 + 0.5 * (gamma - 1.0) * (mach * mach))
    u = mach * ad.sqrt(T)
    p = ad.power(T, gamma / (gamma - 1.0)) / gamma
    rho = ad.power(T, 1.0 / (gamma - 1.0))
    return EulerState(rho, u, p, gamma)


def relative_mach(left: EulerState, shock_speed) -> Dual:
    return (left.u - _active(shock_speed)) / left.a


def moving_shock_right_state(left: EulerState, shock_speed) -> EulerState:
    """
    Post-shock state for a single compressive shock moving at shock_speed into
    the left state. The normal-shock ratios hold in the shock frame, so the
    velocity ratio applies to u - S.
    """
    gamma = left.gamma
    S = _active(shock_speed)
    m_rel = relative_mach(left, S)
    if m_rel.value <= 1.0:
        raise NoShockError(f"Relative shock Mach {m_rel.value:.6f} <= 1: no compressive shock")
    m2 = m_rel * m_rel
    pressure_ratio = 1.0 + 2.0 * gamma / (gamma + 1.0) * (m2 - 1.0)
    density_ratio = (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0)
    p_r = left.p * pressure_ratio
    rho_r = left.rho * density_ratio
    u_r = S + (left.u - S) / density_ratio
    return EulerState(rho_r, u_r, p_r, gamma)


def shock_speed_from_states(u_l, a_l, p_l, p_r, gamma: float = settings.GAMMA) -> Dual:
    u_l, a_l, p_l, p_r = (_active(x) for x in (u_l, a_l, p_l, p_r))
    if p_l.value <= 0 or p_r.value <= 0:
        raise DomainError(f"Pressures must be positive, got p_l={p_l.value}, p_r={p_r.value}")
    root = ad.sqrt((gamma + 1.0) / (2.0 * gamma) * (p_r / p_l) + (gamma - 1.0) / (2.0 * gamma))
    return u_l - a_l * root


@dataclass(frozen=True)
class MovingShockSetup:
    mach: float
    shock_speed: float
    x_shock0: float
    gamma: float = settings.GAMMA

    def left_state(self) -> EulerState:
        return euler_left_state(self.mach, self.gamma)

    def right_state(self, shock_speed=None) -> EulerState:
        S = self.shock_speed if shock_speed is None else shock_speed
        return moving_shock_right_state(self.left_state(), S)

    def relative_mach(self) -> float:
        return relative_mach(self.left_state(), self.shock_speed).value


def riemann_cell_average(grid: Grid1D, x0: float, left: EulerState, right: EulerState) -> CellField:
    """Cell averages of the step left|right at x0, averaged in conservative variables."""
    faces = grid.faces
    frac = np.clip((x0 - faces[:-1]) / grid.dx, 0.0, 1.0)
    averaged = [cl * frac + cr * (1.0 - frac) for cl, cr in zip(left.conservatives(), right.conservatives())]
    q = EulerState.from_conservatives(*averaged, gamma=left.gamma)
    return CellField(grid, q.as_dual())


class EulerModel:
    name = "euler"
    n_vars = 3

    def __init__(self, gamma: float = settings.GAMMA):
        self.gamma = gamma

    def state(self, data: Dual) -> EulerState:
        return EulerState(data[0], data[1], data[2], self.gamma)

    def max_wave_speed(self, field: CellField) -> float:
        q = self.state(field.data)
        speed = np.abs(q.u.value) + np.sqrt(self.gamma * q.p.value / q.rho.value)
        return float(np.max(speed))

    def point_speed(self, state: Dual) -> Dual:
        return euler_char_speed_sa(self.state(state))

    def probe_speed(self, minus: Dual, plus: Dual, floor_factor: float = None) -> Dual:
        """Shock speed from the pre-shock (minus) state and the post-shock pressure."""
        left = self.state(minus)
        right = self.state(plus)
        return shock_speed_from_states(left.u, left.a, left.p, right.p, self.gamma)
