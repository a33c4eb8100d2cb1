"""
Shock tracking with a custom tangent rule.

The position of each shock is advanced with the characteristic speed read from
the piecewise-constant reconstruction at the tracked point. Its tangent is
computed separately, by differentiating a Rankine-Hugoniot speed probed at
x -/+ delta on one-sided linear reconstructions ("shock" mode), or by naively
differentiating the Rankine-Hugoniot speed on the piecewise-constant
reconstruction ("blackbox" mode). Both tangents are joined to the position
value through with_custom_tangent, so the primal trajectory never depends on
the mode.
"""

import logging
from dataclasses import dataclass, field as dc_field
from typing import List

import numpy as np

from shock_ad.core.dual import Dual, seed, with_custom_tangent
from shock_ad.core.errors import ConfigError, OutOfDomainError, TrackingLostError
from shock_ad.core.mesh import MINUS, PLUS, CellField, eval_constant, eval_linear

logger = logging.getLogger(__name__)

MODE_NONE = "none"
MODE_BLACKBOX = "blackbox"
MODE_SHOCK = "shock"
MODES = (MODE_NONE, MODE_BLACKBOX, MODE_SHOCK)


@dataclass(frozen=True)
class TrackerConfig:
    c_coeff: float
    alpha: float
    mode: str = MODE_SHOCK

    def __post_init__(self):
        if not self.c_coeff > 0:
            raise ConfigError(f"C must be positive, got {self.c_coeff}")
        if self.alpha < 1:
            raise ConfigError(f"alpha must be >= 1, got {self.alpha}")
        if self.mode not in MODES:
            raise ConfigError(f"Unknown tracker mode {self.mode!r}; expected one of {MODES}")

    def delta(self, dx: float) -> float:
        """Half width of the numerical shock layer, C * dx^alpha."""
        delta = self.c_coeff * dx ** self.alpha
        if not delta > dx:
            raise ConfigError(f"delta = C*dx^alpha = {delta:.3e} must exceed dx = {dx:.3e}")
        return delta


@dataclass(frozen=True, eq=False)
class ShockState:
    position: Dual
    index: int = 1

    @classmethod
    def initial(cls, x0: float, xi0: float = 0.0, index: int = 1) -> "ShockState":
        return cls(seed(x0, xi0), index)


def _check_interior(field: CellField, x: float, index: int):
    grid = field.grid
    margin = 2 * grid.dx
    if not (grid.x_left + margin <= x <= grid.x_right - margin):
        raise TrackingLostError(f"Shock {index} left the grid interior at x={x:.6g}")


def advance_position(s: ShockState, field: CellField, dt: float, model) -> float:
    """x^{n+1} = x^n + dt * lambda(U(x^n)) with lambda = f'(u) or u - a; value only."""
    x = float(s.position.value)
    _check_interior(field, x, s.index)
    speed = model.point_speed(eval_constant(field, x))
    x_new = x + dt * float(speed.value)
    _check_interior(field, x_new, s.index)
    return x_new


def rh_probe_speed(s: ShockState, field: CellField, delta: float, model) -> Dual:
    """
    Rankine-Hugoniot speed from one-sided linear probes at x + delta (forward
    slope) and x - delta (backward slope). The probe positions carry the shock
    tangent, so the result tangent contains v +/- slope * xi on each side.
    """
    x = s.position
    try:
        plus = eval_linear(field, x + delta, PLUS)
        minus = eval_linear(field, x - delta, MINUS)
    except OutOfDomainError as e:
        raise TrackingLostError(f"Probe of shock {s.index} at x={x.value:.6g} +/- {delta:.3g} left the grid: {e}") from e
    return model.probe_speed(minus, plus)


def naive_rh_speed(s: ShockState, field: CellField, model) -> Dual:
    """
    Rankine-Hugoniot speed on the piecewise-constant reconstruction, using the
    one-sided limits at whichever face of the tracked cell has the larger jump.
    """
    grid = field.grid
    i = grid.locate(float(s.position.value))
    faces = [f for f in (i, i + 1) if 1 <= f <= grid.n_cells - 1]
    values = np.asarray(field.values).reshape(-1, grid.n_cells)

    def jump(f):
        return float(np.sum(np.abs(values[:, f] - values[:, f - 1])))

    face = max(faces, key=jump)
    return model.probe_speed(field.data[..., face - 1], field.data[..., face])


def step_shock(s: ShockState, field: CellField, dt: float, cfg: TrackerConfig, model, delta: float = None) -> ShockState:
    x_new = advance_position(s, field, dt, model)
    if cfg.mode == MODE_SHOCK:
        delta = cfg.delta(field.grid.dx) if delta is None else delta
        speed = rh_probe_speed(s, field, delta, model)
        tangent = s.position.tangent + dt * speed.tangent
    elif cfg.mode == MODE_BLACKBOX:
        speed = naive_rh_speed(s, field, model)
        tangent = s.position.tangent + dt * speed.tangent
    else:
        tangent = 0.0
    return ShockState(with_custom_tangent(x_new, float(tangent)), s.index)


@dataclass
class ShockHistory:
    t: List[float] = dc_field(default_factory=list)
    position: List[float] = dc_field(default_factory=list)
    tangent: List[float] = dc_field(default_factory=list)

    def append(self, t: float, state: ShockState):
        self.t.append(t)
        self.position.append(float(state.position.value))
        self.tangent.append(float(state.position.tangent))

    def as_arrays(self):
        return np.asarray(self.t), np.asarray(self.position), np.asarray(self.tangent)


class ShockTracker:
    """Solver observer advancing one shock per accepted time step."""

    def __init__(self, initial: ShockState, cfg: TrackerConfig, model, dx: float):
        self.state = initial
        self.cfg = cfg
        self.model = model
        self.delta = cfg.delta(dx)
        self.history = ShockHistory()
        self.history.append(0.0, initial)
        logger.info(
            f"Tracking shock {initial.index} from x={float(initial.position.value):.6g} "
            f"(mode={cfg.mode}, delta={self.delta:.4g})"
        )

    def __call__(self, t: float, dt: float, field: CellField):
        self.state = step_shock(self.state, field, dt, self.cfg, self.model, self.delta)
        self.history.append(t + dt, self.state)

    @property
    def position(self) -> float:
        return float(self.state.position.value)

    @property
    def tangent(self) -> float:
        return float(self.state.position.tangent)
