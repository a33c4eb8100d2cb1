"""
Explicit first-order finite-volume time stepping.

Scalar laws step with Lax-Friedrichs or with Rusanov (local Lax-Friedrichs);
Euler always steps with Rusanov. All schemes are written in conservative flux
form over Dual fields, so one run advances the cell averages U and their
tangents together.
"""

import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable, List, Sequence

import numpy as np

from shock_ad.config import settings
from shock_ad.core import dual as ad
from shock_ad.core.dual import Dual
from shock_ad.core.errors import CFLViolationError, ConfigError
from shock_ad.core.flux_models import EulerState, euler_flux
from shock_ad.core.mesh import CellField

logger = logging.getLogger(__name__)

FIXED = "fixed"
CFL = "cfl"

LXF = "lxf"
RUSANOV = "rusanov"
SCHEMES = (LXF, RUSANOV)

# relative slack when comparing against the CFL bound and record times
_TOL = 1e-9


@dataclass(frozen=True)
class SchemeConfig:
    t_final: float
    dt_mode: str = CFL
    dt: float = None
    cfl_number: float = 0.5
    record_times: tuple = ()
    dt_max: float = settings.DT_MAX
    scheme: str = LXF

    def __post_init__(self):
        if not self.t_final > 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.dt_mode == FIXED:
            if self.dt is None or not self.dt > 0:
                raise ConfigError(f"Fixed time stepping needs dt > 0, got {self.dt}")
        elif self.dt_mode == CFL:
            if not 0 < self.cfl_number <= 1:
                raise ConfigError(f"CFL number must lie in (0, 1], got {self.cfl_number}")
        else:
            raise ConfigError(f"Unknown dt_mode {self.dt_mode!r}")


@dataclass
class Snapshot:
    t: float
    field: CellField


@dataclass
class RunResult:
    snapshots: List[Snapshot] = dc_field(default_factory=list)
    n_steps: int = 0

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def at(self, t: float) -> Snapshot:
        return min(self.snapshots, key=lambda s: abs(s.t - t))


def _interfaces(d: Dual, n: int):
    """Left and right cell states at the n + 1 faces of a padded array."""
    g = settings.GHOST_CELLS
    return d[..., g - 1:g + n], d[..., g:g + n + 1]


def _check_cfl(speed: float, dt: float, dx: float):
    if speed * dt > dx * (1.0 + _TOL):
        raise CFLViolationError(f"CFL violated: max speed {speed:.6g} * dt {dt:.6g} > dx {dx:.6g}")


def lxf_interface_flux(field: CellField, dt: float, model) -> Dual:
    """F_{i+1/2} = (f(U_i) + f(U_{i+1}))/2 - dx/(2 dt) (U_{i+1} - U_i) at all n + 1 faces."""
    dx = field.grid.dx
    padded = ad.pad_edge(field.data, settings.GHOST_CELLS)
    f = model.flux(padded)
    u_l, u_r = _interfaces(padded, field.grid.n_cells)
    f_l, f_r = _interfaces(f, field.grid.n_cells)
    return 0.5 * (f_l + f_r) - (dx / (2.0 * dt)) * (u_r - u_l)


def lxf_step(field: CellField, dt: float, model) -> CellField:
    """
    U_i^{n+1} = (U_{i+1} + U_{i-1})/2 - dt/(2 dx) (f(U_{i+1}) - f(U_{i-1})), evaluated
    in flux form. The tangent update is the same formula evaluated on Duals.
    """
    dx = field.grid.dx
    _check_cfl(model.max_wave_speed(field), dt, dx)
    flux = lxf_interface_flux(field, dt, model)
    return field.with_data(field.data - (dt / dx) * (flux[1:] - flux[:-1]))


def local_lxf_interface_flux(field: CellField, model) -> Dual:
    """F_{i+1/2} = (f(U_i) + f(U_{i+1}))/2 - max(|f'(U_i)|, |f'(U_{i+1})|) (U_{i+1} - U_i)/2."""
    padded = ad.pad_edge(field.data, settings.GHOST_CELLS)
    n = field.grid.n_cells
    u_l, u_r = _interfaces(padded, n)
    f_l, f_r = _interfaces(model.flux(padded), n)
    s_l, s_r = _interfaces(ad.absolute(model.char_speed(padded)), n)
    lam = ad.maximum(s_l, s_r)
    return 0.5 * (f_l + f_r) - 0.5 * (lam * (u_r - u_l))


def rusanov_step(field: CellField, dt: float, model) -> CellField:
    """
    Scalar Rusanov step. The dissipation follows the local wave speed, so a
    compressive shock stays a few cells wide instead of the dx^2/(2 dt) spread
    of lxf_step.
    """
    dx = field.grid.dx
    _check_cfl(model.max_wave_speed(field), dt, dx)
    flux = local_lxf_interface_flux(field, model)
    return field.with_data(field.data - (dt / dx) * (flux[1:] - flux[:-1]))


def rusanov_interface_flux(field: CellField, gamma: float = settings.GAMMA) -> Dual:
    """
    Local Lax-Friedrichs flux in conservative variables, shape (3, n + 1):
    (H_L + H_R)/2 - lambda_max (Q_R - Q_L)/2 with lambda_max = max(|u| + a) of both sides.
    """
    padded = ad.pad_edge(field.data, settings.GHOST_CELLS)
    q = EulerState(padded[0], padded[1], padded[2], gamma)
    cons = ad.stack(q.conservatives())
    flux = ad.stack(euler_flux(q))
    speed = ad.absolute(q.u) + q.a
    n = field.grid.n_cells
    q_l, q_r = _interfaces(cons, n)
    h_l, h_r = _interfaces(flux, n)
    s_l, s_r = _interfaces(speed, n)
    lam = ad.maximum(s_l, s_r)
    return 0.5 * (h_l + h_r) - 0.5 * (lam * (q_r - q_l))


def rusanov_step_euler(field: CellField, dt: float, gamma: float = settings.GAMMA) -> CellField:
    dx = field.grid.dx
    q = EulerState.from_field(field, gamma).validate()
    speed = np.abs(q.u.value) + np.sqrt(gamma * q.p.value / q.rho.value)
    _check_cfl(float(np.max(speed)), dt, dx)
    flux = rusanov_interface_flux(field, gamma)
    cons = ad.stack(q.conservatives())
    updated = cons - (dt / dx) * (flux[:, 1:] - flux[:, :-1])
    new_state = EulerState.from_conservatives(updated[0], updated[1], updated[2], gamma)
    return field.with_data(new_state.as_dual())


def step(field: CellField, dt: float, model, scheme: str = LXF) -> CellField:
    if model.name == "euler":
        return rusanov_step_euler(field, dt, model.gamma)
    if scheme == RUSANOV:
        return rusanov_step(field, dt, model)
    return lxf_step(field, dt, model)


def cfl_dt(field: CellField, dx: float, cfl: float, model, dt_max: float = settings.DT_MAX) -> float:
    """dt = cfl * dx / C_n with C_n the largest characteristic speed, capped at dt_max."""
    c_n = model.max_wave_speed(field)
    if c_n <= 0:
        return dt_max
    return min(cfl * dx / c_n, dt_max)


def run(ic: CellField, config: SchemeConfig, model, observers: Sequence[Callable] = ()) -> RunResult:
    """
    Advances ic to config.t_final. Each record time (and t_final) is hit exactly by
    clipping the step that would pass it. Observers are called once per accepted
    step with (t_n, dt, field_n), i.e. with the pre-step field.
    """
    record = sorted({float(t) for t in config.record_times if 0.0 < t < config.t_final} | {config.t_final})
    result = RunResult()
    if 0.0 in config.record_times:
        result.snapshots.append(Snapshot(0.0, ic))

    field, t = ic, 0.0
    dx = ic.grid.dx
    for target in record:
        while True:
            if config.dt_mode == FIXED:
                dt = config.dt
            else:
                dt = cfl_dt(field, dx, config.cfl_number, model, config.dt_max)
            remaining = target - t
            hit = remaining <= dt * (1.0 + _TOL)
            if hit:
                dt = remaining
            new_field = step(field, dt, model, config.scheme)
            for observer in observers:
                observer(t, dt, field)
            field = new_field
            result.n_steps += 1
            if hit:
                t = target
                break
            t += dt
        result.snapshots.append(Snapshot(t, field))
        logger.debug(f"Recorded t={t:.6g} after {result.n_steps} steps")

    logger.info(f"{model.name}: reached t={t:.6g} in {result.n_steps} steps on {ic.grid.n_cells} cells")
    return result
