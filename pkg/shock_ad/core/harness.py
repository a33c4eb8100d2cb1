"""
Case setup, epsilon sweeps, grid convergence and CSV output.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field as dc_field, fields, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from shock_ad.config import burgers_table_row, settings
from shock_ad.core.dual import seed
from shock_ad.core.errors import ConfigError, HarnessIOError, OutOfDomainError
from shock_ad.core.flux_models import BurgersModel, EulerModel, MovingShockSetup, riemann_cell_average
from shock_ad.core.mesh import CellField, Grid1D, cell_average
from shock_ad.core.shock_tracker import MODE_SHOCK, MODES, ShockState, ShockTracker, TrackerConfig
from shock_ad.core.solver import CFL, FIXED, RUSANOV, SCHEMES, RunResult, SchemeConfig, run
from shock_ad.core.tangent_calculus import (
    BurgersRampOracle,
    EulerShockOracle,
    jump_estimate,
    l1_error,
    linear_shift,
    ramp_xi,
    shift_all,
    shift_components,
    tangent_field,
)

logger = logging.getLogger(__name__)

BURGERS = "burgers_ramp"
EULER = "euler_shock"
PROBLEMS = (BURGERS, EULER)

SEED_RAMP = "ramp"
SEED_SHOCK_SPEED = "shock_speed"

SWEEP_COLUMNS = ["err_no_ad", "err_blackbox", "err_shock", "err_base"]


@dataclass(frozen=True)
class CaseConfig:
    problem: str = BURGERS
    grid_no: Optional[int] = None
    dx: float = None
    dt: float = None
    domain_length: float = None
    x_left: float = 0.0
    dt_mode: str = FIXED
    t_final: float = None
    cfl: float = None
    c_coeff: float = None
    alpha: float = None
    mode: str = MODE_SHOCK
    eps_min: float = None
    eps_max: float = None
    eps_points: int = settings.EPS_POINTS
    shock_positions: Tuple[float, ...] = ()
    record_times: Tuple[float, ...] = ()
    mach: float = settings.EULER_MACH
    shock_speed: float = settings.EULER_SHOCK_SPEED
    ramp_shift: float = settings.BURGERS_RAMP_SHIFT
    gamma: float = settings.GAMMA
    seed_spec: str = None
    scheme: str = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"Unknown problem {self.problem!r}; expected one of {PROBLEMS}")
        if self.mode not in MODES:
            raise ConfigError(f"Unknown mode {self.mode!r}; expected one of {MODES}")
        if self.dt_mode not in (FIXED, CFL):
            raise ConfigError(f"Unknown dt_mode {self.dt_mode!r}")
        for name in ("dx", "domain_length", "t_final", "c_coeff", "alpha", "eps_min", "eps_max", "gamma"):
            value = getattr(self, name)
            if value is None or not value > 0:
                raise ConfigError(f"{name} must be a positive number, got {value}")
        if self.dt_mode == FIXED and (self.dt is None or not self.dt > 0):
            raise ConfigError(f"Fixed time stepping needs dt > 0, got {self.dt}")
        if self.dt_mode == CFL and (self.cfl is None or not 0 < self.cfl <= 1):
            raise ConfigError(f"CFL number must lie in (0, 1], got {self.cfl}")
        if self.eps_min > self.eps_max:
            raise ConfigError(f"eps_min {self.eps_min} exceeds eps_max {self.eps_max}")
        if self.eps_points < 1:
            raise ConfigError(f"eps_points must be >= 1, got {self.eps_points}")
        if not self.shock_positions:
            raise ConfigError("At least one initial shock position is required")
        expected_seed = SEED_RAMP if self.problem == BURGERS else SEED_SHOCK_SPEED
        if self.seed_spec != expected_seed:
            raise ConfigError(f"{self.problem} supports seed_spec={expected_seed!r}, got {self.seed_spec!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.problem == EULER and self.scheme != RUSANOV:
            raise ConfigError(f"{self.problem} steps with {RUSANOV!r} only, got {self.scheme!r}")

    @property
    def name(self) -> str:
        if self.problem == BURGERS and self.grid_no is not None:
            return f"burgers_row{self.grid_no}"
        return f"{self.problem.split('_')[0]}_dx{self.dx:g}"

    @property
    def eps_list(self) -> np.ndarray:
        return np.geomspace(self.eps_min, self.eps_max, self.eps_points)

    @classmethod
    def burgers(cls, grid_no: int = 5, **overrides) -> "CaseConfig":
        dx, dt = burgers_table_row(grid_no)
        values = dict(
            problem=BURGERS,
            grid_no=grid_no,
            dx=dx,
            dt=dt,
            domain_length=settings.BURGERS_DOMAIN_LENGTH,
            dt_mode=FIXED,
            t_final=settings.BURGERS_T_FINAL,
            cfl=settings.BURGERS_CFL,
            c_coeff=settings.BURGERS_C_COEFF,
            alpha=settings.BURGERS_ALPHA,
            eps_min=settings.BURGERS_EPS_MIN,
            eps_max=settings.BURGERS_EPS_MAX,
            shock_positions=(settings.BURGERS_RAMP_SHIFT + 1.0,),
            record_times=settings.BURGERS_RECORD_TIMES,
            seed_spec=SEED_RAMP,
            scheme=settings.BURGERS_SCHEME,
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def euler(cls, long_domain: bool = False, **overrides) -> "CaseConfig":
        values = dict(
            problem=EULER,
            dx=settings.EULER_DX,
            domain_length=settings.EULER_LONG_DOMAIN_LENGTH if long_domain else settings.EULER_DOMAIN_LENGTH,
            dt_mode=CFL,
            t_final=settings.EULER_LONG_T_FINAL if long_domain else settings.EULER_T_FINAL,
            cfl=settings.EULER_CFL,
            c_coeff=settings.EULER_C_COEFF,
            alpha=settings.EULER_ALPHA,
            eps_min=settings.EULER_EPS_MIN,
            eps_max=settings.EULER_EPS_MAX,
            shock_positions=(settings.EULER_X_SHOCK0,),
            seed_spec=SEED_SHOCK_SPEED,
            scheme=settings.EULER_SCHEME,
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_mapping(cls, mapping: Dict[str, str], **overrides) -> "CaseConfig":
        """
        Builds a case from flat string values (case file, then CLI overrides).
        Unset fields take the defaults of the chosen problem; a grid_no selects
        dx and dt from the Burgers table, an explicit dx without dt switches to
        CFL stepping. long_domain replaces the domain length and final time of the
        mapping; explicit overrides still apply on top.
        """
        mapping = {k: v for k, v in dict(mapping).items() if v is not None}
        overrides = {k: v for k, v in overrides.items() if v is not None}
        problem = str(overrides.get("problem", mapping.get("problem", BURGERS)))
        if problem == EULER and _parse_bool(overrides.get("long_domain", mapping.get("long_domain", False))):
            replaced = [key for key in ("domain_length", "t_final") if key in mapping]
            if replaced:
                logger.warning(f"long_domain replaces the case values of {', '.join(replaced)}")
            mapping = {k: v for k, v in mapping.items() if k not in replaced}
        merged = {**mapping, **overrides}
        known = {f.name for f in fields(cls)} | {"long_domain"}
        unknown = sorted(set(merged) - known)
        if unknown:
            raise ConfigError(f"Unknown case keys: {', '.join(unknown)}")

        problem = str(merged.pop("problem", BURGERS))
        long_domain = _parse_bool(merged.pop("long_domain", False))
        try:
            parsed = {name: _FIELD_PARSERS[name](value) for name, value in merged.items()}
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid case value: {e}") from e

        if problem == BURGERS:
            grid_no = parsed.pop("grid_no", None)
            if grid_no is None and "dx" not in parsed:
                grid_no = 5
            if grid_no is None:
                parsed.setdefault("dt_mode", FIXED if "dt" in parsed else CFL)
                return replace(cls.burgers(5, **parsed), grid_no=None)
            if "dx" in parsed and "dt" not in parsed:
                parsed.setdefault("dt_mode", CFL)
            return cls.burgers(grid_no, **parsed)
        if problem == EULER:
            if "dt" in parsed:
                parsed.setdefault("dt_mode", FIXED)
            return cls.euler(long_domain, **parsed)
        raise ConfigError(f"Unknown problem {problem!r}; expected one of {PROBLEMS}")


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _parse_floats(value) -> Tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).replace(";", ",").split(",") if v.strip())


_FIELD_PARSERS = {
    "grid_no": int,
    "dx": float,
    "dt": float,
    "domain_length": float,
    "x_left": float,
    "dt_mode": str,
    "t_final": float,
    "cfl": float,
    "c_coeff": float,
    "alpha": float,
    "mode": str,
    "eps_min": float,
    "eps_max": float,
    "eps_points": int,
    "shock_positions": _parse_floats,
    "record_times": _parse_floats,
    "mach": float,
    "shock_speed": float,
    "ramp_shift": float,
    "gamma": float,
    "seed_spec": str,
    "scheme": str,
}


@dataclass
class CaseResult:
    config: CaseConfig
    grid: Grid1D
    run: RunResult
    trackers: List[ShockTracker]
    delta: float

    @property
    def final_field(self) -> CellField:
        return self.run.final.field

    @property
    def shocks(self) -> List[ShockState]:
        return [tracker.state for tracker in self.trackers]


@dataclass
class SweepReport:
    key: str
    rows: List[Dict[str, float]] = dc_field(default_factory=list)
    metadata: Dict[str, object] = dc_field(default_factory=dict)

    @property
    def columns(self) -> List[str]:
        return [self.key] + SWEEP_COLUMNS

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)


def model_for(cfg: CaseConfig):
    if cfg.problem == EULER:
        return EulerModel(cfg.gamma)
    return BurgersModel()


def grid_for(cfg: CaseConfig) -> Grid1D:
    return Grid1D.covering(cfg.x_left, cfg.domain_length, cfg.dx)


def euler_setup(cfg: CaseConfig) -> MovingShockSetup:
    return MovingShockSetup(cfg.mach, cfg.shock_speed, cfg.shock_positions[0], cfg.gamma)


def initial_field(cfg: CaseConfig, grid: Grid1D) -> CellField:
    """
    Burgers: cell averages of the shifted ramp, seeded with the ramp itself
    (eps scales the ramp amplitude). Euler: the Riemann step seeded with respect
    to the shock speed S.
    """
    if cfg.problem == BURGERS:
        shift = cfg.ramp_shift

        def ramp(x):
            xr = x - shift
            return np.where((xr >= 0.0) & (xr <= 1.0), xr, 0.0)

        averages = cell_average(ramp, grid, breakpoints=(shift, shift + 1.0)).values
        return CellField(grid, seed(averages, averages))

    setup = euler_setup(cfg)
    if len(cfg.shock_positions) > 1:
        raise ConfigError("The Euler moving-shock case has exactly one shock")
    return riemann_cell_average(grid, setup.x_shock0, setup.left_state(), setup.right_state(seed(cfg.shock_speed, 1.0)))


def run_case(cfg: CaseConfig) -> CaseResult:
    model = model_for(cfg)
    grid = grid_for(cfg)
    tracker_cfg = TrackerConfig(cfg.c_coeff, cfg.alpha, cfg.mode)
    delta = tracker_cfg.delta(grid.dx)
    logger.info(f"Case {cfg.name}: {grid.n_cells} cells, dx={grid.dx:g}, delta={delta:.4g}, mode={cfg.mode}")

    ic = initial_field(cfg, grid)
    trackers = [
        ShockTracker(ShockState.initial(x0, 0.0, index=i + 1), tracker_cfg, model, grid.dx)
        for i, x0 in enumerate(cfg.shock_positions)
    ]
    scheme_cfg = SchemeConfig(
        t_final=cfg.t_final,
        dt_mode=cfg.dt_mode,
        dt=cfg.dt,
        cfl_number=cfg.cfl if cfg.cfl is not None else 0.5,
        record_times=tuple(cfg.record_times),
        scheme=cfg.scheme,
    )
    result = run(ic, scheme_cfg, model, observers=trackers)
    for tracker in trackers:
        logger.debug(f"Shock {tracker.state.index} at t={cfg.t_final:g}: x={tracker.position:.6g}, xi={tracker.tangent:.6g}")
    return CaseResult(cfg, grid, result, trackers, delta)


def oracle_field(cfg: CaseConfig, grid: Grid1D, t: float, epsilon: float) -> CellField:
    if cfg.problem == BURGERS:
        return BurgersRampOracle(cfg.ramp_shift, epsilon).cell_averages(grid, t)
    return EulerShockOracle(euler_setup(cfg)).cell_averages(grid, t, epsilon)


def sweep_errors(case: CaseResult, epsilons: Sequence[float], skip_outside: bool = True) -> List[Dict[str, float]]:
    """
    err = L1(u~(eps), oracle(eps)) / eps for no_ad (u~ = U), blackbox (u~ = U + eps*U_dot)
    and shock (full tangential shift); base = L1(U, oracle(0)) / eps. An eps whose
    displaced shock leaves the grid is skipped, or raises when skip_outside is False.
    """
    cfg, grid = case.config, case.grid
    U = case.final_field
    Udot = tangent_field(U)
    shocks = case.shocks
    jumps = [jump_estimate(U, s, case.delta) for s in shocks]
    base = l1_error(U, oracle_field(cfg, grid, cfg.t_final, 0.0))

    rows = []
    for eps in epsilons:
        try:
            shifted = shift_all(U, Udot, shocks, jumps, eps, case.delta)
        except OutOfDomainError as e:
            if not skip_outside:
                raise
            logger.warning(f"Skipping eps={eps:.3g}: {e}")
            continue
        exact = oracle_field(cfg, grid, cfg.t_final, eps)
        rows.append({
            "epsilon": float(eps),
            "err_no_ad": l1_error(U, exact) / eps,
            "err_blackbox": l1_error(linear_shift(U, Udot, eps), exact) / eps,
            "err_shock": l1_error(shifted, exact) / eps,
            "err_base": base / eps,
        })
    return rows


def epsilon_sweep(cfg: CaseConfig, case: CaseResult = None) -> SweepReport:
    """
    One shock-mode simulation serves every eps and every mode: the primal field
    and U_dot do not depend on the tracker mode, only the shock tangent does.
    """
    cfg = replace(cfg, mode=MODE_SHOCK)
    case = case or run_case(cfg)
    xi = case.trackers[0].tangent
    report = SweepReport("epsilon", sweep_errors(case, cfg.eps_list))
    report.metadata = {
        "case": cfg.name,
        "problem": cfg.problem,
        "mode": cfg.mode,
        "dx": case.grid.dx,
        "n_cells": case.grid.n_cells,
        "t_final": cfg.t_final,
        "delta": case.delta,
        "xi": xi,
        "eps_dagger": case.delta / abs(xi) if xi else math.inf,
        "eps_min": case.grid.dx / abs(xi) if xi else math.inf,
    }
    logger.info(
        f"Sweep {cfg.name}: {len(report.rows)} eps values, xi={xi:.6g}, "
        f"eps_dagger={report.metadata['eps_dagger']:.4g}"
    )
    return report


def run_pool(fn: Callable, items: Sequence, jobs: int = settings.JOBS, desc: str = "Runs") -> list:
    """Runs fn over items on a thread pool; results come back in item order."""
    results = [None] * len(items)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        futures = {executor.submit(fn, item): i for i, item in enumerate(items)}
        for future in tqdm(as_completed(futures), total=len(items), desc=desc):
            results[futures[future]] = future.result()
    return results


def grid_convergence(template: CaseConfig, grids: Sequence, jobs: int = settings.JOBS) -> SweepReport:
    """
    Errors at eps = eps_max over a list of grids. Burgers grids are grid-table row
    numbers, Euler grids are cell widths.
    """
    template = replace(template, mode=MODE_SHOCK)
    if template.problem == BURGERS:
        configs = [CaseConfig.burgers(int(g), **_shared_overrides(template)) for g in grids]
    else:
        configs = [replace(template, dx=float(g)) for g in grids]

    cases = run_pool(run_case, configs, jobs, desc="Grids")
    report = SweepReport("dx", metadata={"case": template.problem, "epsilon": template.eps_max, "grids": list(grids)})
    for cfg, case in zip(configs, cases):
        row = sweep_errors(case, [cfg.eps_max], skip_outside=False)[0]
        row.pop("epsilon")
        report.rows.append({"dx": case.grid.dx, **row})
    logger.info(f"Grid convergence over {len(report.rows)} grids at eps={template.eps_max:g}")
    return report


def _shared_overrides(cfg: CaseConfig) -> dict:
    shared = asdict(cfg)
    for key in ("problem", "grid_no", "dx", "dt", "dt_mode", "seed_spec"):
        shared.pop(key)
    return shared


# --- CSV output ------------------------------------------------------------

def _write_frame(frame: pd.DataFrame, path: str):
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        frame.to_csv(path, index=False, encoding="utf-8")
    except OSError as e:
        raise HarnessIOError(f"Cannot write {path}: {e}", path=path) from e
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def emit_csv(report: SweepReport, path: str):
    return _write_frame(report.to_frame(), path)


def emit_snapshot_csv(field: CellField, path: str):
    x = field.grid.centers
    if field.n_vars == 1:
        frame = pd.DataFrame({"x": x, "u": field.values, "v": field.tangents})
    else:
        frame = pd.DataFrame({
            "x": x,
            "rho": field.values[0], "u": field.values[1], "p": field.values[2],
            "v_rho": field.tangents[0], "v_u": field.tangents[1], "v_p": field.tangents[2],
        })
    return _write_frame(frame, path)


def emit_shock_history_csv(case: CaseResult, path: str, shock: int = 0):
    t, x_s, xi = case.trackers[shock].history.as_arrays()
    frame = pd.DataFrame({"t": t, "x_s": x_s, "xi": xi})
    if case.config.problem == BURGERS and len(case.trackers) == 1:
        oracle = BurgersRampOracle(case.config.ramp_shift)
        frame["x_exact"] = [oracle.shock_position(ti) for ti in t]
        frame["xi_exact"] = [ramp_xi(ti) for ti in t]
    return _write_frame(frame, path)


def emit_calculus_csv(case: CaseResult, epsilon: float, path: str, width: float = 4.0):
    """Components of u~ for cells within width*delta of the first shock; Euler uses density."""
    U = case.final_field
    shocks = case.shocks
    jumps = [jump_estimate(U, s, case.delta) for s in shocks]
    parts = shift_components(U, tangent_field(U), shocks, jumps, epsilon, case.delta)
    x_rel = case.grid.centers - float(shocks[0].position.value)
    near = np.abs(x_rel) <= width * case.delta + abs(epsilon * float(shocks[0].position.tangent))

    def pick(a):
        a = a if np.ndim(a) == 1 else a[0]
        return a[near]

    frame = pd.DataFrame({
        "x_rel": x_rel[near],
        "u": pick(parts.u),
        "v_eps": pick(parts.v_eps),
        "chi_du": pick(parts.chi_du),
        "u_tilde": pick(parts.u_tilde),
    })
    return _write_frame(frame, path)
