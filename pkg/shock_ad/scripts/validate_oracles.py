import json
import math
import os
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from datetime import datetime
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from shock_ad.config import settings
from shock_ad.core import dual as ad
from shock_ad.core.dual import seed
from shock_ad.core.errors import HarnessIOError
from shock_ad.core.flux_models import (
    BurgersModel,
    EulerModel,
    MovingShockSetup,
    euler_left_state,
    moving_shock_right_state,
    shock_speed_from_states,
)
from shock_ad.core.harness import CaseConfig, epsilon_sweep, run_case
from shock_ad.core.mesh import CellField, Grid1D
from shock_ad.core.shock_tracker import MODE_BLACKBOX, MODE_SHOCK
from shock_ad.core.solver import (
    local_lxf_interface_flux,
    lxf_interface_flux,
    lxf_step,
    rusanov_interface_flux,
    rusanov_step,
    rusanov_step_euler,
)
from shock_ad.core.tangent_calculus import BurgersRampOracle, ramp_xi, xi_ode_oracle


@dataclass
class OracleCheck:
    """One named closure check; fn returns (observed error, tolerance)."""
    name: str
    category: str
    fn: Callable[[], Tuple[float, float]]
    simulation: bool = False


@dataclass
class CheckResult:
    name: str
    category: str
    error: float
    tolerance: float
    passed: bool
    duration: float
    failure: Optional[str] = None
    timestamp: str = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now().isoformat()


# --- checks ---------------------------------------------------------------

def _random_composition(rng: np.random.Generator):
    """A smooth random expression in x and its plain-float twin, positive on [0.5, 1.5]."""
    a, b, c = rng.uniform(0.5, 2.0, size=3)
    p = rng.choice([2, 3, 0.5, 1.5])

    def f(x):
        y = a * x * x + b
        z = ad.sqrt(y) if isinstance(y, ad.Dual) else math.sqrt(y)
        w = (z - c / (x + 1.0)) * (x - 0.25)
        w = w * w + 1.0
        return (w ** p) / (y + x)
    return f


def check_dual_vs_finite_differences() -> Tuple[float, float]:
    rng = np.random.default_rng(20240611)
    worst = 0.0
    h = 1e-6
    for _ in range(100):
        f = _random_composition(rng)
        x0 = rng.uniform(0.5, 1.5)
        tangent = f(seed(x0, 1.0)).tangent
        fd = (f(x0 + h) - f(x0 - h)) / (2 * h)
        worst = max(worst, abs(tangent - fd) / max(abs(fd), 1.0))
    return worst, 1e-6


def check_ramp_rankine_hugoniot() -> Tuple[float, float]:
    worst = 0.0
    for eps in (-0.3, 0.0, 0.2):
        oracle = BurgersRampOracle(epsilon=eps)
        for t in np.linspace(0.0, 2.0, 9):
            worst = max(worst, abs(oracle.shock_speed(t) - 0.5 * oracle.left_state(t)))
    return worst, 1e-12


def check_xi_vs_eps_differences() -> Tuple[float, float]:
    h = 1e-4
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        fd = (BurgersRampOracle(epsilon=h).shock_position(t) - BurgersRampOracle(epsilon=-h).shock_position(t)) / (2 * h)
        worst = max(worst, abs(fd - ramp_xi(t)))
    return worst, 1e-7


def check_xi_ode() -> Tuple[float, float]:
    return max(abs(xi_ode_oracle(t) - ramp_xi(t)) for t in (0.5, 1.0, 2.0)), 1e-8


def check_euler_round_trip() -> Tuple[float, float]:
    worst = 0.0
    for mach in (2.0, 5.3452, 8.0):
        left = euler_left_state(mach)
        for S in (0.05, 0.1, 0.3):
            right = moving_shock_right_state(left, S)
            S_back = shock_speed_from_states(left.u, left.a, left.p, right.p).value
            worst = max(worst, abs(S_back - S))
    return worst, 1e-12


def check_euler_desk_values() -> Tuple[float, float]:
    setup = MovingShockSetup(settings.EULER_MACH, settings.EULER_SHOCK_SPEED, settings.EULER_X_SHOCK0)
    left, right = setup.left_state(), setup.right_state()
    observed = (setup.relative_mach(), right.p.value / left.p.value, right.rho.value / left.rho.value)
    expected = (5.086, 30.0, 5.03)
    # the quoted desk value of u_r is misprinted, so u_r is held to mass conservation instead
    S = setup.shock_speed
    u_r = S + (left.u.value - S) * left.rho.value / right.rho.value
    mass = abs(right.u.value - u_r) / max(abs(u_r), 1.0)
    return max(mass, *(abs(o - e) / e for o, e in zip(observed, expected))), 5e-3


def _mass_drift(field: CellField, dt: float, step, flux_fn, totals, n_steps: int = 1000) -> float:
    """Largest relative mismatch between the change of cell sums and the boundary flux difference."""
    worst = 0.0
    for _ in range(n_steps):
        flux = flux_fn(field, dt)
        before = totals(field)
        new = step(field, dt)
        boundary = flux.value[..., -1] - flux.value[..., 0]
        change = totals(new) - before
        scale = np.maximum(np.abs(before), 1.0)
        worst = max(worst, float(np.max(np.abs(change + dt / field.grid.dx * boundary) / scale)))
        field = new
    return worst


def check_conservation_lxf() -> Tuple[float, float]:
    grid = Grid1D(0.0, 0.01, 100)
    model = BurgersModel()
    u0 = 0.5 + 0.4 * np.sin(2 * np.pi * grid.centers)
    field = CellField(grid, seed(u0, np.cos(grid.centers)))
    drift = _mass_drift(
        field, 0.005,
        step=lambda f, dt: lxf_step(f, dt, model),
        flux_fn=lambda f, dt: lxf_interface_flux(f, dt, model),
        totals=lambda f: f.values.sum(axis=-1),
    )
    return drift, 1e-12


def check_conservation_scalar_rusanov() -> Tuple[float, float]:
    grid = Grid1D(0.0, 0.01, 100)
    model = BurgersModel()
    u0 = 0.5 + 0.4 * np.sin(2 * np.pi * grid.centers)
    field = CellField(grid, seed(u0, np.cos(grid.centers)))
    drift = _mass_drift(
        field, 0.005,
        step=lambda f, dt: rusanov_step(f, dt, model),
        flux_fn=lambda f, dt: local_lxf_interface_flux(f, model),
        totals=lambda f: f.values.sum(axis=-1),
    )
    return drift, 1e-12


def check_conservation_rusanov() -> Tuple[float, float]:
    grid = Grid1D(0.0, 0.01, 100)
    x = grid.centers
    rho = 1.0 + 0.2 * np.exp(-((x - 0.5) / 0.1) ** 2)
    field = CellField(grid, ad.stack([seed(rho, x), seed(np.full_like(x, 0.1), 0.0), seed(rho / 1.4, 0.0)]))
    model = EulerModel()
    drift = _mass_drift(
        field, 0.002,
        step=lambda f, dt: rusanov_step_euler(f, dt),
        flux_fn=lambda f, dt: rusanov_interface_flux(f),
        totals=lambda f: ad.stack(model.state(f.data).conservatives()).value.sum(axis=-1),
    )
    return drift, 1e-12


_case_registry_lock = threading.Lock()
_case_locks: Dict[str, threading.Lock] = {}
_cases: Dict[str, object] = {}


def _shared(key: str, build: Callable):
    """Builds a simulation once per process, even when checks ask for it concurrently."""
    with _case_registry_lock:
        lock = _case_locks.setdefault(key, threading.Lock())
    with lock:
        if key not in _cases:
            _cases[key] = build()
    return _cases[key]


def _burgers_row5():
    return _shared("burgers_row5", lambda: run_case(CaseConfig.burgers(5)))


def _burgers_row5_sweep():
    return _shared("burgers_row5_sweep", lambda: epsilon_sweep(CaseConfig.burgers(5), case=_burgers_row5()).to_frame())


def _euler_desk(mode: str = MODE_SHOCK):
    return _shared(f"euler_desk_{mode}", lambda: run_case(CaseConfig.euler(mode=mode)))


def check_burgers_row5_position() -> Tuple[float, float]:
    case = _burgers_row5()
    exact_x = BurgersRampOracle().shock_position(2.0)
    return abs(case.trackers[0].position - exact_x) / case.grid.dx, 2.0


def check_burgers_row5_tangent() -> Tuple[float, float]:
    case = _burgers_row5()
    return abs(case.trackers[0].tangent - ramp_xi(2.0)) / ramp_xi(2.0), 0.05


def check_euler_desk_speed() -> Tuple[float, float]:
    case = _euler_desk()
    t, x, _ = case.trackers[0].history.as_arrays()
    late = t >= 0.5 * case.config.t_final
    speed = np.polyfit(t[late], x[late], 1)[0]
    return abs(speed - case.config.shock_speed) / case.config.shock_speed, 0.01


def check_euler_desk_tangent() -> Tuple[float, float]:
    # the exact shock tangent with respect to S is t
    case = _euler_desk()
    return abs(case.trackers[0].tangent - case.config.t_final) / case.config.t_final, 0.05


def check_euler_desk_blackbox() -> Tuple[float, float]:
    # passes when the naive tangent misses t by more than 25%
    case = _euler_desk(MODE_BLACKBOX)
    deviation = abs(case.trackers[0].tangent - case.config.t_final) / case.config.t_final
    return 0.25 / deviation if deviation else math.inf, 1.0


def _above_eps_dagger(frame):
    xi = _burgers_row5().trackers[0].tangent
    return frame[frame["epsilon"] >= _burgers_row5().delta / abs(xi)]


def check_row5_shift_vs_base() -> Tuple[float, float]:
    smallest = _above_eps_dagger(_burgers_row5_sweep()).nsmallest(3, "epsilon")
    if len(smallest) < 3:
        return math.inf, 2.0
    return float((smallest["err_shock"] / smallest["err_base"]).max()), 2.0


def check_row5_blackbox_gap() -> Tuple[float, float]:
    # passes when the blackbox error is at least ten times the shift error at eps_max
    last = _burgers_row5_sweep().iloc[-1]
    return 10.0 * float(last["err_shock"]) / float(last["err_blackbox"]), 1.0


def check_row5_no_ad_flat() -> Tuple[float, float]:
    no_ad = _above_eps_dagger(_burgers_row5_sweep())["err_no_ad"]
    return float(no_ad.max() / no_ad.min()), 1.2


CHECKS: List[OracleCheck] = [
    OracleCheck("dual_vs_central_differences", "ad", check_dual_vs_finite_differences),
    OracleCheck("ramp_rankine_hugoniot", "burgers_oracle", check_ramp_rankine_hugoniot),
    OracleCheck("ramp_xi_vs_eps_differences", "burgers_oracle", check_xi_vs_eps_differences),
    OracleCheck("ramp_xi_ode_rk4", "burgers_oracle", check_xi_ode),
    OracleCheck("euler_speed_round_trip", "euler_algebra", check_euler_round_trip),
    OracleCheck("euler_desk_ratios", "euler_algebra", check_euler_desk_values),
    OracleCheck("conservation_lax_friedrichs", "conservation", check_conservation_lxf),
    OracleCheck("conservation_scalar_rusanov", "conservation", check_conservation_scalar_rusanov),
    OracleCheck("conservation_rusanov", "conservation", check_conservation_rusanov),
    OracleCheck("burgers_row5_position", "tracking", check_burgers_row5_position, simulation=True),
    OracleCheck("burgers_row5_tangent", "tracking", check_burgers_row5_tangent, simulation=True),
    OracleCheck("euler_desk_speed", "tracking", check_euler_desk_speed, simulation=True),
    OracleCheck("euler_desk_tangent", "tracking", check_euler_desk_tangent, simulation=True),
    OracleCheck("euler_desk_blackbox_off", "tracking", check_euler_desk_blackbox, simulation=True),
    OracleCheck("row5_shift_vs_base", "sweep", check_row5_shift_vs_base, simulation=True),
    OracleCheck("row5_blackbox_gap", "sweep", check_row5_blackbox_gap, simulation=True),
    OracleCheck("row5_no_ad_flat", "sweep", check_row5_no_ad_flat, simulation=True),
]


class OracleRunner:
    """Runs the closure checks and writes results, metrics and a readable report."""

    def __init__(self, output_dir: str = None, quick: bool = False):
        self.output_dir = output_dir or settings.OUTPUT_DIR
        self.checks = [c for c in CHECKS if not (quick and c.simulation)]
        self.results: List[CheckResult] = []

    def run_single_check(self, check: OracleCheck) -> CheckResult:
        start_time = time.time()
        failure = None
        error, tolerance = math.inf, 0.0
        try:
            error, tolerance = check.fn()
        except Exception as e:
            failure = f"{type(e).__name__}: {e}"
        return CheckResult(
            name=check.name,
            category=check.category,
            error=float(error),
            tolerance=float(tolerance),
            passed=failure is None and error <= tolerance,
            duration=time.time() - start_time,
            failure=failure,
        )

    def run_checks(self, max_workers: int = settings.JOBS):
        with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
            futures = {executor.submit(self.run_single_check, c): c for c in self.checks}
            for future in tqdm(as_completed(futures), total=len(self.checks), desc="Checks"):
                self.results.append(future.result())
        order = {c.name: i for i, c in enumerate(self.checks)}
        self.results.sort(key=lambda r: order[r.name])

    @property
    def all_passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    def calculate_metrics(self) -> Dict:
        category_scores = {}
        for result in self.results:
            scores = category_scores.setdefault(result.category, {"total": 0, "passed": 0})
            scores["total"] += 1
            scores["passed"] += int(result.passed)

        durations = [r.duration for r in self.results]
        total_passed = sum(1 for r in self.results if r.passed)
        return {
            "total_checks": len(self.results),
            "total_passed": total_passed,
            "success_rate": round(total_passed / len(self.results) * 100, 2) if self.results else 0,
            "total_duration": round(sum(durations), 3),
            "median_duration": round(statistics.median(durations), 3) if durations else 0,
            "category_scores": category_scores,
            "failures": sum(1 for r in self.results if r.failure),
        }

    def _write(self, path: str, text: str):
        try:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                f.write(text)
        except OSError as e:
            raise HarnessIOError(f"Cannot write {path}: {e}", path=path) from e

    def save_results(self):
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

        results_file = os.path.join(self.output_dir, f"oracle_results_{timestamp}.json")
        self._write(results_file, json.dumps([asdict(r) for r in self.results], indent=2))

        metrics = self.calculate_metrics()
        metrics_file = os.path.join(self.output_dir, f"oracle_metrics_{timestamp}.json")
        self._write(metrics_file, json.dumps(metrics, indent=2))

        report = self._generate_report(metrics)
        report_file = os.path.join(self.output_dir, f"oracle_report_{timestamp}.txt")
        self._write(report_file, report)

        print(report)
        print(f"Results: {results_file}\nMetrics: {metrics_file}\nReport: {report_file}")

    def _generate_report(self, metrics: Dict) -> str:
        report = []
        report.append("=" * 60)
        report.append("ORACLE CLOSURE CHECKS")
        report.append("=" * 60)
        report.append(f"\nDate: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        report.append(f"Passed: {metrics['total_passed']}/{metrics['total_checks']} ({metrics['success_rate']}%)")
        report.append(f"Total time: {metrics['total_duration']}s")

        report.append("\nBY CATEGORY:")
        for cat, data in metrics["category_scores"].items():
            report.append(f"  {cat:20s}: {data['passed']:2d}/{data['total']:2d}")

        report.append("\nCHECKS:")
        for r in self.results:
            status = "ok  " if r.passed else "FAIL"
            report.append(f"  [{status}] {r.name:32s} error={r.error:.3e} tol={r.tolerance:.1e} ({r.duration:.2f}s)")
            if r.failure:
                report.append(f"         -> {r.failure[:100]}")

        report.append(f"\n{'=' * 60}")
        return "\n".join(report)


def main():
    import argparse

    parser = argparse.ArgumentParser(description="Closure checks of the analytic oracles and the Riemann algebra")
    parser.add_argument("--workers", type=int, default=settings.JOBS, help="Worker threads")
    parser.add_argument("--output-dir", type=str, default=None, help="Where results are written")
    parser.add_argument("--quick", action="store_true", help="Skip the simulation-based checks")
    args = parser.parse_args()

    runner = OracleRunner(output_dir=args.output_dir, quick=args.quick)
    runner.run_checks(max_workers=args.workers)
    runner.save_results()
    raise SystemExit(0 if runner.all_passed else 3)


if __name__ == "__main__":
    main()
