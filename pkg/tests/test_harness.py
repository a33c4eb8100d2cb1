import os
import time

import numpy as np
import pandas as pd
import pytest

from shock_ad.config import burgers_table_row, load_case_file, settings
from shock_ad.core.errors import ConfigError, HarnessIOError, OutOfDomainError
from shock_ad.core.harness import (
    BURGERS,
    EULER,
    CaseConfig,
    SweepReport,
    emit_calculus_csv,
    emit_csv,
    emit_shock_history_csv,
    emit_snapshot_csv,
    epsilon_sweep,
    grid_convergence,
    run_case,
    run_pool,
)
from shock_ad.core.solver import CFL, FIXED

CASES_DIR = os.path.join(os.path.dirname(__file__), "..", "shock_ad", "data", "cases")


@pytest.fixture(scope="module")
def row9():
    return run_case(CaseConfig.burgers(9))


@pytest.fixture(scope="module")
def row7_sweep():
    return epsilon_sweep(CaseConfig.burgers(7, eps_points=7, eps_max=0.1))


def first_line(path):
    with open(path, encoding="utf-8") as f:
        return f.readline().strip()


# --- configuration --------------------------------------------------------

def test_table_rows_and_unknown_rows():
    assert burgers_table_row(9) == (1.472e-2, 9.52e-3)
    with pytest.raises(ConfigError):
        burgers_table_row(10)


def test_burgers_defaults_follow_the_table():
    cfg = CaseConfig.burgers(5)
    assert (cfg.dx, cfg.dt, cfg.dt_mode) == (9.2e-4, 5.88e-4, FIXED)
    assert cfg.shock_positions == (1.05,)
    assert cfg.name == "burgers_row5"
    eps = cfg.eps_list
    assert len(eps) == settings.EPS_POINTS
    assert eps[0] == pytest.approx(1e-4) and eps[-1] == pytest.approx(0.2)
    assert np.all(np.diff(eps) > 0)


def test_case_config_validation():
    with pytest.raises(ConfigError):
        CaseConfig.burgers(9, eps_min=0.5, eps_max=0.1)
    with pytest.raises(ConfigError):
        CaseConfig.burgers(9, mode="adjoint")
    with pytest.raises(ConfigError):
        CaseConfig.burgers(9, t_final=-1.0)
    with pytest.raises(ConfigError):
        CaseConfig.euler(seed_spec="ramp")
    with pytest.raises(ConfigError):
        CaseConfig.burgers(9, shock_positions=())


def test_from_mapping_parses_strings_and_applies_overrides():
    cfg = CaseConfig.from_mapping({"problem": "burgers_ramp", "grid_no": "8", "eps_points": "5"}, mode="blackbox")
    assert cfg.grid_no == 8 and cfg.dx == 7.36e-3 and cfg.eps_points == 5
    assert cfg.mode == "blackbox"

    explicit = CaseConfig.from_mapping({"dx": "0.01", "cfl": "0.5"})
    assert explicit.dt_mode == CFL and explicit.dx == 0.01 and explicit.grid_no is None

    euler = CaseConfig.from_mapping({"problem": "euler_shock", "long_domain": "true"})
    assert euler.problem == EULER
    assert euler.domain_length == settings.EULER_LONG_DOMAIN_LENGTH
    assert euler.t_final == settings.EULER_LONG_T_FINAL


def test_long_domain_replaces_the_case_file_length_and_time(caplog):
    desk = load_case_file(os.path.join(CASES_DIR, "euler_desk.cfg"))
    with caplog.at_level("WARNING", logger="shock_ad.core.harness"):
        cfg = CaseConfig.from_mapping(desk, long_domain=True)
    assert cfg.domain_length == settings.EULER_LONG_DOMAIN_LENGTH
    assert cfg.t_final == settings.EULER_LONG_T_FINAL
    assert "long_domain replaces" in caplog.text

    explicit = CaseConfig.from_mapping(desk, long_domain=True, t_final="50")
    assert explicit.t_final == 50.0
    assert explicit.domain_length == settings.EULER_LONG_DOMAIN_LENGTH


def test_scheme_is_parsed_and_validated():
    assert CaseConfig.burgers(9).scheme == settings.BURGERS_SCHEME
    assert CaseConfig.from_mapping({"grid_no": "9", "scheme": "lxf"}).scheme == "lxf"
    with pytest.raises(ConfigError):
        CaseConfig.burgers(9, scheme="weno")
    with pytest.raises(ConfigError):
        CaseConfig.euler(scheme="lxf")


def test_from_mapping_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ConfigError):
        CaseConfig.from_mapping({"grid": "5"})
    with pytest.raises(ConfigError):
        CaseConfig.from_mapping({"grid_no": "five"})
    with pytest.raises(ConfigError):
        CaseConfig.from_mapping({"problem": "navier_stokes"})


def test_bundled_case_files_load():
    burgers = CaseConfig.from_mapping(load_case_file(os.path.join(CASES_DIR, "burgers_row5.cfg")))
    assert burgers.problem == BURGERS and burgers.grid_no == 5
    euler = CaseConfig.from_mapping(load_case_file(os.path.join(CASES_DIR, "euler_desk.cfg")))
    assert euler.problem == EULER
    assert (euler.dx, euler.domain_length, euler.t_final, euler.cfl) == (0.01, 30.0, 100.0, 0.82)
    assert euler.shock_positions == (5.0,)


def test_missing_case_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_case_file(str(tmp_path / "missing.cfg"))


# --- runs -----------------------------------------------------------------

def test_run_case_records_the_snapshot_times(row9):
    assert [s.t for s in row9.run.snapshots] == list(settings.BURGERS_RECORD_TIMES)
    assert row9.grid.n_cells == 130
    assert row9.delta == pytest.approx(5 * 1.472e-2)
    assert row9.trackers[0].history.t[-1] == pytest.approx(2.0)


def test_sweep_rows_and_metadata(row7_sweep):
    frame = row7_sweep.to_frame()
    assert list(frame.columns) == ["epsilon", "err_no_ad", "err_blackbox", "err_shock", "err_base"]
    assert len(frame) == 7
    meta = row7_sweep.metadata
    assert meta["eps_dagger"] == pytest.approx(meta["delta"] / meta["xi"])
    assert meta["eps_min"] == pytest.approx(meta["dx"] / meta["xi"])
    # base error is one number divided by eps
    products = frame["err_base"] * frame["epsilon"]
    assert products.max() == pytest.approx(products.min(), rel=1e-12)


def test_sweep_ranks_the_three_tangents_at_the_largest_eps(row7_sweep):
    last = row7_sweep.to_frame().iloc[-1]
    assert last["err_shock"] < last["err_no_ad"]
    assert last["err_shock"] < last["err_blackbox"]


@pytest.fixture(scope="module")
def row5_sweep():
    return epsilon_sweep(CaseConfig.burgers(5))


def test_row5_sweep_reaches_eps_max(row5_sweep):
    frame = row5_sweep.to_frame()
    assert len(frame) == settings.EPS_POINTS
    assert frame["epsilon"].iloc[-1] == pytest.approx(settings.BURGERS_EPS_MAX)


def test_row5_shift_tracks_the_base_error_above_eps_dagger(row5_sweep):
    frame = row5_sweep.to_frame()
    above = frame[frame["epsilon"] >= row5_sweep.metadata["eps_dagger"]]
    smallest = above.nsmallest(3, "epsilon")
    assert len(smallest) == 3
    assert (smallest["err_shock"] <= 2.0 * smallest["err_base"]).all()


def test_row5_blackbox_error_is_an_order_above_the_shift(row5_sweep):
    last = row5_sweep.to_frame().iloc[-1]
    assert last["err_blackbox"] >= 10.0 * last["err_shock"]


def test_row5_error_without_tangents_is_flat_in_eps(row5_sweep):
    frame = row5_sweep.to_frame()
    no_ad = frame.loc[frame["epsilon"] >= row5_sweep.metadata["eps_dagger"], "err_no_ad"]
    assert no_ad.max() <= 1.2 * no_ad.min()


def test_grid_convergence_rows_come_back_in_grid_order():
    report = grid_convergence(CaseConfig.burgers(9), [9, 8, 7, 6], jobs=2)
    frame = report.to_frame()
    assert list(frame.columns)[0] == "dx"
    assert list(frame["dx"]) == [1.472e-2, 7.36e-3, 3.68e-3, 1.84e-3]
    base = frame["err_base"].to_numpy()
    ratios = base[:-1] / base[1:]
    assert np.all((ratios >= 1.3) & (ratios <= 2.2))
    # the first-order shift keeps an O(eps) remainder, so err_shock only has to keep falling
    assert np.all(np.diff(frame["err_shock"].to_numpy()) < 0)


def test_grid_convergence_raises_when_the_displaced_shock_leaves_the_grid():
    with pytest.raises(OutOfDomainError):
        grid_convergence(CaseConfig.burgers(9, eps_max=1.0), [9])


def test_run_pool_keeps_item_order():
    def slow_square(n):
        time.sleep(0.01 * (5 - n))
        return n * n

    assert run_pool(slow_square, [1, 2, 3, 4], jobs=4) == [1, 4, 9, 16]


# --- CSV output -----------------------------------------------------------

def test_empty_report_writes_the_header_only(tmp_path):
    path = str(tmp_path / "empty.csv")
    emit_csv(SweepReport("epsilon"), path)
    with open(path, encoding="utf-8") as f:
        assert f.read().strip() == "epsilon,err_no_ad,err_blackbox,err_shock,err_base"


def test_sweep_csv_round_trips_floats(tmp_path, row7_sweep):
    path = str(tmp_path / "sweep.csv")
    emit_csv(row7_sweep, path)
    back = pd.read_csv(path, float_precision="round_trip")
    np.testing.assert_array_equal(back["err_shock"].to_numpy(), row7_sweep.to_frame()["err_shock"].to_numpy())


def test_snapshot_and_history_headers(tmp_path, row9):
    snap = emit_snapshot_csv(row9.final_field, str(tmp_path / "snap.csv"))
    hist = emit_shock_history_csv(row9, str(tmp_path / "shock.csv"))
    calc = emit_calculus_csv(row9, 0.1, str(tmp_path / "calc.csv"))
    assert first_line(snap) == "x,u,v"
    assert first_line(hist) == "t,x_s,xi,x_exact,xi_exact"
    assert first_line(calc) == "x_rel,u,v_eps,chi_du,u_tilde"
    assert len(pd.read_csv(hist)) == row9.run.n_steps + 1


def test_euler_snapshot_header(tmp_path):
    case = run_case(CaseConfig.euler(dx=0.05, domain_length=10.0, t_final=0.5))
    path = emit_snapshot_csv(case.final_field, str(tmp_path / "euler.csv"))
    assert first_line(path) == "x,rho,u,p,v_rho,v_u,v_p"


def test_identical_configs_give_identical_files(tmp_path):
    paths = []
    for name in ("a.csv", "b.csv"):
        case = run_case(CaseConfig.burgers(9, t_final=0.5))
        paths.append(emit_snapshot_csv(case.final_field, str(tmp_path / name)))
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()


def test_unwritable_path_is_reported_with_the_path(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    target = str(blocker / "out.csv")
    with pytest.raises(HarnessIOError) as err:
        emit_csv(SweepReport("epsilon"), target)
    assert err.value.path == target
    assert err.value.exit_code == 4
