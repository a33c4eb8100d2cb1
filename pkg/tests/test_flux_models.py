import numpy as np
import pytest

from shock_ad.core.dual import lift, seed
from shock_ad.core.errors import NoShockError, ProbeDegenerateError, StateError
from shock_ad.core.flux_models import (
    BurgersModel,
    EulerModel,
    EulerState,
    MovingShockSetup,
    euler_flux,
    euler_left_state,
    moving_shock_right_state,
    riemann_cell_average,
    shock_speed_from_states,
)
from shock_ad.core.mesh import Grid1D

GAMMA = 1.4


@pytest.fixture
def desk_setup():
    return MovingShockSetup(mach=5.3452, shock_speed=0.1, x_shock0=5.0)


def test_burgers_probe_speed_is_the_mean_of_the_probes():
    model = BurgersModel()
    assert model.probe_speed(lift(1.0), lift(0.0)).value == pytest.approx(0.5)
    rng = np.random.default_rng(3)
    for _ in range(20):
        minus, plus = rng.uniform(-2, 2, size=2)
        if abs(plus - minus) < 0.1:
            continue
        speed = model.probe_speed(seed(minus, 1.0), seed(plus, 3.0))
        assert speed.value == pytest.approx(0.5 * (plus + minus), rel=1e-12, abs=1e-12)
        assert speed.tangent == pytest.approx(2.0, rel=1e-12)


def test_burgers_probe_speed_rejects_tiny_jumps():
    with pytest.raises(ProbeDegenerateError):
        BurgersModel().probe_speed(lift(1.0), lift(1.0 + 1e-6))


def test_left_state_at_rest():
    left = euler_left_state(0.0)
    assert left.rho.value == pytest.approx(1.0)
    assert left.u.value == 0.0
    assert left.p.value == pytest.approx(1.0 / GAMMA)
    assert left.a.value == pytest.approx(1.0)


def test_desk_case_ratios(desk_setup):
    left, right = desk_setup.left_state(), desk_setup.right_state()
    assert desk_setup.relative_mach() == pytest.approx(5.086, rel=1e-3)
    assert right.p.value / left.p.value == pytest.approx(30.0, rel=1e-3)
    assert right.rho.value / left.rho.value == pytest.approx(5.03, rel=1e-3)
    # post-shock velocity taken in the shock frame
    assert right.u.value == pytest.approx(0.4904, rel=1e-3)


def test_right_state_satisfies_rankine_hugoniot_at_speed_s(desk_setup):
    left, right = desk_setup.left_state(), desk_setup.right_state()
    S = desk_setup.shock_speed
    mass_l, mom_l, en_l = (q.value for q in euler_flux(left))
    mass_r, mom_r, en_r = (q.value for q in euler_flux(right))
    cons_l = [q.value for q in left.conservatives()]
    cons_r = [q.value for q in right.conservatives()]
    for f_l, f_r, q_l, q_r in zip((mass_l, mom_l, en_l), (mass_r, mom_r, en_r), cons_l, cons_r):
        assert f_r - f_l == pytest.approx(S * (q_r - q_l), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("mach", [2.0, 5.3452, 8.0])
@pytest.mark.parametrize("S", [0.05, 0.1, 0.3])
def test_shock_speed_round_trip(mach, S):
    left = euler_left_state(mach)
    right = moving_shock_right_state(left, S)
    assert shock_speed_from_states(left.u, left.a, left.p, right.p).value == pytest.approx(S, abs=1e-12)


def test_weak_relative_mach_has_no_shock():
    left = euler_left_state(5.3452)
    with pytest.raises(NoShockError):
        moving_shock_right_state(left, left.u.value - 0.5 * left.a.value)


def test_right_state_tangent_matches_finite_differences(desk_setup):
    left = desk_setup.left_state()
    right = moving_shock_right_state(left, seed(0.1, 1.0))
    h = 1e-6
    up = moving_shock_right_state(left, 0.1 + h)
    down = moving_shock_right_state(left, 0.1 - h)
    for name in ("rho", "u", "p"):
        fd = (getattr(up, name).value - getattr(down, name).value) / (2 * h)
        assert getattr(right, name).tangent == pytest.approx(fd, rel=1e-6)


def test_conservative_round_trip_and_state_errors():
    q = EulerState(lift(np.array([1.0, 2.0])), lift(np.array([0.5, -0.3])), lift(np.array([0.7, 1.1])))
    back = EulerState.from_conservatives(*q.conservatives())
    np.testing.assert_allclose(back.p.value, q.p.value, rtol=1e-14)
    with pytest.raises(StateError) as err:
        EulerState(lift(np.array([1.0, -1.0])), lift(np.zeros(2)), lift(np.ones(2))).validate()
    assert err.value.cell == 1


def test_riemann_cell_average_mixes_conservatives_in_the_shock_cell(desk_setup):
    grid = Grid1D(0.0, 1.0, 10)
    left, right = desk_setup.left_state(), desk_setup.right_state()
    field = riemann_cell_average(grid, 4.5, left, right)
    assert field.values[0, 3] == pytest.approx(left.rho.value)
    assert field.values[0, 5] == pytest.approx(right.rho.value)
    assert field.values[0, 4] == pytest.approx(0.5 * (left.rho.value + right.rho.value))


def test_euler_probe_speed_on_plateaus_recovers_s(desk_setup):
    model = EulerModel()
    left, right = desk_setup.left_state(), desk_setup.right_state(seed(0.1, 1.0))
    speed = model.probe_speed(left.as_dual(), right.as_dual())
    assert speed.value == pytest.approx(0.1, abs=1e-12)
    assert speed.tangent == pytest.approx(1.0, rel=1e-10)


def test_slow_acoustic_speed_brackets_the_shock(desk_setup):
    model = EulerModel()
    left, right = desk_setup.left_state(), desk_setup.right_state()
    assert model.point_speed(left.as_dual()).value > 0.1
    assert model.point_speed(right.as_dual()).value < 0.1
