import numpy as np
import pytest

from shock_ad.core.dual import lift, seed
from shock_ad.core.errors import BoundaryCellError, ConfigError, OutOfDomainError
from shock_ad.core.mesh import MINUS, PLUS, CellField, Grid1D, cell_average, eval_constant, eval_linear, one_sided_slopes


def linear_field(grid, slope=2.0):
    return CellField(grid, lift(slope * grid.centers))


def test_covering_grid_reaches_domain_end():
    assert Grid1D.covering(0.0, 1.9, 1.472e-2).n_cells == 130
    assert Grid1D.covering(0.0, 1.9, 9.2e-4).n_cells == 2066
    assert Grid1D.covering(0.0, 30.0, 0.01).n_cells == 3000


def test_grid_rejects_bad_sizes():
    with pytest.raises(ConfigError):
        Grid1D(0.0, 0.0, 10)
    with pytest.raises(ConfigError):
        Grid1D(0.0, 0.1, 2)


def test_locate_ties_go_to_the_right_cell():
    grid = Grid1D(0.0, 0.25, 8)
    assert grid.locate(0.5) == 2
    assert grid.locate(0.0) == 0
    assert grid.locate(2.0) == 7
    with pytest.raises(OutOfDomainError):
        grid.locate(2.01)
    with pytest.raises(OutOfDomainError):
        grid.locate(-0.01)


def test_field_must_match_grid():
    with pytest.raises(ConfigError):
        CellField(Grid1D(0.0, 0.1, 10), lift(np.zeros(9)))


def test_cell_average_is_exact_for_polynomials():
    grid = Grid1D(0.0, 0.1, 10)
    avg = cell_average(lambda x: x ** 2, grid).values
    a, b = grid.faces[:-1], grid.faces[1:]
    np.testing.assert_allclose(avg, (b ** 3 - a ** 3) / (3 * grid.dx), rtol=1e-13)


def test_cell_average_splits_cells_at_breakpoints():
    grid = Grid1D(0.0, 1.0, 4)
    avg = cell_average(lambda x: np.where(x < 1.5, 1.0, 0.0), grid, breakpoints=(1.5,))
    np.testing.assert_allclose(avg.values, [1.0, 0.5, 0.0, 0.0], atol=1e-14)
    np.testing.assert_array_equal(avg.tangents, np.zeros(4))


def test_eval_constant_ignores_position_tangent():
    grid = Grid1D(0.0, 0.1, 10)
    field = CellField(grid, seed(np.arange(10.0), np.ones(10)))
    out = eval_constant(field, seed(0.35, 5.0))
    assert out.value == 3.0
    assert out.tangent == 1.0


def test_one_sided_slopes_need_interior_cells():
    field = linear_field(Grid1D(0.0, 0.1, 10))
    with pytest.raises(BoundaryCellError):
        one_sided_slopes(field, 0)
    with pytest.raises(IndexError):
        one_sided_slopes(field, 9)
    s_plus, s_minus = one_sided_slopes(field, 4)
    assert s_plus.value == pytest.approx(2.0)
    assert s_minus.value == pytest.approx(2.0)


@pytest.mark.parametrize("side", [PLUS, MINUS])
def test_eval_linear_reproduces_linear_data_and_carries_position_tangent(side):
    field = linear_field(Grid1D(0.0, 0.1, 10))
    out = eval_linear(field, seed(0.37, 1.0), side)
    assert out.value == pytest.approx(0.74)
    assert out.tangent == pytest.approx(2.0)


def test_eval_linear_on_a_system_returns_all_components():
    grid = Grid1D(0.0, 0.1, 10)
    data = np.stack([grid.centers, 2 * grid.centers, np.ones(10)])
    field = CellField(grid, lift(data))
    out = eval_linear(field, seed(0.52, 0.0), PLUS)
    np.testing.assert_allclose(out.value, [0.52, 1.04, 1.0])
    assert field.n_vars == 3
