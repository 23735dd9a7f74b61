import numpy as np
import pytest

from config.settings import SolverConfig
from core.calculus import LambdaProfile
from core.fields import ScalarField3D
from core.grid import Grid3D
from services import weak_form
from services.dynamics import run

from conftest import two_mode_field


@pytest.fixture(scope="module")
def steady_run():
    """(1 + z) exp(-z) cos(x1): x1-only and not harmonic, so q does not vanish."""
    grid = Grid3D(1.0, 32, 32, 32, 8.0)
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    psi0 = ScalarField3D.from_physical(grid, 0.1 * (1.0 + z) * np.exp(-z) * np.cos(grid.x1)[np.newaxis])
    return run(psi0, LambdaProfile.constant(grid, 1.0), SolverConfig(dt=0.01, final_time=0.5))


def test_battery_is_seeded_and_supported(steady_run) -> None:
    grid = steady_run.final.grid
    first = weak_form.test_function_battery(grid, 0.5, count=5, seed=2)
    second = weak_form.test_function_battery(grid, 0.5, count=5, seed=2)
    assert first == second
    for phi in first:
        assert 0.25 <= phi.t_width <= 0.45
        assert phi.z_center + phi.z_width <= 0.5 * grid.z_max
        values, _ = phi.time(np.array([0.5]))
        assert values[0] == 0.0


def test_bump_vanishes_outside_support() -> None:
    phi = weak_form.BumpTestFunction(0.4, 1.0, 0.5, 0.0, 1.0, 0.0, 1.0)
    assert np.all(phi.vertical(np.array([0.4, 1.6, 3.0])) == 0.0)
    assert phi.vertical(np.array([1.0]))[0] == pytest.approx(np.exp(-1.0))


def test_interior_residual_of_steady_run(steady_run) -> None:
    battery = weak_form.test_function_battery(steady_run.final.grid, 0.5, seed=1)
    rows = weak_form.weak_residual_interior(steady_run, battery)
    assert len(rows) == len(battery)
    assert all(row["beta"] == 0.0 and row["forcing"] == 0.0 for row in rows)
    assert weak_form.residual_summary(rows)["max_relative"] < 1e-3


def test_boundary_residual_of_steady_run(steady_run) -> None:
    battery = weak_form.test_function_battery(steady_run.final.grid, 0.5, seed=1)
    rows = weak_form.weak_residual_boundary(steady_run, battery)
    assert weak_form.residual_summary(rows)["max_relative"] < 1e-3


def _two_mode_residuals(n_z: int, dt: float):
    grid = Grid3D(1.0, 32, 32, n_z, 8.0)
    config = SolverConfig(dt=dt, final_time=0.5)
    trajectory = run(two_mode_field(grid, amplitude=0.5), LambdaProfile.constant(grid, 1.0), config)
    battery = weak_form.test_function_battery(grid, 0.5, seed=1)
    interior = weak_form.residual_summary(weak_form.weak_residual_interior(trajectory, battery))
    boundary = weak_form.residual_summary(weak_form.weak_residual_boundary(trajectory, battery))
    return interior["max_relative"], boundary["max_relative"]


def test_residuals_drop_under_refinement() -> None:
    coarse = _two_mode_residuals(16, 0.05)
    fine = _two_mode_residuals(32, 0.025)
    for before, after in zip(coarse, fine):
        assert before > 0
        assert before >= 2.0 * after


def test_empty_summary() -> None:
    assert weak_form.residual_summary([]) == {"max_residual": 0.0, "max_relative": 0.0}
