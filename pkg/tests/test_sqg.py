import numpy as np
import pytest

from config.settings import SolverConfig
from core.calculus import LambdaProfile
from core.exceptions import GaugeViolationError, InvalidParameterError
from core.fields import SurfaceField2D, random_surface_field
from core.grid import Grid3D
from services.sqg import harmonic_residual, lift_harmonic, sqg_oracle, sqg_run, sqg_velocity


def test_velocity_of_a_single_mode(grid) -> None:
    u, v = sqg_velocity(SurfaceField2D.from_physical(grid, np.cos(grid.x1)))
    assert np.allclose(u.physical(), 0.0, atol=1e-13)
    assert np.allclose(v.physical(), -np.sin(grid.x1), atol=1e-13)


def test_velocity_needs_zero_mean(grid) -> None:
    with pytest.raises(GaugeViolationError):
        sqg_velocity(SurfaceField2D.from_physical(grid, 1.0 + np.cos(grid.x1)))


def test_l2_norm_is_conserved(grid) -> None:
    theta0 = random_surface_field(grid, 9, scale=0.05)
    trajectory = sqg_run(theta0, dt=0.01, final_time=0.2)
    assert trajectory.failure is None
    assert len(trajectory.states) == 21
    norms = trajectory.norms
    assert np.max(np.abs(norms - norms[0])) < 1e-6 * norms[0]


def test_surface_hyperviscosity_decays(grid) -> None:
    theta0 = SurfaceField2D.from_physical(grid, np.cos(grid.x1))
    trajectory = sqg_run(theta0, dt=0.05, final_time=0.5, eps=0.1, store_every=0)
    assert len(trajectory.states) == 2
    assert trajectory.final.l2_norm == pytest.approx(trajectory.states[0].l2_norm * np.exp(-0.1), rel=1e-9)


def test_cfl_failure_is_recorded(grid) -> None:
    theta0 = random_surface_field(grid, 2, scale=100.0)
    trajectory = sqg_run(theta0, dt=0.5, final_time=1.0)
    assert trajectory.failure is not None
    assert trajectory.failure.error_type == "CFLViolationError"


def test_lift_is_harmonic_with_matching_flux(grid, unit_profile) -> None:
    theta = SurfaceField2D.from_physical(grid, np.cos(grid.x1) + np.sin(grid.x2))
    psi = lift_harmonic(theta)
    slope = (psi.values[1] - psi.values[0]) / grid.dz
    assert np.allclose(slope, theta.values, atol=0.3)
    assert harmonic_residual(psi, unit_profile) < 0.05


def test_oracle_matches_three_dimensional_run() -> None:
    grid = Grid3D(1.0, 16, 16, 64, 8.0)
    profile = LambdaProfile.constant(grid, 1.0)
    theta0 = SurfaceField2D.from_physical(grid, 0.1 * (np.cos(grid.x1) + np.sin(grid.x2)))
    report = sqg_oracle(theta0, profile, SolverConfig(dt=0.02, final_time=0.1))
    assert report["three_d"].succeeded
    assert len(report["gaps"]) == 6
    assert report["buoyancy_gap"] < 2e-2
    assert report["harmonicity_max"] >= 0


def test_oracle_rejects_unsupported_settings(grid, tanh_profile, unit_profile) -> None:
    theta0 = SurfaceField2D.from_physical(grid, np.cos(grid.x1))
    with pytest.raises(InvalidParameterError):
        sqg_oracle(theta0, tanh_profile, SolverConfig(final_time=0.01))
    with pytest.raises(InvalidParameterError):
        sqg_oracle(theta0, unit_profile, SolverConfig(delta=0.1, final_time=0.01))
