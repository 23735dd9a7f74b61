import numpy as np
import pytest
from hypothesis import given, strategies as st

from core.calculus import L_lambda_apply, LambdaProfile, grad_lambda, trace_gamma0, trace_gamma_nu
from core.elliptic import (
    compute_forcing_F,
    compute_forcing_potential,
    harmonic_extension,
    mean_flux_imbalance,
    solve_dirichlet,
    solve_neumann,
)
from core.exceptions import IncompatibleMeanError, ShapeMismatchError
from core.fields import ScalarField3D, SurfaceField2D, random_scalar_field, random_surface_field
from core.grid import Grid3D
from services.checks import neumann_analytic_error, neumann_tolerance

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def _interior_gap(a: ScalarField3D, b: ScalarField3D) -> float:
    return float(np.max(np.abs(a.values[1:-1] - b.values[1:-1])))


@given(seeds)
def test_dirichlet_solves_interior_rows(grid, profile, seed) -> None:
    f = random_scalar_field(grid, seed)
    psi = solve_dirichlet(f, profile)
    assert _interior_gap(L_lambda_apply(psi, profile), f) < 1e-10 * np.max(np.abs(f.values))
    assert np.max(np.abs(psi.values[[0, -1]])) < 1e-14 * np.max(np.abs(psi.values))


def test_harmonic_extension_matches_surface(grid, profile) -> None:
    surface = random_surface_field(grid, 5)
    psi = harmonic_extension(surface, profile)
    assert np.allclose(trace_gamma0(psi).values, surface.values, atol=1e-12)
    assert np.max(np.abs(L_lambda_apply(psi, profile).values[1:-1])) < 1e-10


@given(seeds)
def test_neumann_reproduces_flux_datum(grid, profile, seed) -> None:
    g = random_surface_field(grid, seed)
    psi = solve_neumann(g, profile)
    flux = trace_gamma_nu(grad_lambda(psi, profile))
    assert np.max(np.abs(flux.values - g.values)) < 1e-10 * np.max(np.abs(g.values))
    assert np.max(np.abs(L_lambda_apply(psi, profile).values[1:-1])) < 1e-10
    assert np.all(psi.values[:, 0, 0] == 0)


def test_neumann_rejects_unbalanced_mean(grid, unit_profile) -> None:
    g = SurfaceField2D.from_physical(grid, 1.0 + np.cos(grid.x1))
    assert abs(mean_flux_imbalance(g, None)) == pytest.approx(1.0)
    with pytest.raises(IncompatibleMeanError):
        solve_neumann(g, unit_profile)
    relaxed = solve_neumann(g, unit_profile, strict=False)
    assert np.all(np.isfinite(relaxed.values))


def test_profile_must_share_the_grid(grid) -> None:
    other = LambdaProfile.constant(grid.with_resolution(16, 16, 32), 1.0)
    with pytest.raises(ShapeMismatchError):
        solve_dirichlet(ScalarField3D.zeros(grid), other)


def test_neumann_analytic_case() -> None:
    grid = Grid3D(1.0, 8, 8, 64, 8.0)
    assert neumann_analytic_error(grid) < neumann_tolerance(grid) < 5e-3


def test_neumann_second_order() -> None:
    errors = [neumann_analytic_error(Grid3D(1.0, 8, 8, n_z, 16.0)) for n_z in (64, 128, 256)]
    orders = [np.log2(coarse / fine) for coarse, fine in zip(errors, errors[1:])]
    assert min(orders) > 1.8


@pytest.mark.parametrize("stratified", [False, True])
def test_dirichlet_manufactured_second_order(stratified) -> None:
    """psi = sin(pi z / Z_max) cos(x1) with the source evaluated analytically."""
    z_max = 8.0
    jump, depth, width = 1.0, 2.0, 0.5

    def error(n_z: int) -> float:
        grid = Grid3D(1.0, 8, 8, n_z, z_max)
        z = grid.z_nodes
        if stratified:
            profile = LambdaProfile.tanh_stratified(grid, 1.0, 1.0 + jump, depth, width)
            s = (z - depth) / width
            lam = 1.0 + 0.5 * jump * (1.0 + np.tanh(s))
            slope = 0.5 * jump / (width * np.cosh(s) ** 2)
        else:
            profile = LambdaProfile.constant(grid, 1.0)
            lam, slope = np.ones_like(z), np.zeros_like(z)
        a = np.pi / z_max
        vertical = np.sin(a * z)
        source = slope * a * np.cos(a * z) - lam * a ** 2 * vertical - vertical
        wave = np.cos(grid.x1)[np.newaxis]
        f = ScalarField3D.from_physical(grid, source[:, np.newaxis, np.newaxis] * wave)
        exact = vertical[:, np.newaxis, np.newaxis] * wave
        return float(np.max(np.abs(solve_dirichlet(f, profile).physical() - exact)))

    errors = [error(n_z) for n_z in (32, 64, 128)]
    assert errors[-1] < 1e-3
    assert np.log2(errors[-2] / errors[-1]) > 1.8


def test_forcing_potential_balances_both_data(grid, profile) -> None:
    interior = random_scalar_field(grid, 11)
    surface = random_surface_field(grid, 12)
    potential = compute_forcing_potential(interior, surface, profile)
    assert _interior_gap(L_lambda_apply(potential, profile), interior) < 1e-10 * np.max(np.abs(interior.values))
    flux = trace_gamma_nu(compute_forcing_F(interior, surface, profile))
    assert np.max(np.abs(flux.values - surface.values)) < 1e-10
