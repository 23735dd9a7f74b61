import numpy as np
import pytest
from hypothesis import given, strategies as st

from core.calculus import (
    L_lambda_apply,
    LambdaProfile,
    fractional_horizontal,
    grad_lambda,
    inner_product,
    mollifier_kernel_norms,
    mollify,
    norm_fractional_surface,
    norm_L2_3d,
    perp_gradient,
    trace_gamma0,
    trace_gamma_nu,
)
from core.exceptions import GaugeViolationError, InvalidParameterError
from core.fields import ScalarField3D, SurfaceField2D, random_scalar_field, random_vector_field
from core.inequalities import adjointness_residual

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestLambdaProfile:
    def test_constant_bound(self, grid) -> None:
        assert LambdaProfile.constant(grid, 1.0).bound == 1.0
        assert LambdaProfile.constant(grid, 0.5).bound == pytest.approx(2.0)

    def test_tanh_bound(self, tanh_profile) -> None:
        assert 1.9 < tanh_profile.bound <= 2.0
        assert np.all(np.diff(tanh_profile.at_nodes) >= 0)

    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_rejects_non_positive(self, grid, value) -> None:
        with pytest.raises(InvalidParameterError):
            LambdaProfile.constant(grid, value)

    def test_resampled_on_refined_grid(self, grid, tanh_profile) -> None:
        fine = tanh_profile.with_grid(grid.with_resolution(16, 16, 32))
        assert fine.at_nodes[::2] == pytest.approx(tanh_profile.at_nodes)


def test_grad_lambda_components(grid) -> None:
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    psi = ScalarField3D.from_physical(grid, (grid.z_max - z) * np.cos(grid.x1)[np.newaxis])
    profile = LambdaProfile.constant(grid, 2.0)
    G = grad_lambda(psi, profile)
    h1, h2 = grid.to_physical(G.h1), grid.to_physical(G.h2)
    assert np.allclose(h1, -(grid.z_max - z) * np.sin(grid.x1)[np.newaxis], atol=1e-12)
    assert np.allclose(h2, 0.0, atol=1e-12)
    assert np.allclose(grid.to_physical(G.vertical), -2.0 * np.cos(grid.x1)[np.newaxis], atol=1e-12)


def test_perp_gradient_orientation(grid) -> None:
    psi = ScalarField3D.from_physical(grid, np.broadcast_to(np.sin(grid.x2), (17, 16, 16)))
    velocity = perp_gradient(psi)
    assert np.allclose(grid.to_physical(velocity.h1), -np.cos(grid.x2)[np.newaxis], atol=1e-12)
    assert np.allclose(grid.to_physical(velocity.h2), 0.0, atol=1e-12)


def test_normal_trace_exact_for_linear_profiles(grid) -> None:
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    wave = np.cos(grid.x1)
    psi = ScalarField3D.from_physical(grid, (grid.z_max - z) * wave[np.newaxis])
    flux = trace_gamma_nu(grad_lambda(psi, LambdaProfile.constant(grid, 2.0)))
    assert np.allclose(flux.physical(), 2.0 * wave, atol=1e-12)
    assert np.allclose(trace_gamma0(psi).physical(), grid.z_max * wave, atol=1e-12)


def test_L_lambda_of_harmonic_mode_is_small(grid, unit_profile) -> None:
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    psi = ScalarField3D.from_physical(grid, np.exp(-z) * np.cos(grid.x1)[np.newaxis])
    interior = L_lambda_apply(psi, unit_profile).physical()[1:-1]
    assert np.max(np.abs(interior)) < 3e-2


@given(seeds)
def test_divergence_and_normal_trace_are_adjoint(grid, seed) -> None:
    u = random_vector_field(grid, seed)
    chi = random_scalar_field(grid, seed + 1)
    assert adjointness_residual(u, chi) < 1e-12


def test_inner_product_is_symmetric(grid) -> None:
    a = random_vector_field(grid, 3)
    b = random_vector_field(grid, 4)
    assert inner_product(a, b) == pytest.approx(inner_product(b, a), rel=1e-13)
    assert norm_L2_3d(a) > 0


class TestHorizontalMultipliers:
    def test_negative_power_needs_zero_mean(self, grid) -> None:
        constant = ScalarField3D.from_physical(grid, np.ones((17, 16, 16)))
        with pytest.raises(GaugeViolationError):
            fractional_horizontal(constant, -0.5)

    def test_exponent_range(self, grid) -> None:
        with pytest.raises(InvalidParameterError):
            fractional_horizontal(random_scalar_field(grid, 0), 3.5)

    @given(seeds, st.sampled_from([0.25, 0.5, 0.75, 1.5]))
    def test_powers_compose(self, grid, seed, s) -> None:
        field = random_scalar_field(grid, seed)
        back = fractional_horizontal(fractional_horizontal(field, s), -s)
        assert norm_L2_3d(back - field) <= 1e-12 * norm_L2_3d(field)

    @pytest.mark.parametrize("s", [0.5, 1.0, 1.5])
    def test_surface_norm_weight(self, grid, s) -> None:
        wave = SurfaceField2D.from_physical(grid, np.cos(2 * grid.x1))
        ratio = norm_fractional_surface(wave, s) / norm_fractional_surface(wave, 0.0)
        assert ratio == pytest.approx(2.0 ** s, rel=1e-12)

    def test_l2_norm_of_cosine(self, grid) -> None:
        wave = SurfaceField2D.from_physical(grid, np.cos(grid.x1))
        assert norm_fractional_surface(wave, 0.0) == pytest.approx(np.pi * np.sqrt(2.0), rel=1e-12)


class TestMollifier:
    def test_zero_width_is_identity(self, grid) -> None:
        field = random_scalar_field(grid, 2)
        assert mollify(field, 0.0) is field

    def test_preserves_mean_and_damps_modes(self, grid) -> None:
        surface = SurfaceField2D.from_physical(grid, 1.0 + np.cos(3 * grid.x1))
        smoothed = mollify(surface, 0.5)
        assert smoothed.values[0, 0] == pytest.approx(1.0)
        assert abs(smoothed.values[0, 3]) == pytest.approx(0.5 * np.exp(-0.5 * 0.25 * 9.0))

    def test_negative_width_rejected(self, grid) -> None:
        with pytest.raises(InvalidParameterError):
            mollify(random_scalar_field(grid, 0), -0.1)

    def test_kernel_norms_grow_as_width_shrinks(self, grid) -> None:
        wide = mollifier_kernel_norms(grid, 0.5)
        narrow = mollifier_kernel_norms(grid, 0.25)
        assert narrow["kernel_l2"] > wide["kernel_l2"]
        assert narrow["kernel_grad_l2"] > wide["kernel_grad_l2"]
        assert wide["bound_shape"] == pytest.approx(1 / 0.25 + 1 / 0.5)
