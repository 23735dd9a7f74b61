"""
Inequalities Module
-------------------
Measurements of the functional inequalities the half-space theory rests on.

Nothing here asserts a constant. Each measurement returns an
InequalityRecord holding both sides and their ratio; callers decide what
ratio is acceptable.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np
import scipy.fft

from core.calculus import (
    LambdaProfile,
    div,
    grad_lambda,
    inner_product,
    norm_fractional_surface,
    norm_L2_3d,
    norm_Lp_3d,
    norm_surface_Lp,
    trace_gamma0,
    trace_gamma_nu,
)
from core.elliptic import compute_forcing_F, harmonic_extension
from core.fields import ScalarField3D, SurfaceField2D, VectorField3D

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InequalityRecord:
    """Left side, right side and ratio of one inequality evaluation."""

    name: str
    lhs: float
    rhs: float
    ratio: float

    @classmethod
    def measure(cls, name: str, lhs: float, rhs: float) -> "InequalityRecord":
        if rhs > 0:
            ratio = lhs / rhs
        else:
            ratio = 0.0 if lhs == 0 else float("inf")
        return cls(name, float(lhs), float(rhs), float(ratio))

    def holds(self, constant: float = 1.0) -> bool:
        return self.lhs <= constant * self.rhs

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


# ----------------------------------------------------------------------
# Even extension in z
# ----------------------------------------------------------------------


def _vertical_cosine_energy(values: np.ndarray, z_max: float) -> np.ndarray:
    """
    Cosine-series energy density per vertical wavenumber.

    The node profile is expanded in cos(n pi z / Z_max), n = 0..N_z (the even
    extension across both ends). Weights make the sum over n equal to the
    trapezoid integral of |values|^2.
    """
    n_z = values.shape[0] - 1
    coefficients = (
        scipy.fft.dct(values.real, type=1, axis=0)
        + 1j * scipy.fft.dct(values.imag, type=1, axis=0)
    ) / n_z
    coefficients[0] *= 0.5
    coefficients[-1] *= 0.5
    weights = np.full(n_z + 1, 0.5 * z_max)
    weights[0] = weights[-1] = z_max
    return weights[:, np.newaxis, np.newaxis] * np.abs(coefficients) ** 2


def norm_H_half_3d(field: ScalarField3D) -> float:
    """Full H^{1/2} norm of the even extension, weight (1 + |k|^2 + xi^2)^{1/2}."""
    grid = field.grid
    energy = _vertical_cosine_energy(field.values, grid.z_max)
    xi = np.arange(grid.n_z + 1) * np.pi / grid.z_max
    symbol = np.sqrt(1.0 + grid.k_squared[np.newaxis] + xi[:, np.newaxis, np.newaxis] ** 2)
    return float(np.sqrt(grid.area * np.sum(grid.mode_weight * symbol * energy)))


def norm_L2_H_half(field: ScalarField3D) -> float:
    """L2 in z of the inhomogeneous H^{1/2} norm in x."""
    grid = field.grid
    weight = (1.0 + grid.k_squared) ** 0.25
    levels = grid.spectral_pairing(weight * field.values, weight * field.values)
    return float(np.sqrt(np.dot(grid.node_weights, levels)))


def _vertical_derivative_norm(field: ScalarField3D) -> float:
    grid = field.grid
    derivative = np.diff(field.values, axis=0) / grid.dz
    return float(np.sqrt(grid.dz * np.sum(grid.spectral_pairing(derivative, derivative))))


# ----------------------------------------------------------------------
# Measurements
# ----------------------------------------------------------------------


def measure_interpolation(field: ScalarField3D) -> InequalityRecord:
    """
    ||u||^2_{H^1/2} against ||u||^2_{L2(H^1/2)} + ||u|| ||d_z u||.

    The ratio is the measured interpolation constant.
    """
    lhs = norm_H_half_3d(field) ** 2
    rhs = norm_L2_H_half(field) ** 2 + norm_L2_3d(field) * _vertical_derivative_norm(field)
    return InequalityRecord.measure("interpolation", lhs, rhs)


def measure_sobolev(field: ScalarField3D) -> InequalityRecord:
    """||u||_{L6} against ||grad u||_{L2} for fields vanishing at Z_max."""
    return InequalityRecord.measure(
        "sobolev", norm_Lp_3d(field, 6.0), norm_L2_3d(grad_lambda(field))
    )


def measure_trace(field: ScalarField3D) -> InequalityRecord:
    """||gamma_0 u||_{H^1/2 dot} against ||grad u||_{L2}; the sharp constant is 1."""
    return InequalityRecord.measure(
        "trace",
        norm_fractional_surface(trace_gamma0(field), 0.5),
        norm_L2_3d(grad_lambda(field)),
    )


def measure_flux_trace(u: VectorField3D) -> InequalityRecord:
    """
    ||gamma_nu u||_{H^-1/2 dot} against ||u||_{L2}.

    Meant for divergence-free u with zero horizontal mean at z = 0, where the
    dual norm of div u drops out.
    """
    return InequalityRecord.measure(
        "flux_trace",
        norm_fractional_surface(trace_gamma_nu(u), -0.5),
        norm_L2_3d(u),
    )


def divergence_free_field(surface: SurfaceField2D, profile: LambdaProfile) -> VectorField3D:
    """grad_lambda of the discrete harmonic extension of `surface`."""
    return grad_lambda(harmonic_extension(surface, profile), profile)


def adjointness_residual(u: VectorField3D, chi: ScalarField3D) -> float:
    """
    Relative defect of <u, grad chi> = -<div u, chi> + <gamma_nu u, gamma_0 chi>.

    chi must vanish at Z_max. The identity is exact for the discrete
    operators, so the residual is round-off sized.
    """
    grid = u.grid
    lhs = inner_product(u, grad_lambda(chi))
    boundary = float(grid.spectral_pairing(trace_gamma_nu(u).values, chi.values[0]))
    rhs = -inner_product(div(u), chi) + boundary
    scale = norm_L2_3d(u) * norm_L2_3d(grad_lambda(chi))
    return abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs)


def forcing_bound_check(
    f_interior: ScalarField3D,
    f_surface: SurfaceField2D,
    profile: LambdaProfile,
) -> InequalityRecord:
    """Monitor ||grad_lambda F|| against ||f_L||_{L^6/5} + ||f_nu||_{L^4/3}."""
    forcing = compute_forcing_F(f_interior, f_surface, profile)
    lhs = norm_L2_3d(forcing)
    rhs = norm_Lp_3d(f_interior, 6.0 / 5.0) + norm_surface_Lp(f_surface, 4.0 / 3.0)
    return InequalityRecord.measure("forcing_bound", lhs, rhs)
