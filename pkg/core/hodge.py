"""
Hodge Module
------------
Weighted Hodge decomposition u = grad_lambda(phi) + curl part.

The curl part is divergence free in the interior and has zero normal trace
at z = 0. Both pieces are computed from two per-mode elliptic solves:

    psi_1 = solve_dirichlet(div u)
    psi_2 = solve_neumann(gamma_nu(u - grad_lambda psi_1))
    phi   = psi_1 + psi_2

Horizontal mean (k = 0): the Neumann datum is dropped, so the z-constant
vertical remainder and the horizontal components of the mean mode stay in
the curl part.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from core.calculus import (
    LambdaProfile,
    check_gauge,
    div,
    fractional_horizontal,
    grad_lambda,
    inner_product,
    norm_L2_3d,
    trace_gamma_nu,
)
from core.elliptic import solve_dirichlet, solve_neumann
from core.fields import ScalarField3D, SurfaceField2D, VectorField3D, random_vector_field
from core.grid import Grid3D

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HodgeDecomposition:
    """grad_lambda(potential) + curl_part reproduces the decomposed field."""

    grad_part: VectorField3D
    curl_part: VectorField3D
    potential: ScalarField3D

    def reassembly_error(self, original: VectorField3D) -> float:
        """Relative defect of grad_part + curl_part against the input."""
        scale = norm_L2_3d(original)
        gap = norm_L2_3d(self.grad_part + self.curl_part - original)
        return gap / scale if scale > 0 else gap


def decompose(u: VectorField3D, profile: LambdaProfile) -> HodgeDecomposition:
    """
    Split u into its weighted-gradient and curl parts.

    Args:
        u: Staggered vector field.
        profile: Stratification weight.

    Returns:
        HodgeDecomposition with potential phi, grad_part = grad_lambda(phi)
        and curl_part = u - grad_part.
    """
    psi_dirichlet = solve_dirichlet(div(u), profile)
    remainder = u - grad_lambda(psi_dirichlet, profile)

    flux = trace_gamma_nu(remainder).values.copy()
    flux[0, 0] = 0.0
    psi_neumann = solve_neumann(SurfaceField2D(u.grid, flux), profile)

    potential = psi_dirichlet + psi_neumann
    grad_part = grad_lambda(potential, profile)
    return HodgeDecomposition(grad_part=grad_part, curl_part=u - grad_part, potential=potential)


def project_lambda(u: VectorField3D, profile: LambdaProfile) -> VectorField3D:
    """P_lambda u, the weighted-gradient part."""
    return decompose(u, profile).grad_part


def project_curl(u: VectorField3D, profile: LambdaProfile) -> VectorField3D:
    """P_curl u = u - P_lambda u."""
    return decompose(u, profile).curl_part


def pairing_defect(u: VectorField3D, phi: ScalarField3D, profile: LambdaProfile) -> float:
    """
    Relative defect of <P_lambda u, grad phi> = <u, grad phi>.

    phi must vanish at Z_max.
    """
    test = grad_lambda(phi)
    projected = inner_product(project_lambda(u, profile), test)
    direct = inner_product(u, test)
    scale = norm_L2_3d(u) * norm_L2_3d(test)
    return abs(projected - direct) / scale if scale > 0 else abs(projected - direct)


def multiplier_commutation_check(u: VectorField3D, s: float, profile: LambdaProfile) -> float:
    """
    ||P_lambda(Delta^s u) - Delta^s(P_lambda u)|| / ||u||.

    Raises:
        GaugeViolationError: s < 0 and u has a k = 0 component.
    """
    if s < 0:
        check_gauge(u)
    scale = norm_L2_3d(u)
    if scale == 0:
        return 0.0
    lhs = project_lambda(fractional_horizontal(u, s), profile)
    rhs = fractional_horizontal(project_lambda(u, profile), s)
    return norm_L2_3d(lhs - rhs) / scale


def curl_part_residuals(decomposition: HodgeDecomposition) -> Dict[str, float]:
    """
    Interior divergence and normal trace of the curl part, relative to its size.

    The k = 0 column is excluded from the trace residual: the mean-mode
    remainder belongs to the curl part by construction.
    """
    curl = decomposition.curl_part
    scale = max(norm_L2_3d(curl), np.finfo(float).tiny)
    divergence = div(curl)
    flux = trace_gamma_nu(curl).values.copy()
    flux[0, 0] = 0.0
    boundary = float(np.sqrt(curl.grid.spectral_pairing(flux, flux)))
    return {
        "divergence": norm_L2_3d(divergence) / scale,
        "normal_trace": boundary / scale,
    }


def measure_operator_norm(
    grid: Grid3D,
    profile: LambdaProfile,
    samples: int = 8,
    seed: int = 0,
    max_mode: Optional[int] = None,
) -> Dict[str, Any]:
    """
    Largest ||P_lambda u|| / ||u|| over seeded random fields.

    Returns:
        Dictionary with the measured norm, the admissible bound
        Lambda(2 + Lambda) and the individual ratios.
    """
    if max_mode is None:
        max_mode = min(grid.max_retained_mode)
    ratios: List[float] = []
    for index in range(samples):
        u = random_vector_field(grid, seed + index, max_mode=max_mode)
        size = norm_L2_3d(u)
        if size > 0:
            ratios.append(norm_L2_3d(project_lambda(u, profile)) / size)

    bound = profile.bound * (2.0 + profile.bound)
    measured = max(ratios) if ratios else 0.0
    logger.debug(f"P_lambda operator norm {measured:.4f} (bound {bound:.4f}) over {len(ratios)} samples")
    return {"measured": measured, "bound": bound, "ratios": ratios}
