"""
Property Checks
---------------
Seeded property suites run on a configured grid: the Hodge projector
algebra, the analytic Neumann case, the trace inequalities and the steady
states of the 3D and SQG integrators. Results are plain pass/fail rows with
the measured value and its tolerance.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

import numpy as np

from config.settings import SolverConfig
from core.calculus import LambdaProfile, norm_L2_3d, surface_inner_product
from core.elliptic import harmonic_extension, solve_neumann
from core.fields import ScalarField3D, SurfaceField2D, random_scalar_field, random_surface_field, random_vector_field
from core.grid import Grid3D
from core.hodge import decompose, measure_operator_norm, pairing_defect
from core.inequalities import divergence_free_field, measure_flux_trace, measure_trace
from services.dynamics import run
from services.sqg import sqg_run

logger = logging.getLogger(__name__)

HODGE_TOLERANCE = 1e-9
NEUMANN_ERROR_CONSTANT = 0.25
STEADY_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def below(cls, name: str, value: float, tolerance: float) -> "CheckResult":
        return cls(name, float(value), float(tolerance), bool(value <= tolerance))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def hodge_suite(grid: Grid3D, profile: LambdaProfile, samples: int = 8, seed: int = 0) -> List[CheckResult]:
    """Idempotence, complementarity, annihilation, pairing and operator norm of P_lambda."""
    max_mode = min(3, min(grid.max_retained_mode))
    idempotence = complementarity = annihilation = pairing = 0.0
    for index in range(samples):
        u = random_vector_field(grid, seed + index, max_mode=max_mode)
        scale = norm_L2_3d(u)
        parts = decompose(u, profile)
        again = decompose(parts.grad_part, profile)
        idempotence = max(idempotence, norm_L2_3d(again.grad_part - parts.grad_part) / scale)
        complementarity = max(complementarity, norm_L2_3d(parts.grad_part + parts.curl_part - u) / scale)
        annihilation = max(annihilation, norm_L2_3d(decompose(parts.curl_part, profile).grad_part) / scale)
        phi = random_scalar_field(grid, seed + samples + index, max_mode=max_mode)
        pairing = max(pairing, pairing_defect(u, phi, profile))

    operator = measure_operator_norm(grid, profile, samples=samples, seed=seed, max_mode=max_mode)
    return [
        CheckResult.below("hodge_idempotence", idempotence, HODGE_TOLERANCE),
        CheckResult.below("hodge_complementarity", complementarity, HODGE_TOLERANCE),
        CheckResult.below("hodge_annihilation", annihilation, HODGE_TOLERANCE),
        CheckResult.below("hodge_pairing", pairing, HODGE_TOLERANCE),
        CheckResult.below("hodge_operator_norm", operator["measured"], operator["bound"]),
    ]


def neumann_analytic_error(grid: Grid3D) -> float:
    """
    Max error of solve_neumann for lambda = 1 and g = cos(x1 / L_h).

    The exact solution is L_h exp(-z / L_h) cos(x1 / L_h).
    """
    profile = LambdaProfile.constant(grid, 1.0)
    wave = np.cos(grid.x1 / grid.length_h)
    solution = solve_neumann(SurfaceField2D.from_physical(grid, wave), profile)
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    exact = grid.length_h * np.exp(-z / grid.length_h) * wave[np.newaxis]
    return float(np.max(np.abs(solution.physical() - exact)))


def neumann_tolerance(grid: Grid3D) -> float:
    """
    Admissible analytic Neumann error: the boundary row leaves dz^2 / (8 L_h)
    at z = 0, truncation at Z_max leaves L_h exp(-Z_max / L_h).
    """
    length = grid.length_h
    return NEUMANN_ERROR_CONSTANT * grid.dz ** 2 / length + length * np.exp(-grid.z_max / length)


def trace_suite(grid: Grid3D, samples: int = 8, seed: int = 0) -> List[CheckResult]:
    """Trace and flux-trace ratios on harmonic extensions, constant allowed 1 + 5 dz."""
    profile = LambdaProfile.constant(grid, 1.0)
    max_mode = min(3, min(grid.max_retained_mode))
    allowed = 1.0 + 5.0 * grid.dz
    trace_ratio = flux_ratio = 0.0
    for index in range(samples):
        surface = random_surface_field(grid, seed + index, max_mode=max_mode)
        trace_ratio = max(trace_ratio, measure_trace(harmonic_extension(surface, profile)).ratio)
        flux_ratio = max(flux_ratio, measure_flux_trace(divergence_free_field(surface, profile)).ratio)
    return [
        CheckResult.below("trace_inequality", trace_ratio, allowed),
        CheckResult.below("flux_trace_inequality", flux_ratio, allowed),
    ]


def steady_state_drift(grid: Grid3D, dt: float, final_time: float) -> Dict[str, float]:
    """
    Relative drift of the steady states exp(-|k| z) cos(k x1) and theta = cos(k x1).

    Both depend on x1 only, so their advection vanishes identically.
    """
    profile = LambdaProfile.constant(grid, 1.0)
    k = 1.0 / grid.length_h
    wave = np.cos(k * grid.x1)
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    psi0 = ScalarField3D.from_physical(grid, np.exp(-k * z) * wave[np.newaxis])

    config = SolverConfig(dt=dt, final_time=final_time)
    trajectory = run(psi0, profile, config, diagnostics_every=0)
    start, end = trajectory.states[0].psi, trajectory.final.psi
    three_d = norm_L2_3d(end - start) / norm_L2_3d(start)

    theta0 = SurfaceField2D.from_physical(grid, wave)
    surface = sqg_run(theta0, dt, final_time, store_every=0)
    gap = surface.final.theta - theta0
    sqg = float(np.sqrt(surface_inner_product(gap, gap) / surface_inner_product(theta0, theta0)))
    return {"three_d": float(three_d), "sqg": sqg}


def run_property_suite(
    grid: Grid3D,
    profile: LambdaProfile,
    config: SolverConfig,
    samples: int = 8,
    seed: int = 0,
) -> List[CheckResult]:
    """Every suite above on one grid."""
    results = hodge_suite(grid, profile, samples, seed)
    results.append(CheckResult.below("neumann_analytic", neumann_analytic_error(grid), neumann_tolerance(grid)))
    results.extend(trace_suite(grid, samples, seed))
    drift = steady_state_drift(grid, config.dt, config.final_time)
    results.append(CheckResult.below("steady_state_3d", drift["three_d"], STEADY_TOLERANCE))
    results.append(CheckResult.below("steady_state_sqg", drift["sqg"], STEADY_TOLERANCE))

    failed = [result.name for result in results if not result.passed]
    if failed:
        logger.warning(f"Property checks failed: {', '.join(failed)}")
    else:
        logger.info(f"All {len(results)} property checks passed")
    return results
