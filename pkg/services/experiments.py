"""
Experiments Service
-------------------
Stability experiments on families of runs: vanishing hyperviscosity and
converging initial data. Distances are sup-in-time L2 norms of the plain
gradient restricted to the window torus x [0, Z_max / 2].
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config.settings import SolverConfig
from core.calculus import LambdaProfile, grad_lambda, norm_L2_3d
from core.exceptions import InvalidParameterError
from core.fields import ScalarField3D, random_scalar_field
from services.dynamics import Forcing, Trajectory, run

logger = logging.getLogger(__name__)


def local_gradient_distance(a: ScalarField3D, b: ScalarField3D, depth: Optional[float] = None) -> float:
    """
    ||grad(a - b)|| in L2(torus x [0, depth]), depth defaulting to Z_max / 2.

    Node components use the trapezoid rule truncated at the last node inside
    the window; the vertical component uses the half-nodes inside it.
    """
    grid = a.grid
    depth = 0.5 * grid.z_max if depth is None else depth
    gradient = grad_lambda(a - b)
    last = int(np.floor(depth / grid.dz + 1e-9))

    weights = np.full(last + 1, grid.dz)
    weights[0] = weights[-1] = 0.5 * grid.dz
    horizontal = grid.spectral_pairing(gradient.h1[: last + 1], gradient.h1[: last + 1]) + grid.spectral_pairing(
        gradient.h2[: last + 1], gradient.h2[: last + 1]
    )
    vertical = grid.spectral_pairing(gradient.vertical[:last], gradient.vertical[:last])
    return float(np.sqrt(np.dot(weights, horizontal) + grid.dz * np.sum(vertical)))


def trajectory_distance(first: Trajectory, second: Trajectory, depth: Optional[float] = None) -> float:
    """Sup over common stored times of the local gradient distance."""
    pairs = zip(first.states, second.states)
    distances = [local_gradient_distance(x.psi, y.psi, depth) for x, y in pairs]
    return float(max(distances)) if distances else 0.0


@dataclass
class StabilityReport:
    """Distances between runs of a parameter family."""

    parameters: List[float]
    successive_gaps: List[float]
    pairwise: List[List[float]]
    cauchy: bool
    failures: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def stability_experiment(
    psi0: ScalarField3D,
    profile: LambdaProfile,
    config: SolverConfig,
    eps_sequence: Sequence[float],
    forcing: Optional[Forcing] = None,
    diagnostics_every: int = 1,
) -> StabilityReport:
    """
    Run one trajectory per eps_n and measure how the runs approach each other.

    Args:
        psi0: Initial stream function shared by all runs.
        profile: Stratification weight.
        config: Base configuration; eps is replaced per run.
        eps_sequence: Non-increasing, non-negative values.
        forcing: Optional forcing shared by all runs.
        diagnostics_every: Storage interval in steps.

    Returns:
        StabilityReport; `cauchy` is True when every successive gap is
        strictly smaller than the previous one.

    Raises:
        InvalidParameterError: The sequence increases or has a negative entry.
    """
    values = [float(value) for value in eps_sequence]
    if any(value < 0 for value in values) or any(b > a for a, b in zip(values, values[1:])):
        raise InvalidParameterError(f"eps sequence must be non-increasing and >= 0, got {values}")

    trajectories = []
    failures = []
    for eps in values:
        trajectory = run(psi0, profile, replace(config, eps=eps), forcing, diagnostics_every)
        if not trajectory.succeeded:
            failures.append(f"eps={eps:g}: {trajectory.failure.message}")
        trajectories.append(trajectory)
        logger.info(f"Stability sweep: eps={eps:g} done")

    count = len(trajectories)
    pairwise = [[0.0] * count for _ in range(count)]
    for i in range(count):
        for j in range(i + 1, count):
            pairwise[i][j] = pairwise[j][i] = trajectory_distance(trajectories[i], trajectories[j])
    successive = [pairwise[i][i + 1] for i in range(count - 1)]
    cauchy = all(later < earlier for earlier, later in zip(successive, successive[1:]))
    return StabilityReport(values, successive, pairwise, cauchy, failures)


def perturbation_sweep(
    psi0: ScalarField3D,
    profile: LambdaProfile,
    config: SolverConfig,
    amplitudes: Sequence[float],
    seed: int = 0,
    diagnostics_every: int = 1,
) -> Dict[str, Any]:
    """
    Perturb the initial data by relative amplitudes and track the trajectory gap.

    Each perturbation is a seeded random potential scaled to
    amplitude * ||grad_lambda psi0||.

    Returns:
        Dictionary with the amplitudes, the initial and sup-in-time local
        gaps, and the gap-to-amplitude ratios.
    """
    grid = psi0.grid
    base = run(psi0, profile, config, diagnostics_every=diagnostics_every)
    reference = norm_L2_3d(grad_lambda(psi0, profile))
    direction = random_scalar_field(grid, seed, max_mode=min(3, min(grid.max_retained_mode)))
    direction = direction * (1.0 / norm_L2_3d(grad_lambda(direction, profile)))

    initial_gaps, gaps = [], []
    for amplitude in amplitudes:
        perturbed = psi0 + direction * (amplitude * reference)
        trajectory = run(perturbed, profile, config, diagnostics_every=diagnostics_every)
        initial_gaps.append(local_gradient_distance(trajectory.states[0].psi, base.states[0].psi))
        gaps.append(trajectory_distance(trajectory, base))
        logger.info(f"Perturbation sweep: amplitude={amplitude:g}, gap={gaps[-1]:.3e}")

    ratios = [gap / amplitude if amplitude > 0 else 0.0 for gap, amplitude in zip(gaps, amplitudes)]
    return {
        "amplitudes": [float(value) for value in amplitudes],
        "initial_gaps": initial_gaps,
        "gaps": gaps,
        "ratios": ratios,
    }
