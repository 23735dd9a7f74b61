"""
SQG Service
-----------
Surface quasi-geostrophic solver on the horizontal torus: a buoyancy theta
advected by U = grad_perp Delta^{-1/2} theta. It is the boundary-only
reduction of the half-space model for lambda = 1 and harmonic Psi, and
serves as an independent oracle for the 3D integrator.

Sign convention of the lift: Psi(k, z) = -theta(k) exp(-|k| z) / |k|, so
that d Psi/dz at z = 0 equals theta. The surface velocity of the lifted Psi
is then -U(theta), which makes the 3D buoyancy equal to -sqg_run(-theta^0).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config.settings import SolverConfig
from core.calculus import (
    L_lambda_apply,
    LambdaProfile,
    check_gauge,
    norm_interior_L2,
    norm_L2_3d,
    surface_inner_product,
    trace_gamma_nu,
)
from core.exceptions import (
    CFLViolationError,
    InvalidParameterError,
    NumericalInstabilityError,
    QGError,
)
from core.fields import ScalarField3D, SurfaceField2D, remove_mean
from core.grid import Grid3D
from services.dynamics import FailureRecord, advect, integrating_factor, run

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SqgState:
    theta: SurfaceField2D
    t: float
    step: int

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(surface_inner_product(self.theta, self.theta)))


@dataclass
class SqgTrajectory:
    states: List[SqgState] = field(default_factory=list)
    failure: Optional[FailureRecord] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([state.t for state in self.states])

    @property
    def norms(self) -> np.ndarray:
        return np.array([state.l2_norm for state in self.states])

    @property
    def final(self) -> SqgState:
        return self.states[-1]


def _inverse_abs(grid: Grid3D) -> np.ndarray:
    """1/|k| with 0 at k = 0."""
    inverse = np.zeros(grid.spectral_shape)
    nonzero = grid.k_abs > 0
    inverse[nonzero] = 1.0 / grid.k_abs[nonzero]
    return inverse


def sqg_velocity(theta: SurfaceField2D) -> Tuple[SurfaceField2D, SurfaceField2D]:
    """
    U = grad_perp Delta^{-1/2} theta.

    Raises:
        GaugeViolationError: theta has a k = 0 component.
    """
    check_gauge(theta)
    grid = theta.grid
    stream = _inverse_abs(grid) * theta.values
    return (
        SurfaceField2D(grid, -grid.ik2 * stream),
        SurfaceField2D(grid, grid.ik1 * stream),
    )


def sqg_rhs(theta: SurfaceField2D) -> SurfaceField2D:
    """-U . grad theta, dealiased."""
    grid = theta.grid
    u, v = sqg_velocity(theta)
    return remove_mean(SurfaceField2D(grid, -advect(grid, u.physical(), v.physical(), theta.values)))


def sqg_max_speed(theta: SurfaceField2D) -> float:
    u, v = sqg_velocity(theta)
    return float(np.max(np.sqrt(u.physical() ** 2 + v.physical() ** 2)))


def sqg_step(state: SqgState, dt: float, eps: float = 0.0, cfl: float = 0.5) -> SqgState:
    """
    One Lawson RK4 step with the surface factor exp(-eps(|k| + |k|^3) dt).

    Raises:
        CFLViolationError: dt exceeds cfl * dx / max|U|.
        NumericalInstabilityError: theta is no longer finite.
    """
    grid = state.theta.grid
    speed = sqg_max_speed(state.theta)
    limit = np.inf if speed == 0 else cfl * grid.dx / speed
    if dt > limit:
        raise CFLViolationError(dt, limit)

    full = integrating_factor(grid, eps, dt)
    half = integrating_factor(grid, eps, 0.5 * dt)

    def tendency(values: np.ndarray) -> np.ndarray:
        return sqg_rhs(SurfaceField2D(grid, values)).values

    u = state.theta.values
    k1 = tendency(u)
    k2 = tendency(half * (u + 0.5 * dt * k1))
    k3 = tendency(half * u + 0.5 * dt * k2)
    k4 = tendency(full * u + dt * half * k3)
    updated = full * u + (dt / 6.0) * (full * k1 + 2.0 * half * (k2 + k3) + k4)
    if not np.all(np.isfinite(updated)):
        raise NumericalInstabilityError(f"non-finite buoyancy at t = {state.t + dt:.6g}")
    return SqgState(SurfaceField2D(grid, updated), state.t + dt, state.step + 1)


def sqg_run(
    theta0: SurfaceField2D,
    dt: float,
    final_time: float,
    eps: float = 0.0,
    cfl: float = 0.5,
    store_every: int = 1,
) -> SqgTrajectory:
    """
    Integrate the SQG equation from theta0 to final_time.

    Args:
        theta0: Initial buoyancy with zero horizontal mean.
        dt: Time step.
        final_time: Horizon; the last step is shortened to land on it.
        eps: Surface hyperviscosity.
        cfl: CFL safety factor.
        store_every: Storage interval in steps (the final state is always kept).

    Returns:
        SqgTrajectory; a failing step ends it with a FailureRecord.
    """
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    check_gauge(theta0)
    config = SolverConfig(dt=dt, final_time=final_time, eps=eps, cfl=cfl)
    n_steps = config.n_steps

    current = SqgState(theta0, 0.0, 0)
    trajectory = SqgTrajectory(states=[current])
    while current.step < n_steps:
        h = min(dt, final_time - current.step * dt)
        try:
            current = sqg_step(current, h, eps, cfl)
        except QGError as error:
            trajectory.failure = FailureRecord(type(error).__name__, str(error), current.t, current.step)
            logger.error(f"SQG run stopped at t={current.t:.6g}: {error}")
            break
        if (store_every and current.step % store_every == 0) or current.step == n_steps:
            trajectory.states.append(current)
    logger.info(f"SQG run finished at t={current.t:.6g}")
    return trajectory


def lift_harmonic(theta: SurfaceField2D) -> ScalarField3D:
    """
    Harmonic Psi with d Psi/dz(0) = theta: Psi(k, z) = -theta(k) exp(-|k| z) / |k|.

    Raises:
        GaugeViolationError: theta has a k = 0 component.
    """
    check_gauge(theta)
    grid = theta.grid
    decay = np.exp(-grid.z_nodes[:, np.newaxis, np.newaxis] * grid.k_abs[np.newaxis])
    values = -decay * (_inverse_abs(grid) * theta.values)[np.newaxis]
    return ScalarField3D(grid, values)


def surface_buoyancy(state) -> SurfaceField2D:
    """d Psi/dz at z = 0 of a lambda = 1 state, from its normal trace."""
    return -trace_gamma_nu(state.G)


def sqg_oracle(theta0: SurfaceField2D, profile: LambdaProfile, config: SolverConfig) -> Dict[str, Any]:
    """
    Compare a 3D run from lift_harmonic(theta0) with -sqg_run(-theta0).

    Args:
        theta0: Initial surface buoyancy.
        profile: Must be lambda = 1.
        config: eps, dt and final_time are shared; delta and beta must be 0.

    Returns:
        Dictionary with the sup-in-time relative L2 gap of the buoyancies,
        the harmonicity residual ||L psi(t)|| relative to its initial value
        and both trajectories.
    """
    if config.delta != 0 or config.beta != 0:
        raise InvalidParameterError("the SQG oracle needs delta = 0 and beta = 0")
    if not np.allclose(profile.at_half, 1.0):
        raise InvalidParameterError("the SQG oracle needs lambda = 1")

    three_d = run(lift_harmonic(theta0), profile, config, diagnostics_every=1)
    surface = sqg_run(-theta0, config.dt, config.final_time, eps=config.eps, cfl=config.cfl)

    gaps = []
    harmonicity = []
    for state, reference in zip(three_d.states, surface.states):
        expected = -reference.theta
        difference = surface_buoyancy(state) - expected
        scale = float(np.sqrt(surface_inner_product(expected, expected)))
        gap = float(np.sqrt(surface_inner_product(difference, difference)))
        gaps.append(gap / scale if scale > 0 else gap)
        harmonicity.append(norm_interior_L2(L_lambda_apply(state.psi, profile)))

    initial = harmonicity[0] if harmonicity else 0.0
    return {
        "buoyancy_gap": float(max(gaps)) if gaps else 0.0,
        "gaps": gaps,
        "harmonicity_initial": initial,
        "harmonicity_max": float(max(harmonicity)) if harmonicity else 0.0,
        "three_d": three_d,
        "sqg": surface,
    }


def harmonic_residual(psi: ScalarField3D, profile: LambdaProfile) -> float:
    """||L psi|| on interior nodes relative to ||psi||."""
    scale = norm_L2_3d(psi)
    residual = norm_interior_L2(L_lambda_apply(psi, profile))
    return residual / scale if scale > 0 else residual
