"""
Classical Scheme
----------------
Independent integrator for the original transport form: the potential
vorticity q = L_lambda Psi is advected in the interior and the boundary
flux theta_b = gamma_nu(grad_lambda Psi) at z = 0,

    dq/dt       = -U . grad_h q - beta dPsi/dx1 + f_L
    dtheta_b/dt = -gamma_0(U) . grad_h theta_b + f_nu

with Psi recovered from (q, theta_b) by a Neumann solve at every stage. The
advecting velocity and the hyperviscous factor are the same as in the
projected scheme, so both integrators approximate one semi-discrete problem.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.settings import SolverConfig
from core.calculus import (
    LambdaProfile,
    L_lambda_apply,
    grad_lambda,
    norm_L2_3d,
    trace_gamma_nu,
)
from core.elliptic import solve_neumann
from core.exceptions import CFLViolationError, NumericalInstabilityError, QGError
from core.fields import ScalarField3D, SurfaceField2D, dealias, remove_mean
from services.dynamics import (
    FailureRecord,
    Forcing,
    RecordCallback,
    RunLedger,
    State,
    StepCallback,
    Trajectory,
    accumulate_ledger,
    advect,
    advecting_velocity,
    cfl_limit,
    integrating_factor,
    prepare_initial_potential,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassicalState:
    """Advected pair (q, theta_b) with the recovered stream function."""

    q: ScalarField3D
    theta: SurfaceField2D
    psi: ScalarField3D
    t: float
    step: int
    profile: LambdaProfile

    @property
    def grid(self):
        return self.psi.grid

    def recovery_defect(self) -> float:
        """Relative mismatch of (L psi, gamma_nu(grad_lambda psi)) against (q, theta_b)."""
        grid = self.grid
        interior = slice(1, -1)
        residual = L_lambda_apply(self.psi, self.profile).values[interior] - self.q.values[interior]
        weights = grid.node_weights[interior]
        interior_gap = float(np.sqrt(np.dot(weights, grid.spectral_pairing(residual, residual))))
        flux = trace_gamma_nu(grad_lambda(self.psi, self.profile)).values - self.theta.values
        boundary_gap = float(np.sqrt(grid.spectral_pairing(flux, flux)))
        scale = norm_L2_3d(self.q) + float(np.sqrt(grid.spectral_pairing(self.theta.values, self.theta.values)))
        gap = interior_gap + boundary_gap
        return gap / scale if scale > 0 else gap

    def to_state(self) -> State:
        """View as a projected-scheme State for shared diagnostics."""
        return State(
            G=grad_lambda(self.psi, self.profile),
            psi=self.psi,
            t=self.t,
            step=self.step,
            profile=self.profile,
        )


def recover_psi(q: ScalarField3D, theta: SurfaceField2D, profile: LambdaProfile) -> ScalarField3D:
    """Psi with L_lambda Psi = q and gamma_nu(grad_lambda Psi) = theta_b."""
    return solve_neumann(theta, profile, f=q)


def classical_state_from_psi(psi0: ScalarField3D, profile: LambdaProfile) -> ClassicalState:
    """Initial pair from the same projected potential the projected scheme starts from."""
    psi = prepare_initial_potential(psi0, profile)
    return ClassicalState(
        q=L_lambda_apply(psi, profile),
        theta=trace_gamma_nu(grad_lambda(psi, profile)),
        psi=psi,
        t=0.0,
        step=0,
        profile=profile,
    )


def classical_rhs(
    cstate: ClassicalState,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
) -> Tuple[ScalarField3D, SurfaceField2D]:
    """
    Time derivatives of q and theta_b without the hyperviscous part.

    Args:
        cstate: Current pair with its recovered stream function.
        config: Solver configuration (delta, beta).
        forcing: Optional f_L and f_nu.

    Returns:
        (dq/dt, dtheta_b/dt), dealiased and in the zero-mean gauge.
    """
    grid = cstate.grid
    u, v = advecting_velocity(cstate.psi, config.delta)

    dq = -advect(grid, u, v, cstate.q.values)
    if config.beta != 0:
        dq = dq - config.beta * grid.ik1 * cstate.psi.values
    dtheta = -advect(grid, u[0], v[0], cstate.theta.values)

    interior = ScalarField3D(grid, dq)
    surface = SurfaceField2D(grid, dtheta)
    if forcing is not None and not forcing.is_zero:
        interior = interior + dealias(forcing.interior)
        surface = surface + dealias(forcing.surface)
    return remove_mean(interior), remove_mean(surface)


def classical_step(
    cstate: ClassicalState,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
    dt: Optional[float] = None,
) -> ClassicalState:
    """
    One Lawson RK4 step of the (q, theta_b) system.

    Raises:
        CFLViolationError: dt exceeds cfl * dx / max|U|.
        NumericalInstabilityError: The new pair is not finite.
    """
    h = config.dt if dt is None else dt
    limit = cfl_limit(cstate.psi, config)
    if h > limit:
        raise CFLViolationError(h, limit)

    grid = cstate.grid
    profile = cstate.profile
    full = integrating_factor(grid, config.eps, h)
    half = integrating_factor(grid, config.eps, 0.5 * h)

    def tendency(q_values: np.ndarray, theta_values: np.ndarray):
        q = ScalarField3D(grid, q_values)
        theta = SurfaceField2D(grid, theta_values)
        stage = ClassicalState(q, theta, recover_psi(q, theta, profile), cstate.t, cstate.step, profile)
        dq, dtheta = classical_rhs(stage, config, forcing)
        return dq.values, dtheta.values

    q0, theta0 = cstate.q.values, cstate.theta.values
    kq1, kt1 = tendency(q0, theta0)
    kq2, kt2 = tendency(half * (q0 + 0.5 * h * kq1), half * (theta0 + 0.5 * h * kt1))
    kq3, kt3 = tendency(half * q0 + 0.5 * h * kq2, half * theta0 + 0.5 * h * kt2)
    kq4, kt4 = tendency(full * q0 + h * half * kq3, full * theta0 + h * half * kt3)

    q_new = full * q0 + (h / 6.0) * (full * kq1 + 2.0 * half * (kq2 + kq3) + kq4)
    theta_new = full * theta0 + (h / 6.0) * (full * kt1 + 2.0 * half * (kt2 + kt3) + kt4)
    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(theta_new))):
        raise NumericalInstabilityError(f"non-finite classical state at t = {cstate.t + h:.6g}")

    q = ScalarField3D(grid, q_new)
    theta = SurfaceField2D(grid, theta_new)
    return ClassicalState(q, theta, recover_psi(q, theta, profile), cstate.t + h, cstate.step + 1, profile)


def run_classical(
    psi0: ScalarField3D,
    profile: LambdaProfile,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
    diagnostics_every: int = 1,
    on_record: Optional[RecordCallback] = None,
    callback: Optional[StepCallback] = None,
) -> Trajectory:
    """
    Integrate the (q, theta_b) system from psi0 to config.final_time.

    Stored states are projected-scheme views so that both schemes share
    every diagnostic. Step failures end the run with a FailureRecord.
    callback receives the same view and the running ledger after every
    accepted step.
    """
    from services.diagnostics import energy_report, ledger_rates

    config.validate()
    current = classical_state_from_psi(psi0, profile)
    trajectory = Trajectory(ledger=RunLedger())

    def _emit(cstate: ClassicalState) -> None:
        view = cstate.to_state()
        trajectory.states.append(view)
        record = energy_report(view, config, ledger=trajectory.ledger)
        trajectory.records.append(record)
        if on_record is not None:
            on_record(record)

    _emit(current)
    rates = ledger_rates(current.to_state(), config)
    n_steps = config.n_steps
    logger.info(f"Classical scheme: {n_steps} steps of dt={config.dt:g}")

    while current.step < n_steps:
        h = min(config.dt, config.final_time - current.step * config.dt)
        try:
            advanced = classical_step(current, config, forcing, dt=h)
        except QGError as error:
            trajectory.failure = FailureRecord(type(error).__name__, str(error), current.t, current.step)
            logger.error(f"Classical run stopped at t={current.t:.6g}: {error}")
            break
        new_rates = ledger_rates(advanced.to_state(), config)
        accumulate_ledger(trajectory.ledger, rates, new_rates, h)
        rates = new_rates
        current = advanced
        if callback is not None:
            callback(current.to_state(), trajectory.ledger)
        if (diagnostics_every and current.step % diagnostics_every == 0) or current.step == n_steps:
            _emit(current)

    return trajectory
