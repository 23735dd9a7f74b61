"""
Dynamics Service
----------------
Time evolution of the projected (reformulated) equation

    d/dt grad_lambda Psi = -P_lambda(U_delta . grad_h grad_lambda Psi)
                           - beta P_lambda(Psi e_1) + grad_lambda F
                           - eps (|k| + |k|^3) grad_lambda Psi

with U_delta the geostrophic velocity of the horizontally mollified Psi.

Every tendency is carried as a potential: P_lambda w = grad_lambda(phi) with
phi the Hodge potential of w, so one decomposition per stage yields both the
vector tendency and the stream-function tendency. The hyperviscous symbol is
integrated exactly (Lawson RK4); after every step the state is re-projected
onto the range of grad_lambda.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from config.settings import SolverConfig
from core.calculus import (
    LambdaProfile,
    grad_lambda,
    mollify,
    nodes_to_half,
    norm_L2_3d,
)
from core.elliptic import compute_forcing_potential
from core.exceptions import CFLViolationError, NumericalInstabilityError, QGError
from core.fields import (
    ScalarField3D,
    SurfaceField2D,
    VectorField3D,
    dealias,
    remove_mean,
)
from core.grid import Grid3D
from core.hodge import decompose

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Data types
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Forcing:
    """Interior forcing f_L and boundary forcing f_nu."""

    interior: ScalarField3D
    surface: SurfaceField2D

    @classmethod
    def zero(cls, grid: Grid3D) -> "Forcing":
        return cls(ScalarField3D.zeros(grid), SurfaceField2D.zeros(grid))

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.interior.values) or np.any(self.surface.values))

    def potential(self, profile: LambdaProfile) -> Optional[ScalarField3D]:
        """
        F with L_lambda F = f_L and gamma_nu(grad_lambda F) = f_nu, or None.

        The k = 0 column is dropped: the stream function is kept in the
        zero-mean gauge.
        """
        if self.is_zero:
            return None
        potential = compute_forcing_potential(self.interior, self.surface, profile)
        if np.any(potential.values[:, 0, 0]):
            logger.warning("Forcing has a horizontal-mean part; dropped by the zero-mean gauge")
        return remove_mean(dealias(potential))


@dataclass(frozen=True)
class State:
    """
    Evolved field G = grad_lambda Psi with its cached potential.

    Attributes:
        G: The evolved vector field.
        psi: Potential with grad_lambda psi = G.
        t: Time.
        step: Steps taken since the initial state.
        profile: Stratification weight.
        reprojection_residual: Relative curl part removed by the last
            re-projection.
    """

    G: VectorField3D
    psi: ScalarField3D
    t: float
    step: int
    profile: LambdaProfile
    reprojection_residual: float = 0.0

    @property
    def grid(self) -> Grid3D:
        return self.psi.grid

    def consistency_defect(self) -> float:
        """||grad_lambda psi - G|| / ||G||."""
        scale = norm_L2_3d(self.G)
        gap = norm_L2_3d(grad_lambda(self.psi, self.profile) - self.G)
        return gap / scale if scale > 0 else gap


@dataclass(frozen=True)
class FailureRecord:
    """Why and when a run stopped early."""

    error_type: str
    message: str
    t: float
    step: int


@dataclass
class RunLedger:
    """Time integrals accumulated along a run (trapezoid rule in time)."""

    dissipation_quarter: float = 0.0
    dissipation_three_quarter: float = 0.0
    dissipation_L_lambda: float = 0.0
    g_eps_integral: float = 0.0

    def as_dict(self) -> dict:
        return {
            "dissipation_quarter": self.dissipation_quarter,
            "dissipation_three_quarter": self.dissipation_three_quarter,
            "dissipation_L_lambda": self.dissipation_L_lambda,
            "g_eps_integral": self.g_eps_integral,
        }


@dataclass
class Trajectory:
    """Stored states, diagnostics and an optional failure record."""

    states: List[State] = field(default_factory=list)
    records: list = field(default_factory=list)
    failure: Optional[FailureRecord] = None
    ledger: RunLedger = field(default_factory=RunLedger)

    @property
    def times(self) -> np.ndarray:
        return np.array([state.t for state in self.states])

    @property
    def final(self) -> State:
        return self.states[-1]

    @property
    def succeeded(self) -> bool:
        return self.failure is None


StepCallback = Callable[[State, RunLedger], None]
RecordCallback = Callable[[Any], None]


# ----------------------------------------------------------------------
# Building blocks
# ----------------------------------------------------------------------


def hyperviscous_symbol(grid: Grid3D) -> np.ndarray:
    """|k| + |k|^3."""
    return grid.k_abs + grid.k_abs ** 3


def integrating_factor(grid: Grid3D, eps: float, h: float) -> np.ndarray:
    """exp(-eps (|k| + |k|^3) h)."""
    return np.exp(-eps * hyperviscous_symbol(grid) * h)


def advecting_velocity(psi: ScalarField3D, delta: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Physical (u, v) = (-d psi/dx2, d psi/dx1) of the mollified psi, on the nodes."""
    grid = psi.grid
    smoothed = mollify(psi, delta)
    return (
        grid.to_physical(-grid.ik2 * smoothed.values),
        grid.to_physical(grid.ik1 * smoothed.values),
    )


def max_speed(psi: ScalarField3D, delta: float = 0.0) -> float:
    u, v = advecting_velocity(psi, delta)
    return float(np.max(np.sqrt(u ** 2 + v ** 2)))


def cfl_limit(psi: ScalarField3D, config: SolverConfig) -> float:
    """Largest admissible step cfl * dx / max|U|; infinite for a motionless state."""
    speed = max_speed(psi, config.delta)
    return np.inf if speed == 0 else config.cfl * psi.grid.dx / speed


def advect(grid: Grid3D, u: np.ndarray, v: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """Dealiased spectral coefficients of u d/dx1 c + v d/dx2 c."""
    d1 = grid.to_physical(grid.ik1 * coefficients)
    d2 = grid.to_physical(grid.ik2 * coefficients)
    return grid.to_spectral(u * d1 + v * d2) * grid.dealias_mask


def nonlinear_term(
    psi: ScalarField3D,
    profile: LambdaProfile,
    delta: float = 0.0,
    G: Optional[VectorField3D] = None,
) -> VectorField3D:
    """
    U . grad_h (grad_lambda psi), dealiased.

    Args:
        psi: Stream function.
        profile: Stratification weight.
        delta: Mollification length of the advecting velocity.
        G: grad_lambda psi when already available.

    Returns:
        Staggered vector field; the vertical component is advected by the
        velocity averaged onto the half-nodes.
    """
    grid = psi.grid
    if G is None:
        G = grad_lambda(psi, profile)
    u, v = advecting_velocity(psi, delta)
    return VectorField3D(
        grid,
        advect(grid, nodes_to_half(u), nodes_to_half(v), G.vertical),
        advect(grid, u, v, G.h1),
        advect(grid, u, v, G.h2),
    )


def tendency_potential(
    psi: ScalarField3D,
    profile: LambdaProfile,
    config: SolverConfig,
    forcing_potential: Optional[ScalarField3D] = None,
) -> ScalarField3D:
    """
    d psi/dt without the hyperviscous part.

    The Hodge potential of -N(psi) - beta psi e_1, plus F.
    """
    grid = psi.grid
    advection = nonlinear_term(psi, profile, config.delta)
    w = -advection
    if config.beta != 0:
        zeros = np.zeros((grid.n_z,) + grid.spectral_shape, dtype=complex)
        w = w - VectorField3D(grid, zeros, config.beta * psi.values, np.zeros_like(psi.values))
    potential = decompose(w, profile).potential
    if forcing_potential is not None:
        potential = potential + forcing_potential
    return remove_mean(potential)


def rhs_reformulated(
    state: State,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
) -> VectorField3D:
    """
    -P_lambda(N) - beta P_lambda(Psi e_1) + grad_lambda F.

    The hyperviscous term is left to the integrating factor of `step`.
    """
    forcing_potential = forcing.potential(state.profile) if forcing is not None else None
    return grad_lambda(
        tendency_potential(state.psi, state.profile, config, forcing_potential), state.profile
    )


def prepare_initial_potential(psi0: ScalarField3D, profile: LambdaProfile) -> ScalarField3D:
    """Dealiased, zero-mean potential of P_lambda(grad_lambda psi0)."""
    cleaned = remove_mean(dealias(psi0))
    return decompose(grad_lambda(cleaned, profile), profile).potential


def initial_state(psi0: ScalarField3D, profile: LambdaProfile) -> State:
    potential = prepare_initial_potential(psi0, profile)
    return State(G=grad_lambda(potential, profile), psi=potential, t=0.0, step=0, profile=profile)


# ----------------------------------------------------------------------
# Time stepping
# ----------------------------------------------------------------------


def step(
    state: State,
    config: SolverConfig,
    forcing_potential: Optional[ScalarField3D] = None,
    dt: Optional[float] = None,
) -> State:
    """
    One Lawson RK4 step with the exact factor for -eps(|k| + |k|^3).

    Args:
        state: Current state.
        config: Solver configuration.
        forcing_potential: Precomputed forcing potential F, if any.
        dt: Step length; defaults to config.dt.

    Returns:
        Re-projected state at t + dt.

    Raises:
        CFLViolationError: dt exceeds cfl * dx / max|U|.
        NumericalInstabilityError: The new state is not finite.
    """
    h = config.dt if dt is None else dt
    limit = cfl_limit(state.psi, config)
    if h > limit:
        raise CFLViolationError(h, limit)

    grid = state.grid
    profile = state.profile
    full = integrating_factor(grid, config.eps, h)
    half = integrating_factor(grid, config.eps, 0.5 * h)

    def tendency(psi_values: np.ndarray) -> np.ndarray:
        return tendency_potential(
            ScalarField3D(grid, psi_values), profile, config, forcing_potential
        ).values

    u = state.psi.values
    k1 = tendency(u)
    k2 = tendency(half * (u + 0.5 * h * k1))
    k3 = tendency(half * u + 0.5 * h * k2)
    k4 = tendency(full * u + h * half * k3)
    increment = (h / 6.0) * (full * k1 + 2.0 * half * (k2 + k3) + k4)

    predicted = state.G.map_spectral(lambda c: full * c) + grad_lambda(
        ScalarField3D(grid, increment), profile
    )
    if not predicted.is_finite():
        raise NumericalInstabilityError(f"non-finite state at t = {state.t + h:.6g}")

    projection = decompose(predicted, profile)
    scale = norm_L2_3d(predicted)
    residual = norm_L2_3d(projection.curl_part) / scale if scale > 0 else 0.0
    psi = remove_mean(projection.potential)

    return State(
        G=grad_lambda(psi, profile),
        psi=psi,
        t=state.t + h,
        step=state.step + 1,
        profile=profile,
        reprojection_residual=residual,
    )


def _step_length(config: SolverConfig, step_index: int) -> float:
    """Uniform dt except for a shortened final step landing on final_time."""
    remaining = config.final_time - step_index * config.dt
    return min(config.dt, remaining)


def integrate(
    state: State,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
    diagnostics_every: int = 1,
    ledger: Optional[RunLedger] = None,
    callback: Optional[StepCallback] = None,
    store_states: bool = True,
    emit_initial: bool = True,
    on_record: Optional[RecordCallback] = None,
) -> Trajectory:
    """
    Advance `state` to config.final_time.

    Never raises for step failures: the partial trajectory is returned with
    a FailureRecord.

    Each diagnostics record is passed to `on_record` as soon as it exists,
    before `callback` sees the step that produced it.
    """
    from services.diagnostics import energy_report, ledger_rates

    ledger = ledger if ledger is not None else RunLedger()
    trajectory = Trajectory(ledger=ledger)
    forcing_potential = forcing.potential(state.profile) if forcing is not None else None

    def _emit(current: State) -> None:
        if store_states:
            trajectory.states.append(current)
        record = energy_report(current, config, ledger=ledger, cfl_ratio=_cfl_ratio(current, config))
        trajectory.records.append(record)
        if on_record is not None:
            on_record(record)

    if emit_initial:
        _emit(state)

    rates = ledger_rates(state, config)
    n_steps = config.n_steps
    logger.info(f"Integrating from step {state.step} to {n_steps} (dt={config.dt:g}, eps={config.eps:g}, delta={config.delta:g})")

    current = state
    while current.step < n_steps:
        h = _step_length(config, current.step)
        try:
            advanced = step(current, config, forcing_potential, dt=h)
        except QGError as error:
            trajectory.failure = FailureRecord(type(error).__name__, str(error), current.t, current.step)
            logger.error(f"Run stopped at t={current.t:.6g}: {error}")
            break

        new_rates = ledger_rates(advanced, config)
        accumulate_ledger(ledger, rates, new_rates, h)
        rates = new_rates
        current = advanced

        if (diagnostics_every and current.step % diagnostics_every == 0) or current.step == n_steps:
            _emit(current)
        if callback is not None:
            callback(current, ledger)
        logger.debug(f"step {current.step}: t={current.t:.6g}, reprojection={current.reprojection_residual:.2e}")

    if store_states and trajectory.states and trajectory.states[-1] is not current:
        trajectory.states.append(current)
    logger.info(f"Run finished at t={current.t:.6g} ({'ok' if trajectory.succeeded else 'failed'})")
    return trajectory


def accumulate_ledger(
    ledger: RunLedger, before: Dict[str, float], after: Dict[str, float], h: float
) -> None:
    """Trapezoid update of the ledger over one step of length h."""
    ledger.dissipation_quarter += 0.5 * h * (before["quarter"] + after["quarter"])
    ledger.dissipation_three_quarter += 0.5 * h * (before["three_quarter"] + after["three_quarter"])
    ledger.dissipation_L_lambda += 0.5 * h * (before["L_lambda"] + after["L_lambda"])
    ledger.g_eps_integral += 0.5 * h * (before["g_eps"] + after["g_eps"])


def _cfl_ratio(state: State, config: SolverConfig) -> float:
    """dt / (dx / max|U|), zero for a motionless state."""
    speed = max_speed(state.psi, config.delta)
    return config.dt * speed / state.grid.dx


def run(
    psi0: ScalarField3D,
    profile: LambdaProfile,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
    diagnostics_every: int = 1,
    callback: Optional[StepCallback] = None,
    store_states: bool = True,
    on_record: Optional[RecordCallback] = None,
) -> Trajectory:
    """
    Integrate the projected equation from psi0 to config.final_time.

    Args:
        psi0: Initial stream function; its k = 0 column and aliased modes
            are discarded.
        profile: Stratification weight.
        config: Solver configuration.
        forcing: Optional forcing.
        diagnostics_every: Record interval in steps (0 records only the ends).
        callback: Invoked after every accepted step.
        store_states: Keep the states at record times.
        on_record: Invoked with every diagnostics record as it is produced.

    Returns:
        Trajectory with states, diagnostics records and a failure record when
        a step failed.
    """
    config.validate()
    return integrate(
        initial_state(psi0, profile),
        config,
        forcing=forcing,
        diagnostics_every=diagnostics_every,
        callback=callback,
        store_states=store_states,
        on_record=on_record,
    )


def resume(
    state: State,
    ledger: RunLedger,
    config: SolverConfig,
    forcing: Optional[Forcing] = None,
    diagnostics_every: int = 1,
    callback: Optional[StepCallback] = None,
    store_states: bool = True,
    on_record: Optional[RecordCallback] = None,
) -> Trajectory:
    """Continue a run from a restored state and ledger."""
    config.validate()
    return integrate(
        replace(state),
        config,
        forcing=forcing,
        diagnostics_every=diagnostics_every,
        ledger=ledger,
        callback=callback,
        store_states=store_states,
        emit_initial=False,
        on_record=on_record,
    )
