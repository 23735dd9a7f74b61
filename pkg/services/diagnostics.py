"""
Diagnostics Service
-------------------
Norm records, energy and dissipation ledgers, a priori and Groenwall
checks, and the equivalence report of the projected formulation.

Report-only functions return InequalityRecord values or plain dictionaries;
none of them raises on a failed bound. Tests and the `check` command decide
what ratio is acceptable.
"""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from config.settings import SolverConfig
from core.calculus import (
    L_lambda_apply,
    div,
    fractional_horizontal,
    fractional_multiplier,
    grad_lambda,
    half_to_nodes,
    inner_product,
    norm_fractional_3d,
    norm_fractional_surface,
    norm_interior_L2,
    norm_L2_3d,
    norm_Lp_3d,
    norm_mixed,
    norm_sup_z_L2,
    norm_surface_Lp,
    trace_gamma_nu,
)
from core.fields import ScalarField3D, VectorField3D, random_scalar_field
from core.inequalities import InequalityRecord
from services.dynamics import Forcing, advecting_velocity, nonlinear_term

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the diagnostics CSV; field order is the column order."""

    t: float
    step: int
    norm_grad_lambda_L2: float
    norm_grad_L2: float
    norm_L_lambda_L2: float
    norm_gamma_nu_L2: float
    norm_grad_L3: float
    norm_grad_L4_L83: float
    norm_grad_Linf_L2: float
    dissipation_quarter: float
    dissipation_three_quarter: float
    dissipation_L_lambda: float
    g_eps: float
    g_eps_integral: float
    cfl_ratio: float
    reprojection_residual: float

    @classmethod
    def field_names(cls) -> List[str]:
        return [item.name for item in fields(cls)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def is_finite(self) -> bool:
        return all(np.isfinite(value) for value in asdict(self).values())


# ----------------------------------------------------------------------
# Per-state quantities
# ----------------------------------------------------------------------


def _surface_L2(surface) -> float:
    return norm_fractional_surface(surface, 0.0)


def g_eps(state, eps: float) -> float:
    """
    Groenwall weight (2/eps + 2)||Delta^{3/4} grad psi||^2 + ||gamma_nu(Delta^{3/4} G)||^2.

    Zero when eps = 0.
    """
    if eps <= 0:
        return 0.0
    gradient = fractional_horizontal(grad_lambda(state.psi), 0.75)
    surface = norm_fractional_surface(trace_gamma_nu(state.G), 1.5)
    return (2.0 / eps + 2.0) * norm_L2_3d(gradient) ** 2 + surface ** 2


def ledger_rates(state, config: SolverConfig) -> Dict[str, float]:
    """Instantaneous integrands of the run ledger."""
    eps = config.eps
    if eps <= 0:
        return {"quarter": 0.0, "three_quarter": 0.0, "L_lambda": 0.0, "g_eps": 0.0}
    potential_vorticity = L_lambda_apply(state.psi, state.profile)
    return {
        "quarter": eps * norm_fractional_3d(state.G, 0.5) ** 2,
        "three_quarter": eps * norm_fractional_3d(state.G, 1.5) ** 2,
        "L_lambda": eps
        * (
            norm_interior_L2(potential_vorticity, 0.5) ** 2
            + norm_interior_L2(potential_vorticity, 1.5) ** 2
        ),
        "g_eps": g_eps(state, eps),
    }


def energy_report(
    state,
    config: SolverConfig,
    ledger=None,
    cfl_ratio: float = 0.0,
) -> DiagnosticsRecord:
    """
    Evaluate every recorded norm of one state.

    Args:
        state: dynamics.State.
        config: Solver configuration (eps enters G_eps).
        ledger: Accumulated time integrals, zero when omitted.
        cfl_ratio: dt over the current CFL limit.

    Returns:
        DiagnosticsRecord for the state.
    """
    gradient = grad_lambda(state.psi)
    accumulated = ledger.as_dict() if ledger is not None else {}
    return DiagnosticsRecord(
        t=float(state.t),
        step=int(state.step),
        norm_grad_lambda_L2=norm_L2_3d(state.G),
        norm_grad_L2=norm_L2_3d(gradient),
        norm_L_lambda_L2=norm_interior_L2(L_lambda_apply(state.psi, state.profile)),
        norm_gamma_nu_L2=_surface_L2(trace_gamma_nu(state.G)),
        norm_grad_L3=norm_Lp_3d(gradient, 3.0),
        norm_grad_L4_L83=norm_mixed(gradient, 4.0, 8.0 / 3.0),
        norm_grad_Linf_L2=norm_sup_z_L2(gradient),
        dissipation_quarter=accumulated.get("dissipation_quarter", 0.0),
        dissipation_three_quarter=accumulated.get("dissipation_three_quarter", 0.0),
        dissipation_L_lambda=accumulated.get("dissipation_L_lambda", 0.0),
        g_eps=g_eps(state, config.eps),
        g_eps_integral=accumulated.get("g_eps_integral", 0.0),
        cfl_ratio=float(cfl_ratio),
        reprojection_residual=float(state.reprojection_residual),
    )


def energy_inequality(records: Sequence[DiagnosticsRecord]) -> InequalityRecord:
    """
    ||G(t)||^2 + 2 eps int (||Delta^{1/4} G||^2 + ||Delta^{3/4} G||^2) against ||G(0)||^2.

    Evaluated at the last record.
    """
    first, last = records[0], records[-1]
    lhs = last.norm_grad_lambda_L2 ** 2 + 2.0 * (
        last.dissipation_quarter + last.dissipation_three_quarter
    )
    return InequalityRecord.measure("energy", lhs, first.norm_grad_lambda_L2 ** 2)


def relative_drift(records: Sequence[DiagnosticsRecord], name: str) -> float:
    """Largest |q(t) - q(0)| / q(0) of one recorded norm."""
    values = np.array([getattr(record, name) for record in records])
    if values[0] == 0:
        return float(np.max(np.abs(values)))
    return float(np.max(np.abs(values - values[0])) / values[0])


# ----------------------------------------------------------------------
# A priori estimates
# ----------------------------------------------------------------------


def _vector_L2_H_half(u: VectorField3D) -> float:
    """L2 in z of the inhomogeneous H^{1/2} norm in x, componentwise."""
    grid = u.grid
    weight = (1.0 + grid.k_squared) ** 0.25
    vertical = grid.dz * np.sum(grid.spectral_pairing(weight * u.vertical, weight * u.vertical))
    horizontal = grid.spectral_pairing(weight * u.h1, weight * u.h1) + grid.spectral_pairing(
        weight * u.h2, weight * u.h2
    )
    return float(np.sqrt(vertical + np.dot(grid.node_weights, horizontal)))


def _surface_trace_L2(u: VectorField3D) -> float:
    """||gamma_0 u||_{L2} with the vertical component extrapolated to z = 0."""
    grid = u.grid
    vertical = half_to_nodes(u.vertical)[0]
    total = sum(
        grid.spectral_pairing(component, component)
        for component in (vertical, u.h1[0], u.h2[0])
    )
    return float(np.sqrt(total))


def apriori_check(state) -> Dict[str, InequalityRecord]:
    """
    Both sides of the two a priori estimates for grad_lambda psi.

    The shared right side is ||gamma_nu G|| + ||L_lambda psi|| + ||G||. The
    first left side adds the L2(H^{1/2}) norm, the trace at z = 0 and the sup
    in z of the horizontal L2 norm; the second adds the L3 and L4(L^{8/3})
    norms.
    """
    G = state.G
    rhs = (
        _surface_L2(trace_gamma_nu(G))
        + norm_interior_L2(L_lambda_apply(state.psi, state.profile))
        + norm_L2_3d(G)
    )
    regularity = _vector_L2_H_half(G) + _surface_trace_L2(G) + norm_sup_z_L2(G)
    integrability = norm_Lp_3d(G, 3.0) + norm_mixed(G, 4.0, 8.0 / 3.0)
    return {
        "regularity": InequalityRecord.measure("apriori_regularity", regularity, rhs),
        "integrability": InequalityRecord.measure("apriori_integrability", integrability, rhs),
    }


# ----------------------------------------------------------------------
# Equivalence of the projected form
# ----------------------------------------------------------------------


def _advecting_products(grid, velocity, coefficients):
    """Spectral coefficients of U . grad_h phi at every level."""
    u, v = velocity
    d1 = grid.to_physical(grid.ik1 * coefficients)
    d2 = grid.to_physical(grid.ik2 * coefficients)
    return grid.to_spectral(u * d1 + v * d2)


def integration_by_parts_sides(state, phi: ScalarField3D) -> Dict[str, float]:
    """
    Both sides of <grad phi, U . grad_h G> = int (grad_h phi . U) L psi - boundary.

    The boundary term is the surface integral of
    (grad_h phi(0) . U(0)) gamma_nu(G). phi must vanish at Z_max.
    """
    grid = state.grid
    advection = nonlinear_term(state.psi, state.profile, 0.0, state.G)
    lhs = inner_product(grad_lambda(phi), advection)

    velocity = advecting_velocity(state.psi)
    transport = _advecting_products(grid, velocity, phi.values)
    potential_vorticity = L_lambda_apply(state.psi, state.profile)
    interior = float(np.dot(grid.node_weights, grid.spectral_pairing(transport, potential_vorticity.values)))
    boundary = float(grid.spectral_pairing(transport[0], trace_gamma_nu(state.G).values))
    return {"lhs": lhs, "interior": interior, "boundary": boundary, "rhs": interior - boundary}


def nonlinear_flux_bound(state) -> InequalityRecord:
    """
    ||U (x) G||_{L2(H^{-1/2} dot)} against (||L psi|| + ||gamma_nu G|| + ||G||)^2.

    The k = 0 coefficients of the products are dropped from the homogeneous
    negative norm.
    """
    grid = state.grid
    u, v = advecting_velocity(state.psi)
    G = state.G
    components = (
        grid.to_physical(half_to_nodes(G.vertical)),
        grid.to_physical(G.h1),
        grid.to_physical(G.h2),
    )
    weight = fractional_multiplier(grid, -0.25)
    total = 0.0
    for velocity in (u, v):
        for component in components:
            product = weight * grid.to_spectral(velocity * component)
            total += float(np.dot(grid.node_weights, grid.spectral_pairing(product, product)))
    rhs = (
        norm_interior_L2(L_lambda_apply(state.psi, state.profile))
        + _surface_L2(trace_gamma_nu(G))
        + norm_L2_3d(G)
    ) ** 2
    return InequalityRecord.measure("nonlinear_flux", float(np.sqrt(total)), rhs)


def equivalence_check(trajectory, seed: int = 0, max_mode: int = 2) -> Dict[str, Any]:
    """
    Integration-by-parts identity and nonlinear flux bound on stored states.

    Args:
        trajectory: dynamics.Trajectory with stored states.
        seed: Seed of the test function.
        max_mode: Horizontal band of the test function.

    Returns:
        Dictionary with the largest relative identity gap, the per-state
        sides and the sup-in-time nonlinear flux record.
    """
    states = trajectory.states
    if not states:
        return {"identity_gap": 0.0, "sides": [], "nonlinear_flux": InequalityRecord.measure("nonlinear_flux", 0.0, 0.0)}

    phi = random_scalar_field(states[0].grid, seed, max_mode=max_mode, zero_mean=True, vanish_top=True)
    sides = [integration_by_parts_sides(state, phi) for state in states]
    gaps = []
    for entry in sides:
        scale = max(abs(entry["lhs"]), abs(entry["interior"]), abs(entry["boundary"]))
        gaps.append(abs(entry["lhs"] - entry["rhs"]) / scale if scale > 0 else 0.0)

    bounds = [nonlinear_flux_bound(state) for state in states]
    flux = InequalityRecord.measure(
        "nonlinear_flux",
        max(record.lhs for record in bounds),
        max(record.rhs for record in bounds),
    )
    return {"identity_gap": float(max(gaps)), "sides": sides, "nonlinear_flux": flux}


def divergence_identity_residual(state) -> float:
    """
    ||div(U . grad_h G) - U . grad_h(L psi)|| / ||U . grad_h (L psi)|| on interior nodes.

    Both sides use the undealiased products, so only the vertical
    averaging of the advecting velocity separates them.
    """
    grid = state.grid
    velocity = advecting_velocity(state.psi)
    lhs = div(nonlinear_term(state.psi, state.profile, 0.0, state.G)).values
    rhs = _advecting_products(grid, velocity, L_lambda_apply(state.psi, state.profile).values)
    rhs = rhs * grid.dealias_mask
    interior = slice(1, -1)
    gap = ScalarField3D(grid, np.zeros_like(lhs))
    gap.values[interior] = lhs[interior] - rhs[interior]
    reference = ScalarField3D(grid, np.zeros_like(lhs))
    reference.values[interior] = rhs[interior]
    scale = norm_L2_3d(reference)
    return norm_L2_3d(gap) / scale if scale > 0 else norm_L2_3d(gap)


# ----------------------------------------------------------------------
# Time-integrated monitors
# ----------------------------------------------------------------------


def gronwall_monitor(records: Sequence[DiagnosticsRecord], tolerance: float = 1e-6) -> Dict[str, Any]:
    """
    Check ||L psi(t)||^2 <= (||L psi(0)||^2 + 1) exp(int_0^t G_eps) - 1.

    Args:
        records: Diagnostics of one run, in time order.
        tolerance: Relative slack on the bound.

    Returns:
        Dictionary with the G_eps series, its running integral, the bound,
        the L1(0, T) total and whether the bound held at every record.
    """
    times = np.array([record.t for record in records])
    weights = np.array([record.g_eps for record in records])
    if not np.any(weights):
        logger.warning("G_eps vanishes along the run (eps = 0); the bound reduces to monotonicity")
    running = (
        cumulative_trapezoid(weights, times, initial=0.0) if len(times) > 1 else np.zeros_like(times)
    )
    squared = np.array([record.norm_L_lambda_L2 ** 2 for record in records])
    bound = (squared[0] + 1.0) * np.exp(running) - 1.0
    slack = tolerance * np.maximum(bound, 1.0)
    ratio = np.divide(squared, bound, out=np.zeros_like(squared), where=bound > 0)
    return {
        "times": times,
        "g_eps": weights,
        "running_integral": running,
        "integral": float(running[-1]) if len(running) else 0.0,
        "bound": bound,
        "norm_L_lambda_squared": squared,
        "max_ratio": float(ratio.max()) if len(ratio) else 0.0,
        "holds": bool(np.all(squared <= bound + slack)),
    }


def global_bound_report(
    records: Sequence[DiagnosticsRecord],
    forcing: Optional[Forcing] = None,
) -> InequalityRecord:
    """
    Sup in time of the six solution norms against data and forcing norms.

    Forcing is constant in time, so its L1(0, T) norms are T times the
    instantaneous norms.
    """
    first = records[0]
    horizon = records[-1].t - first.t
    lhs = max(
        record.norm_L_lambda_L2
        + record.norm_grad_L2
        + record.norm_gamma_nu_L2
        + record.norm_grad_L3
        + record.norm_grad_L4_L83
        + record.norm_grad_Linf_L2
        for record in records
    )
    rhs = first.norm_grad_L2 + first.norm_L_lambda_L2 + first.norm_gamma_nu_L2
    if forcing is not None and not forcing.is_zero:
        rhs += horizon * (
            norm_L2_3d(forcing.interior)
            + norm_Lp_3d(forcing.interior, 6.0 / 5.0)
            + _surface_L2(forcing.surface)
            + norm_surface_Lp(forcing.surface, 4.0 / 3.0)
        )
    return InequalityRecord.measure("existence_bound", lhs, rhs)


def time_derivative_dual_norms(trajectory) -> Dict[str, Any]:
    """
    ||d psi/dt||_{L2(H^{-3/2})} on stored states, homogeneous and inhomogeneous.

    Forward differences between consecutive stored states, reported at the
    interval midpoints together with their sup in time.
    """
    states = trajectory.states
    if len(states) < 2:
        return {"times": np.array([]), "homogeneous": np.array([]), "inhomogeneous": np.array([]),
                "sup_homogeneous": 0.0, "sup_inhomogeneous": 0.0}

    grid = states[0].grid
    inhomogeneous_weight = (1.0 + grid.k_squared) ** -0.75
    times, homogeneous, inhomogeneous = [], [], []
    for before, after in zip(states[:-1], states[1:]):
        rate = (after.psi - before.psi) * (1.0 / (after.t - before.t))
        times.append(0.5 * (before.t + after.t))
        homogeneous.append(norm_fractional_3d(rate, -1.5))
        inhomogeneous.append(norm_L2_3d(rate.map_spectral(lambda c: inhomogeneous_weight * c)))
    return {
        "times": np.array(times),
        "homogeneous": np.array(homogeneous),
        "inhomogeneous": np.array(inhomogeneous),
        "sup_homogeneous": float(max(homogeneous)),
        "sup_inhomogeneous": float(max(inhomogeneous)),
    }
