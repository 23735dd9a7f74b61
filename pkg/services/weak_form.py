"""
Weak Form Service
-----------------
Residuals of the space-time weak formulation on stored trajectories.

Interior, for a test function phi(t, z, x) with phi(T) = 0:

    - int_0^T int (d_t phi + U . grad_h phi) q + beta int_0^T int phi dPsi/dx1
    - int_0^T int f_L phi - int phi(0) q(0) = 0,      q = L_lambda Psi

Boundary, for phi_b(t, x):

    - int_0^T int (d_t phi_b + gamma_0(U) . grad_h phi_b) theta_b
    - int_0^T int f_nu phi_b - int phi_b(0) theta_b(0) = 0

The beta term is the periodic rewriting of advecting beta x2. Integrals use
collocation in x, the trapezoid rule in z and in t.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.calculus import L_lambda_apply, trace_gamma_nu
from core.grid import Grid3D
from services.dynamics import Forcing, advecting_velocity

logger = logging.getLogger(__name__)

BATTERY_SIZE = 8
RESOLUTION_FACTOR = 4


def _bump(s: np.ndarray, center: float, width: float) -> Tuple[np.ndarray, np.ndarray]:
    """exp(-1/(1 - r^2)) with r = (s - center)/width, and its derivative."""
    r = (np.asarray(s, dtype=float) - center) / width
    inside = np.abs(r) < 1.0
    value = np.zeros_like(r)
    slope = np.zeros_like(r)
    gap = 1.0 - r[inside] ** 2
    value[inside] = np.exp(-1.0 / gap)
    slope[inside] = value[inside] * (-2.0 * r[inside] / (width * gap ** 2))
    return value, slope


def _periodic_offset(s: np.ndarray, center: float, period: float) -> np.ndarray:
    """Signed distance from center on a circle of the given period."""
    return (s - center + 0.5 * period) % period - 0.5 * period


@dataclass(frozen=True)
class BumpTestFunction:
    """Separable product of one-dimensional bumps in t, z, x1 and x2."""

    t_width: float
    z_center: float
    z_width: float
    x1_center: float
    x1_width: float
    x2_center: float
    x2_width: float
    amplitude: float = 1.0

    def time(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Factor centred at t = 0, so phi(0) != 0 and phi(T) = 0."""
        value, slope = _bump(t, 0.0, self.t_width)
        return self.amplitude * value, self.amplitude * slope

    def vertical(self, z: np.ndarray) -> np.ndarray:
        return _bump(z, self.z_center, self.z_width)[0]

    def horizontal(self, grid: Grid3D) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Values and x1, x2 derivatives on the collocation points, shape (N_y, N_x)."""
        f1, d1 = _bump(_periodic_offset(grid.x1, self.x1_center, grid.period), 0.0, self.x1_width)
        f2, d2 = _bump(_periodic_offset(grid.x2, self.x2_center, grid.period), 0.0, self.x2_width)
        return f1 * f2, d1 * f2, f1 * d2

    def under_resolved(self, grid: Grid3D, dt: float) -> bool:
        """True when a bump spans fewer than RESOLUTION_FACTOR cells."""
        cells = (
            self.t_width / dt,
            self.z_width / grid.dz,
            self.x1_width / grid.dx,
            self.x2_width / grid.dx,
        )
        return min(cells) < RESOLUTION_FACTOR


def test_function_battery(
    grid: Grid3D,
    final_time: float,
    count: int = BATTERY_SIZE,
    seed: int = 0,
) -> List[BumpTestFunction]:
    """
    Seeded bumps with randomized centres and widths.

    Time widths lie in [0.5 T, 0.9 T]; vertical supports stay below Z_max / 2;
    horizontal widths lie between a quarter and half of the period.
    """
    rng = np.random.default_rng(seed)
    period = grid.period
    battery = []
    for _ in range(count):
        battery.append(
            BumpTestFunction(
                t_width=float(rng.uniform(0.5, 0.9) * final_time),
                z_center=float(rng.uniform(0.0, 0.25) * grid.z_max),
                z_width=float(rng.uniform(0.1, 0.25) * grid.z_max),
                x1_center=float(rng.uniform(0.0, period)),
                x1_width=float(rng.uniform(0.25, 0.5) * period),
                x2_center=float(rng.uniform(0.0, period)),
                x2_width=float(rng.uniform(0.25, 0.5) * period),
            )
        )
    return battery


def _time_weights(times: np.ndarray) -> np.ndarray:
    """Trapezoid weights on possibly non-uniform times."""
    weights = np.zeros_like(times)
    steps = np.diff(times)
    weights[:-1] += 0.5 * steps
    weights[1:] += 0.5 * steps
    return weights


def _warn_resolution(battery: Sequence[BumpTestFunction], grid: Grid3D, times: np.ndarray) -> None:
    dt = float(np.max(np.diff(times))) if len(times) > 1 else np.inf
    coarse = [index for index, phi in enumerate(battery) if phi.under_resolved(grid, dt)]
    if coarse:
        logger.warning(f"Weak-form quadrature under-resolved for test functions {coarse}")


def _row(index: int, terms: Dict[str, float]) -> Dict[str, Any]:
    residual = sum(terms.values())
    scale = sum(abs(value) for value in terms.values())
    return {
        "index": index,
        "residual": residual,
        "scale": scale,
        "relative": abs(residual) / scale if scale > 0 else 0.0,
        **terms,
    }


def weak_residual_interior(
    trajectory,
    battery: Sequence[BumpTestFunction],
    beta: float = 0.0,
    delta: float = 0.0,
    forcing: Optional[Forcing] = None,
) -> List[Dict[str, Any]]:
    """
    Interior weak-form residual for every test function.

    Args:
        trajectory: Trajectory stored densely in time, starting at t = 0.
        battery: Test functions.
        beta: Beta-plane coefficient of the run.
        delta: Mollification length of the run's advecting velocity.
        forcing: The run's forcing, if any.

    Returns:
        One row per test function with the individual terms, the residual
        and the residual relative to the sum of term magnitudes.
    """
    states = trajectory.states
    grid = states[0].grid
    times = np.array([state.t for state in states])
    _warn_resolution(battery, grid, times)
    weights = _time_weights(times)
    cell = grid.area / (grid.n_x * grid.n_y)
    z_weights = grid.node_weights

    fields = []
    for state in states:
        q = L_lambda_apply(state.psi, state.profile).physical()
        u, v = advecting_velocity(state.psi, delta)
        d1 = grid.to_physical(grid.ik1 * state.psi.values)
        fields.append((q, u, v, d1))
    source = forcing.interior.physical() if forcing is not None and not forcing.is_zero else None

    rows = []
    for index, phi in enumerate(battery):
        profile_t, slope_t = phi.time(times)
        profile_z = phi.vertical(grid.z_nodes)
        value_x, d1_x, d2_x = phi.horizontal(grid)

        def integrate(levels: np.ndarray) -> float:
            """int over z and x of profile_z(z) times a (level, y, x) array."""
            return float(cell * np.dot(z_weights * profile_z, levels.sum(axis=(-2, -1))))

        transport = 0.0
        beta_term = 0.0
        forcing_term = 0.0
        for weight, pt, st, (q, u, v, d1) in zip(weights, profile_t, slope_t, fields):
            if weight == 0.0 or (pt == 0.0 and st == 0.0):
                continue
            advective = u * d1_x + v * d2_x
            transport += weight * integrate((st * value_x + pt * advective) * q)
            if beta != 0:
                beta_term += weight * beta * pt * integrate(value_x * d1)
            if source is not None:
                forcing_term += weight * pt * integrate(value_x * source)

        initial = profile_t[0] * integrate(value_x * fields[0][0])
        rows.append(
            _row(index, {"transport": -transport, "beta": beta_term, "forcing": -forcing_term, "initial": -initial})
        )
    return rows


def weak_residual_boundary(
    trajectory,
    battery: Sequence[BumpTestFunction],
    delta: float = 0.0,
    forcing: Optional[Forcing] = None,
) -> List[Dict[str, Any]]:
    """
    Boundary weak-form residual; only the t, x1 and x2 factors of each test function enter.
    """
    states = trajectory.states
    grid = states[0].grid
    times = np.array([state.t for state in states])
    _warn_resolution(battery, grid, times)
    weights = _time_weights(times)
    cell = grid.area / (grid.n_x * grid.n_y)

    fields = []
    for state in states:
        theta = trace_gamma_nu(state.G).physical()
        u, v = advecting_velocity(state.psi, delta)
        fields.append((theta, u[0], v[0]))
    source = forcing.surface.physical() if forcing is not None and not forcing.is_zero else None

    rows = []
    for index, phi in enumerate(battery):
        profile_t, slope_t = phi.time(times)
        value_x, d1_x, d2_x = phi.horizontal(grid)

        transport = 0.0
        forcing_term = 0.0
        for weight, pt, st, (theta, u, v) in zip(weights, profile_t, slope_t, fields):
            if weight == 0.0 or (pt == 0.0 and st == 0.0):
                continue
            advective = u * d1_x + v * d2_x
            transport += weight * cell * float(np.sum((st * value_x + pt * advective) * theta))
            if source is not None:
                forcing_term += weight * pt * cell * float(np.sum(value_x * source))

        initial = profile_t[0] * cell * float(np.sum(value_x * fields[0][0]))
        rows.append(_row(index, {"transport": -transport, "forcing": -forcing_term, "initial": -initial}))
    return rows


def residual_summary(rows: Sequence[Dict[str, Any]]) -> Dict[str, float]:
    """Largest absolute and relative residual of a table."""
    if not rows:
        return {"max_residual": 0.0, "max_relative": 0.0}
    return {
        "max_residual": float(max(abs(row["residual"]) for row in rows)),
        "max_relative": float(max(row["relative"] for row in rows)),
    }
