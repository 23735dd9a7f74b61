"""
Elliptic Module
---------------
Per-mode solves of L_lambda psi = f on [0, Z_max] with either a Dirichlet
or a Neumann (normal flux) condition at z = 0 and psi = 0 at Z_max.

The Neumann boundary row is assembled from calculus.half_cell_closure, the
same function that defines the discrete normal trace, so
trace_gamma_nu(grad_lambda(solve_neumann(g))) reproduces g to round-off.
"""

import logging
from typing import Optional

import numpy as np

from core.calculus import LambdaProfile, grad_lambda, half_cell_closure
from core.exceptions import IncompatibleMeanError, ShapeMismatchError
from core.fields import ScalarField3D, SurfaceField2D, VectorField3D
from core.grid import Grid3D
from core.tridiagonal import banded_from_diagonals, solve_per_mode

logger = logging.getLogger(__name__)

MEAN_TOLERANCE_NO_SOURCE = 1e-12
MEAN_TOLERANCE_WITH_SOURCE = 1e-6


def _interior_diagonals(grid: Grid3D, profile: LambdaProfile, k_squared: float):
    """Flux-form stencil of (lambda psi')' - |k|^2 psi on every node row."""
    n = grid.n_z + 1
    inv_dz2 = 1.0 / grid.dz ** 2
    lam = profile.at_half

    lower = np.zeros(n - 1)
    diagonal = np.zeros(n)
    upper = np.zeros(n - 1)
    # Row j couples to j-1 through lam[j-1] and to j+1 through lam[j].
    lower[:-1] = lam[:-1] * inv_dz2
    upper[1:] = lam[1:] * inv_dz2
    diagonal[1:-1] = -(lam[:-1] + lam[1:]) * inv_dz2 - k_squared
    return lower, diagonal, upper


def _check_profile(grid: Grid3D, profile: LambdaProfile) -> None:
    if profile.grid != grid:
        raise ShapeMismatchError(f"lambda profile sampled on {profile.grid!r}, field on {grid!r}")


def solve_dirichlet(
    f: ScalarField3D,
    profile: LambdaProfile,
    surface_value: Optional[SurfaceField2D] = None,
) -> ScalarField3D:
    """
    Solve L_lambda psi = f at interior nodes with psi(0) = psi(Z_max) = 0.

    Args:
        f: Source; only interior node values enter.
        profile: Stratification weight.
        surface_value: Optional nonzero value of psi at z = 0.

    Returns:
        psi on the nodes.
    """
    grid = f.grid
    _check_profile(grid, profile)

    def assemble(label: int, k_squared: float) -> np.ndarray:
        lower, diagonal, upper = _interior_diagonals(grid, profile, k_squared)
        diagonal[0] = diagonal[-1] = 1.0
        return banded_from_diagonals(lower, diagonal, upper)

    rhs = f.values.copy()
    rhs[0] = 0.0 if surface_value is None else surface_value.values
    rhs[-1] = 0.0
    return ScalarField3D(grid, solve_per_mode(grid, assemble, rhs))


def harmonic_extension(surface: SurfaceField2D, profile: LambdaProfile) -> ScalarField3D:
    """Discrete L_lambda-harmonic field with the given value at z = 0."""
    return solve_dirichlet(ScalarField3D.zeros(surface.grid), profile, surface_value=surface)


def mean_flux_imbalance(
    g: SurfaceField2D,
    f: Optional[ScalarField3D],
) -> complex:
    """
    Flux left at Z_max by the k = 0 mode of a Neumann problem.

    The half line admits no flux at infinity, so this must vanish:
    g(0) = (dz/2)(2 f_1 - f_2) + dz * sum_{j=1}^{N_z-1} f_j at k = 0.
    """
    grid = g.grid
    if f is None:
        return complex(g.values[0, 0])
    column = f.values[:, 0, 0]
    balance = half_cell_closure(0.0, 0.0, column[1], column[2], grid.dz)
    balance = balance + grid.dz * np.sum(column[1:-1])
    return complex(g.values[0, 0] - balance)


def solve_neumann(
    g: SurfaceField2D,
    profile: LambdaProfile,
    f: Optional[ScalarField3D] = None,
    strict: bool = True,
) -> ScalarField3D:
    """
    Solve L_lambda psi = f with gamma_nu(grad_lambda psi) = g and psi(Z_max) = 0.

    Args:
        g: Normal flux datum at z = 0.
        profile: Stratification weight.
        f: Optional interior source (zero when omitted).
        strict: Raise on an unbalanced k = 0 datum; otherwise log a warning
            and let the top boundary absorb the flux.

    Returns:
        psi on the nodes. With no interior source the k = 0 column is zero.

    Raises:
        IncompatibleMeanError: strict and the k = 0 flux is unbalanced.
    """
    grid = g.grid
    _check_profile(grid, profile)
    dz = grid.dz
    lam_first = profile.at_half[0]

    imbalance = mean_flux_imbalance(g, f)
    if f is None or not np.any(f.values[:, 0, 0]):
        scale = float(np.max(np.abs(g.values)))
        tolerance = MEAN_TOLERANCE_NO_SOURCE
    else:
        column = f.values[:, 0, 0]
        scale = abs(g.values[0, 0]) + dz * float(np.sum(np.abs(column[1:-1])))
        tolerance = MEAN_TOLERANCE_WITH_SOURCE
    if abs(imbalance) > tolerance * scale:
        message = f"k = 0 Neumann flux unbalanced by {abs(imbalance):.3e}"
        if strict:
            raise IncompatibleMeanError(message)
        logger.warning(f"{message}; absorbed at Z_max")

    def assemble(label: int, k_squared: float) -> np.ndarray:
        lower, diagonal, upper = _interior_diagonals(grid, profile, k_squared)
        # Boundary row: the half-cell closure is linear in (psi_0, psi_1).
        diagonal[0] = half_cell_closure(-lam_first / dz, -k_squared, 0.0, 0.0, dz)
        upper[0] = half_cell_closure(lam_first / dz, 0.0, 0.0, 0.0, dz)
        diagonal[-1] = 1.0
        return banded_from_diagonals(lower, diagonal, upper)

    rhs = np.zeros((grid.n_z + 1,) + grid.spectral_shape, dtype=complex)
    if f is not None:
        rhs[1:-1] = f.values[1:-1]
        rhs[0] = g.values - half_cell_closure(0.0, 0.0, f.values[1], f.values[2], dz)
    else:
        rhs[0] = g.values

    solution = solve_per_mode(grid, assemble, rhs)
    if f is None or not np.any(f.values[:, 0, 0]):
        solution[:, 0, 0] = 0.0
    return ScalarField3D(grid, solution)


def compute_forcing_potential(
    f_interior: ScalarField3D,
    f_surface: SurfaceField2D,
    profile: LambdaProfile,
) -> ScalarField3D:
    """F with L_lambda F = f_L and gamma_nu(grad_lambda F) = f_nu."""
    return solve_neumann(f_surface, profile, f=f_interior, strict=True)


def compute_forcing_F(
    f_interior: ScalarField3D,
    f_surface: SurfaceField2D,
    profile: LambdaProfile,
) -> VectorField3D:
    """
    Forcing field grad_lambda F of the projected equation.

    Args:
        f_interior: Interior forcing f_L.
        f_surface: Boundary forcing f_nu.
        profile: Stratification weight.

    Returns:
        grad_lambda F.

    Raises:
        IncompatibleMeanError: The k = 0 parts of f_L and f_nu do not balance.
    """
    return grad_lambda(compute_forcing_potential(f_interior, f_surface, profile), profile)

