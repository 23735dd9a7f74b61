"""
Field Containers Module
-----------------------
Scalar, vector and surface fields stored spectrally in the horizontal and
on grid levels in the vertical.

Vector fields follow the (vertical, horizontal-1, horizontal-2) component
order. The vertical component lives on the N_z half-nodes, the horizontal
components on the N_z + 1 integer nodes.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from core.exceptions import ShapeMismatchError
from core.grid import Grid3D

logger = logging.getLogger(__name__)

Number = Union[int, float, complex]
SpectralMap = Callable[[np.ndarray], np.ndarray]


def _check_shape(values: np.ndarray, expected: tuple, label: str) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if values.shape != expected:
        raise ShapeMismatchError(f"{label}: expected shape {expected}, got {values.shape}")
    return values


@dataclass(frozen=True, eq=False)
class SurfaceField2D:
    """Horizontal-spectral coefficients on one horizontal plane."""

    grid: Grid3D
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _check_shape(self.values, self.grid.spectral_shape, "surface")
        )

    @classmethod
    def zeros(cls, grid: Grid3D) -> "SurfaceField2D":
        return cls(grid, np.zeros(grid.spectral_shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid3D, values: np.ndarray) -> "SurfaceField2D":
        return cls(grid, grid.to_spectral(values))

    def physical(self) -> np.ndarray:
        return self.grid.to_physical(self.values)

    def map_spectral(self, operation: SpectralMap) -> "SurfaceField2D":
        return SurfaceField2D(self.grid, operation(self.values))

    @property
    def mean_coefficient(self) -> complex:
        """Coefficient of the k = 0 mode."""
        return complex(self.values[0, 0])

    def __add__(self, other: "SurfaceField2D") -> "SurfaceField2D":
        return SurfaceField2D(self.grid, self.values + other.values)

    def __sub__(self, other: "SurfaceField2D") -> "SurfaceField2D":
        return SurfaceField2D(self.grid, self.values - other.values)

    def __mul__(self, scalar: Number) -> "SurfaceField2D":
        return SurfaceField2D(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SurfaceField2D":
        return SurfaceField2D(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class ScalarField3D:
    """Scalar field on the integer nodes z_j = j*dz, j = 0..N_z."""

    grid: Grid3D
    values: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.grid.n_z + 1,) + self.grid.spectral_shape
        object.__setattr__(self, "values", _check_shape(self.values, expected, "scalar"))

    @classmethod
    def zeros(cls, grid: Grid3D) -> "ScalarField3D":
        return cls(grid, np.zeros((grid.n_z + 1,) + grid.spectral_shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid3D, values: np.ndarray) -> "ScalarField3D":
        return to_spectral(grid, values)

    def physical(self) -> np.ndarray:
        return to_physical(self)

    def map_spectral(self, operation: SpectralMap) -> "ScalarField3D":
        return ScalarField3D(self.grid, operation(self.values))

    def level(self, index: int) -> SurfaceField2D:
        """Horizontal slice at node `index`."""
        return SurfaceField2D(self.grid, self.values[index])

    @property
    def mean_profile(self) -> np.ndarray:
        """k = 0 coefficient at every level."""
        return self.values[:, 0, 0]

    def __add__(self, other: "ScalarField3D") -> "ScalarField3D":
        return ScalarField3D(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField3D") -> "ScalarField3D":
        return ScalarField3D(self.grid, self.values - other.values)

    def __mul__(self, scalar: Number) -> "ScalarField3D":
        return ScalarField3D(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField3D":
        return ScalarField3D(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField3D:
    """
    Staggered vector field.

    Attributes:
        vertical: First component, on half-nodes, shape (N_z, N_y, N_x//2+1).
        h1: x1 component on nodes, shape (N_z+1, N_y, N_x//2+1).
        h2: x2 component on nodes, same shape as h1.
    """

    grid: Grid3D
    vertical: np.ndarray
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self) -> None:
        nodes = (self.grid.n_z + 1,) + self.grid.spectral_shape
        halves = (self.grid.n_z,) + self.grid.spectral_shape
        object.__setattr__(self, "vertical", _check_shape(self.vertical, halves, "vertical"))
        object.__setattr__(self, "h1", _check_shape(self.h1, nodes, "horizontal-1"))
        object.__setattr__(self, "h2", _check_shape(self.h2, nodes, "horizontal-2"))

    @classmethod
    def zeros(cls, grid: Grid3D) -> "VectorField3D":
        nodes = (grid.n_z + 1,) + grid.spectral_shape
        halves = (grid.n_z,) + grid.spectral_shape
        return cls(
            grid,
            np.zeros(halves, dtype=complex),
            np.zeros(nodes, dtype=complex),
            np.zeros(nodes, dtype=complex),
        )

    @classmethod
    def from_physical(
        cls,
        grid: Grid3D,
        vertical: np.ndarray,
        h1: np.ndarray,
        h2: np.ndarray,
    ) -> "VectorField3D":
        return cls(grid, grid.to_spectral(vertical), grid.to_spectral(h1), grid.to_spectral(h2))

    def physical(self) -> tuple:
        """Collocation values of (vertical, h1, h2)."""
        return (
            self.grid.to_physical(self.vertical),
            self.grid.to_physical(self.h1),
            self.grid.to_physical(self.h2),
        )

    def map_spectral(self, operation: SpectralMap) -> "VectorField3D":
        return VectorField3D(
            self.grid, operation(self.vertical), operation(self.h1), operation(self.h2)
        )

    def combine(self, other: "VectorField3D", alpha: Number, beta: Number) -> "VectorField3D":
        """Return alpha*self + beta*other."""
        return VectorField3D(
            self.grid,
            alpha * self.vertical + beta * other.vertical,
            alpha * self.h1 + beta * other.h1,
            alpha * self.h2 + beta * other.h2,
        )

    def __add__(self, other: "VectorField3D") -> "VectorField3D":
        return self.combine(other, 1.0, 1.0)

    def __sub__(self, other: "VectorField3D") -> "VectorField3D":
        return self.combine(other, 1.0, -1.0)

    def __mul__(self, scalar: Number) -> "VectorField3D":
        return self.map_spectral(lambda c: c * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField3D":
        return self.map_spectral(np.negative)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.vertical))
            and np.all(np.isfinite(self.h1))
            and np.all(np.isfinite(self.h2))
        )


Field = Union[ScalarField3D, VectorField3D, SurfaceField2D]


def to_spectral(grid: Grid3D, physical_values: np.ndarray) -> ScalarField3D:
    """
    Transform nodal collocation values into a ScalarField3D.

    Args:
        grid: Target grid.
        physical_values: Real array of shape (N_z+1, N_y, N_x).

    Returns:
        Spectral scalar field.
    """
    physical_values = np.asarray(physical_values, dtype=float)
    expected = (grid.n_z + 1,) + grid.physical_shape
    if physical_values.shape != expected:
        raise ShapeMismatchError(f"expected shape {expected}, got {physical_values.shape}")
    return ScalarField3D(grid, grid.to_spectral(physical_values))


def to_physical(field: ScalarField3D) -> np.ndarray:
    """Collocation values of a scalar field, shape (N_z+1, N_y, N_x)."""
    return field.grid.to_physical(field.values)


def dealias(field: Field) -> Field:
    """
    Zero every mode beyond the 2/3 cutoff. Idempotent.

    Args:
        field: Any field type.

    Returns:
        Field of the same type with |m1| > N_x/3 or |m2| > N_y/3 removed.
    """
    mask = field.grid.dealias_mask
    return field.map_spectral(lambda c: c * mask)


def remove_mean(field: Field) -> Field:
    """Zero the k = 0 coefficient at every level (the horizontal-mean gauge)."""

    def _strip(coefficients: np.ndarray) -> np.ndarray:
        out = coefficients.copy()
        out[..., 0, 0] = 0.0
        return out

    return field.map_spectral(_strip)


# ----------------------------------------------------------------------
# Seeded random band-limited fields
# ----------------------------------------------------------------------


def _random_coefficients(
    grid: Grid3D,
    rng: np.random.Generator,
    levels: np.ndarray,
    max_mode: int,
    zero_mean: bool,
    vanish_top: bool,
) -> np.ndarray:
    """Random smooth vertical profiles on a random set of low horizontal modes."""
    m1, m2 = grid.integer_modes
    band = (np.abs(m1) <= max_mode) & (np.abs(m2) <= max_mode) & grid.dealias_mask
    if zero_mean:
        band &= (m1 != 0) | (m2 != 0)

    n_profiles = 3
    amplitudes = rng.standard_normal((n_profiles,) + grid.spectral_shape) + 1j * rng.standard_normal(
        (n_profiles,) + grid.spectral_shape
    )
    rates = 0.5 * np.arange(1, n_profiles + 1)
    taper = (1.0 - levels / grid.z_max) if vanish_top else np.ones_like(levels)
    basis = np.exp(-np.outer(rates, levels)) * taper

    coefficients = np.einsum("pz,pyx->zyx", basis, amplitudes) * band
    # Round trip through physical space restores conjugate symmetry.
    return grid.to_spectral(grid.to_physical(coefficients))


def random_scalar_field(
    grid: Grid3D,
    seed: int,
    max_mode: int = 3,
    zero_mean: bool = True,
    vanish_top: bool = True,
) -> ScalarField3D:
    """
    Seeded random real scalar field, band-limited to |m| <= max_mode.

    Args:
        grid: Target grid.
        seed: Generator seed.
        max_mode: Largest integer wavenumber per direction.
        zero_mean: Drop the k = 0 mode.
        vanish_top: Taper profiles to zero at Z_max.

    Returns:
        ScalarField3D with smooth exponential vertical profiles.
    """
    rng = np.random.default_rng(seed)
    values = _random_coefficients(grid, rng, grid.z_nodes, max_mode, zero_mean, vanish_top)
    return ScalarField3D(grid, values)


def random_vector_field(
    grid: Grid3D,
    seed: int,
    max_mode: int = 3,
    zero_mean: bool = True,
    vanish_top: bool = True,
) -> VectorField3D:
    """Seeded random staggered vector field with independent smooth components."""
    rng = np.random.default_rng(seed)
    vertical = _random_coefficients(grid, rng, grid.z_half, max_mode, zero_mean, vanish_top)
    h1 = _random_coefficients(grid, rng, grid.z_nodes, max_mode, zero_mean, vanish_top)
    h2 = _random_coefficients(grid, rng, grid.z_nodes, max_mode, zero_mean, vanish_top)
    return VectorField3D(grid, vertical, h1, h2)


def random_surface_field(
    grid: Grid3D,
    seed: int,
    max_mode: int = 3,
    zero_mean: bool = True,
    scale: Optional[float] = None,
) -> SurfaceField2D:
    """Seeded random surface field band-limited to |m| <= max_mode."""
    rng = np.random.default_rng(seed)
    values = _random_coefficients(grid, rng, np.zeros(1), max_mode, zero_mean, False)[0]
    if scale is not None:
        values = values * scale
    return SurfaceField2D(grid, values)
