"""
Named Profiles
--------------
Builders that turn the typed run-file sections into grids, stratification
profiles, initial stream functions and forcing. Only named recipes are
available so that every run is reproducible from its manifest.
"""

import logging
from typing import Tuple

import numpy as np

from config.settings import ForcingConfig, GridConfig, InitialConfig, LambdaConfig
from core.calculus import LambdaProfile
from core.exceptions import ConfigRangeError, SnapshotFormatError
from core.fields import ScalarField3D, SurfaceField2D, random_scalar_field
from core.grid import Grid3D, make_grid
from core.snapshot import read_snapshot
from services.dynamics import Forcing

logger = logging.getLogger(__name__)


def build_grid(config: GridConfig, workers: int = 1) -> Grid3D:
    config.validate()
    return make_grid(config.length_h, config.n_x, config.n_y, config.n_z, config.z_max, workers)


def build_profile(grid: Grid3D, config: LambdaConfig) -> LambdaProfile:
    config.validate()
    if config.profile == "tanh":
        return LambdaProfile.tanh_stratified(grid, config.surface, config.deep, config.depth, config.width)
    return LambdaProfile.constant(grid, config.value)


def _phase(grid: Grid3D, mode: Tuple[int, int]) -> np.ndarray:
    """k . x on the collocation points for the integer mode (m1, m2)."""
    return (mode[0] * grid.x1 + mode[1] * grid.x2) / grid.length_h


def _wavenumber(grid: Grid3D, mode: Tuple[int, int], key: str) -> float:
    limit = grid.max_retained_mode
    if mode == (0, 0):
        raise ConfigRangeError(key, "mode (0, 0) is excluded by the zero-mean gauge")
    if abs(mode[0]) > limit[0] or abs(mode[1]) > limit[1]:
        raise ConfigRangeError(key, f"mode {mode} exceeds the retained band {limit}")
    return float(np.hypot(*mode)) / grid.length_h


def harmonic_mode(grid: Grid3D, mode: Tuple[int, int], amplitude: float = 1.0) -> ScalarField3D:
    """A exp(-|k| z) cos(k . x): harmonic for lambda = 1, steady for single-direction modes."""
    k = _wavenumber(grid, mode, "init.mode_1")
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    values = amplitude * np.exp(-k * z) * np.cos(_phase(grid, mode))[np.newaxis]
    return ScalarField3D.from_physical(grid, values)


def two_mode(
    grid: Grid3D,
    mode_a: Tuple[int, int],
    mode_b: Tuple[int, int],
    amplitude: float = 1.0,
    amplitude_b: float = 0.5,
) -> ScalarField3D:
    """A cos(k_a . x) e^{-z} + A_b sin(k_b . x)(1 + z) e^{-z}; interacting and not harmonic."""
    _wavenumber(grid, mode_a, "init.mode_1")
    _wavenumber(grid, mode_b, "init.mode_2")
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    first = amplitude * np.cos(_phase(grid, mode_a))[np.newaxis] * np.exp(-z)
    second = amplitude_b * np.sin(_phase(grid, mode_b))[np.newaxis] * (1.0 + z) * np.exp(-z)
    return ScalarField3D.from_physical(grid, first + second)


def build_initial(grid: Grid3D, config: InitialConfig, seed: int = 0) -> ScalarField3D:
    """
    Initial stream function for init.kind.

    Raises:
        ConfigRangeError: A mode lies outside the retained band.
        SnapshotFormatError: The snapshot does not match the grid.
    """
    config.validate()
    if config.kind == "harmonic-mode":
        return harmonic_mode(grid, config.mode_1, config.amplitude)
    if config.kind == "two-mode":
        return two_mode(grid, config.mode_1, config.mode_2, config.amplitude, config.amplitude_2)
    if config.kind == "random-seeded":
        return random_scalar_field(grid, seed, max_mode=config.max_mode) * config.amplitude

    _, field = read_snapshot(config.snapshot, grid)
    if not isinstance(field, ScalarField3D):
        raise SnapshotFormatError(f"{config.snapshot} holds a surface field, expected a 3D field")
    logger.info(f"Initial condition read from {config.snapshot}")
    return field


def build_forcing(grid: Grid3D, config: ForcingConfig) -> Forcing:
    """Forcing (f_L, f_nu) for forcing.kind."""
    config.validate()
    if config.kind == "zero":
        return Forcing.zero(grid)

    if config.kind == "single-mode":
        _wavenumber(grid, config.mode, "forcing.mode")
        wave = np.cos(_phase(grid, config.mode))
        z = grid.z_nodes[:, np.newaxis, np.newaxis]
        interior = ScalarField3D.from_physical(grid, config.interior_amplitude * np.exp(-z) * wave[np.newaxis])
        surface = SurfaceField2D.from_physical(grid, config.surface_amplitude * wave)
        return Forcing(interior, surface)

    interior = ScalarField3D.zeros(grid)
    surface = SurfaceField2D.zeros(grid)
    if config.interior_snapshot:
        _, loaded = read_snapshot(config.interior_snapshot, grid)
        if not isinstance(loaded, ScalarField3D):
            raise SnapshotFormatError(f"{config.interior_snapshot} must hold a 3D field")
        interior = loaded
    if config.surface_snapshot:
        _, loaded = read_snapshot(config.surface_snapshot, grid)
        if not isinstance(loaded, SurfaceField2D):
            raise SnapshotFormatError(f"{config.surface_snapshot} must hold a surface field")
        surface = loaded
    return Forcing(interior, surface)
