"""Shared grids, profiles and run-file helpers."""

from pathlib import Path
from typing import Callable

import numpy as np
import pytest
from hypothesis import settings

from core.calculus import LambdaProfile
from core.fields import ScalarField3D
from core.grid import Grid3D

settings.register_profile("numerics", max_examples=10, deadline=None)
settings.load_profile("numerics")


@pytest.fixture(scope="session")
def grid() -> Grid3D:
    return Grid3D(1.0, 16, 16, 16, 8.0)


@pytest.fixture(scope="session")
def unit_profile(grid) -> LambdaProfile:
    return LambdaProfile.constant(grid, 1.0)


@pytest.fixture(scope="session")
def tanh_profile(grid) -> LambdaProfile:
    return LambdaProfile.tanh_stratified(grid, surface=1.0, deep=2.0, depth=2.0, width=0.5)


@pytest.fixture(scope="session", params=["constant", "tanh"])
def profile(request, unit_profile, tanh_profile) -> LambdaProfile:
    return unit_profile if request.param == "constant" else tanh_profile


def x1_steady_state(grid: Grid3D, amplitude: float = 1.0) -> ScalarField3D:
    """exp(-z) cos(x1): depends on x1 only, so its advection vanishes."""
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    wave = np.cos(grid.x1 / grid.length_h)[np.newaxis]
    return ScalarField3D.from_physical(grid, amplitude * np.exp(-z) * wave)


def two_mode_field(grid: Grid3D, amplitude: float = 0.1) -> ScalarField3D:
    """cos(x1) exp(-z) + 0.5 sin(x1 + x2)(1 + z) exp(-z), scaled."""
    z = grid.z_nodes[:, np.newaxis, np.newaxis]
    first = np.cos(grid.x1)[np.newaxis] * np.exp(-z)
    second = 0.5 * np.sin(grid.x1 + grid.x2)[np.newaxis] * (1.0 + z) * np.exp(-z)
    return ScalarField3D.from_physical(grid, amplitude * (first + second))


SMALL_RUN = """
grid.L_h = 1.0
grid.Nx = 16
grid.Ny = 16
grid.Nz = 16
grid.Zmax = 8.0

lambda.profile = constant

init.kind = two-mode
init.amplitude = 0.1
init.amplitude_2 = 0.05

solver.dt = 0.01
solver.T = 0.06

output.diagnostics_every = 1
"""


@pytest.fixture
def write_config(tmp_path) -> Callable[..., Path]:
    """Write SMALL_RUN plus extra lines to a run file in tmp_path."""

    def _write(extra: str = "", name: str = "run.cfg", base: str = SMALL_RUN) -> Path:
        path = tmp_path / name
        path.write_text(base + extra)
        return path

    return _write
