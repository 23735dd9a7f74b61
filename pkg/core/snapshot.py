"""
Snapshot Module
---------------
Binary snapshot files for scalar and surface fields.

Layout: a 64-byte little-endian header (magic "QGHS", version u32, N_x, N_y,
N_z as u32, L_h and Z_max as f64, zero padding) followed by the physical
collocation values as little-endian f64 in z-major, then x2, then x1 order.
Surface snapshots reuse the header with N_z = 0 and carry a single level.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from core.exceptions import SnapshotFormatError
from core.fields import ScalarField3D, SurfaceField2D
from core.grid import Grid3D

logger = logging.getLogger(__name__)

MAGIC = b"QGHS"
FORMAT_VERSION = 1
HEADER_BYTES = 64

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("n_x", "<u4"),
        ("n_y", "<u4"),
        ("n_z", "<u4"),
        ("length_h", "<f8"),
        ("z_max", "<f8"),
        ("padding", "V28"),
    ]
)

SnapshotField = Union[ScalarField3D, SurfaceField2D]


def _pack_header(grid: Grid3D, n_z: int) -> bytes:
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["n_x"] = grid.n_x
    header["n_y"] = grid.n_y
    header["n_z"] = n_z
    header["length_h"] = grid.length_h
    header["z_max"] = grid.z_max
    return header.tobytes()


def _unpack_header(raw: bytes) -> dict:
    if len(raw) < HEADER_BYTES:
        raise SnapshotFormatError(f"truncated header: {len(raw)} bytes")
    header = np.frombuffer(raw[:HEADER_BYTES], dtype=HEADER_DTYPE)[0]
    if bytes(header["magic"]) != MAGIC:
        raise SnapshotFormatError(f"bad magic {bytes(header['magic'])!r}")
    if int(header["version"]) != FORMAT_VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {int(header['version'])}")
    return {
        "n_x": int(header["n_x"]),
        "n_y": int(header["n_y"]),
        "n_z": int(header["n_z"]),
        "length_h": float(header["length_h"]),
        "z_max": float(header["z_max"]),
    }


def write_snapshot(path: Union[str, Path], field: SnapshotField) -> Path:
    """
    Write a scalar or surface field to a binary snapshot.

    Args:
        path: Destination file; parent directories are created.
        field: ScalarField3D or SurfaceField2D.

    Returns:
        Path written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if isinstance(field, SurfaceField2D):
        n_z = 0
        values = field.physical()[np.newaxis]
    else:
        n_z = field.grid.n_z
        values = field.physical()

    with path.open("wb") as handle:
        handle.write(_pack_header(field.grid, n_z))
        handle.write(np.ascontiguousarray(values, dtype="<f8").tobytes())

    logger.info(f"Snapshot written to {path} ({values.shape[0]} level(s))")
    return path


def read_snapshot(
    path: Union[str, Path],
    grid: Optional[Grid3D] = None,
    workers: int = 1,
) -> Tuple[Grid3D, SnapshotField]:
    """
    Read a binary snapshot.

    Args:
        path: Snapshot file.
        grid: Grid to attach the field to. Required for surface snapshots;
            when given for a 3D snapshot it must match the header.
        workers: FFT threads for a grid rebuilt from the header.

    Returns:
        Tuple of (grid, field).
    """
    raw = Path(path).read_bytes()
    header = _unpack_header(raw)
    n_x, n_y, n_z = header["n_x"], header["n_y"], header["n_z"]
    levels = max(n_z, 0) + 1

    expected = HEADER_BYTES + 8 * levels * n_x * n_y
    if len(raw) != expected:
        raise SnapshotFormatError(f"expected {expected} bytes, found {len(raw)}")

    values = np.frombuffer(raw, dtype="<f8", offset=HEADER_BYTES).reshape(levels, n_y, n_x)

    if n_z == 0:
        if grid is None:
            raise SnapshotFormatError("surface snapshots need a grid to attach to")
        if (grid.n_x, grid.n_y, grid.length_h) != (n_x, n_y, header["length_h"]):
            raise SnapshotFormatError(f"surface snapshot does not match {grid!r}")
        return grid, SurfaceField2D.from_physical(grid, values[0])

    if grid is None:
        grid = Grid3D(header["length_h"], n_x, n_y, n_z, header["z_max"], workers)
    elif grid.key != (header["length_h"], n_x, n_y, n_z, header["z_max"]):
        raise SnapshotFormatError(f"snapshot header does not match {grid!r}")

    logger.debug(f"Snapshot read from {path}")
    return grid, ScalarField3D.from_physical(grid, values)
