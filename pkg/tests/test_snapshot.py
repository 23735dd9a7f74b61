import numpy as np
import pytest

from core.exceptions import SnapshotFormatError
from core.fields import SurfaceField2D, random_scalar_field, random_surface_field
from core.grid import Grid3D
from core.snapshot import HEADER_BYTES, HEADER_DTYPE, MAGIC, read_snapshot, write_snapshot


def test_header_is_sixty_four_bytes() -> None:
    assert HEADER_DTYPE.itemsize == HEADER_BYTES == 64


def test_scalar_snapshot_layout(tmp_path, grid) -> None:
    field = random_scalar_field(grid, 1)
    path = write_snapshot(tmp_path / "psi.bin", field)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert len(raw) == 64 + 8 * 17 * 16 * 16
    stored = np.frombuffer(raw, dtype="<f8", offset=64).reshape(17, 16, 16)
    assert np.array_equal(stored, field.physical())


def test_scalar_snapshot_rebuilds_grid(tmp_path, grid) -> None:
    field = random_scalar_field(grid, 2)
    path = write_snapshot(tmp_path / "psi.bin", field)
    restored_grid, restored = read_snapshot(path)
    assert restored_grid == grid
    assert np.allclose(restored.values, field.values, atol=1e-14)


def test_surface_snapshot_needs_grid(tmp_path, grid) -> None:
    surface = random_surface_field(grid, 3)
    path = write_snapshot(tmp_path / "theta.bin", surface)
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)
    _, restored = read_snapshot(path, grid=grid)
    assert isinstance(restored, SurfaceField2D)
    assert np.allclose(restored.values, surface.values, atol=1e-14)


def test_grid_mismatch(tmp_path, grid) -> None:
    path = write_snapshot(tmp_path / "psi.bin", random_scalar_field(grid, 4))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path, grid=Grid3D(1.0, 16, 16, 16, 4.0))


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda raw: raw[:40],
        lambda raw: b"XXXX" + raw[4:],
        lambda raw: raw[:-8],
    ],
    ids=["truncated-header", "bad-magic", "short-payload"],
)
def test_malformed_files(tmp_path, grid, corrupt) -> None:
    path = write_snapshot(tmp_path / "psi.bin", random_scalar_field(grid, 5))
    path.write_bytes(corrupt(path.read_bytes()))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)
