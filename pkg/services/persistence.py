"""
Persistence Service
-------------------
Diagnostics CSV files and restartable checkpoints.

Floats are written with repr() so that a CSV produced by an interrupted and
resumed run is byte-identical to the uninterrupted one. Checkpoints are
.npz archives holding the stream function, time, step counter, ledger and
the manifest hash of the run that wrote them.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np

from core.calculus import LambdaProfile, grad_lambda
from core.exceptions import ManifestHashMismatchError, SnapshotFormatError
from core.fields import ScalarField3D
from core.grid import Grid3D
from services.diagnostics import DiagnosticsRecord
from services.dynamics import RunLedger, State

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CHECKPOINT_VERSION = 1


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_diagnostics(path: PathLike, records: Iterable[DiagnosticsRecord], append: bool = False) -> Path:
    """
    Write records as CSV, with a header unless appending to an existing file.

    Returns:
        Path of the written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = DiagnosticsRecord.field_names()
    write_header = not (append and path.exists())
    with path.open("a" if append else "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if write_header:
            writer.writerow(names)
        for record in records:
            row = record.to_dict()
            writer.writerow([_format(row[name]) for name in names])
    return path


def read_diagnostics(path: PathLike) -> List[DiagnosticsRecord]:
    """
    Parse a diagnostics CSV.

    Raises:
        SnapshotFormatError: The header does not match DiagnosticsRecord.
    """
    names = DiagnosticsRecord.field_names()
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != names:
            raise SnapshotFormatError(f"unexpected diagnostics header in {path}")
        records = []
        for row in reader:
            values = {name: (int(text) if name == "step" else float(text)) for name, text in zip(names, row)}
            records.append(DiagnosticsRecord(**values))
    return records


def truncate_diagnostics(path: PathLike, last_step: int) -> int:
    """
    Drop rows written after `last_step`, keeping the file bytes of earlier rows.

    Returns:
        Number of data rows kept.
    """
    path = Path(path)
    if not path.exists():
        return 0
    lines = path.read_text().splitlines(keepends=True)
    if not lines:
        return 0
    step_column = DiagnosticsRecord.field_names().index("step")
    kept = [lines[0]] + [line for line in lines[1:] if int(line.split(",")[step_column]) <= last_step]
    path.write_text("".join(kept))
    return len(kept) - 1


def write_checkpoint(path: PathLike, state: State, ledger: RunLedger, manifest_hash: str) -> Path:
    """Store everything needed to continue a run bit-identically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = state.grid
    with path.open("wb") as handle:
        np.savez(
            handle,
            version=np.int64(CHECKPOINT_VERSION),
            manifest_hash=np.array(manifest_hash),
            grid_key=np.array(grid.key, dtype=float),
            psi=state.psi.values,
            t=np.float64(state.t),
            step=np.int64(state.step),
            reprojection_residual=np.float64(state.reprojection_residual),
            ledger=np.array(
                [
                    ledger.dissipation_quarter,
                    ledger.dissipation_three_quarter,
                    ledger.dissipation_L_lambda,
                    ledger.g_eps_integral,
                ]
            ),
        )
    logger.info(f"Checkpoint written: {path} (step {state.step}, t={state.t:.6g})")
    return path


def read_checkpoint(
    path: PathLike,
    grid: Grid3D,
    profile: LambdaProfile,
    manifest_hash: str,
) -> Tuple[State, RunLedger]:
    """
    Restore a State and its ledger.

    Raises:
        ManifestHashMismatchError: The checkpoint was written by another configuration.
        SnapshotFormatError: The archive is malformed or belongs to another grid.
    """
    try:
        with np.load(Path(path), allow_pickle=False) as archive:
            contents = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as error:
        raise SnapshotFormatError(f"cannot read checkpoint {path}: {error}") from error

    required = {"version", "manifest_hash", "grid_key", "psi", "t", "step", "reprojection_residual", "ledger"}
    missing = required - set(contents)
    if missing:
        raise SnapshotFormatError(f"checkpoint {path} lacks {sorted(missing)}")
    if int(contents["version"]) != CHECKPOINT_VERSION:
        raise SnapshotFormatError(f"unsupported checkpoint version {int(contents['version'])}")

    stored_hash = str(contents["manifest_hash"])
    if stored_hash != manifest_hash:
        raise ManifestHashMismatchError(
            f"checkpoint hash {stored_hash[:12]} does not match configuration hash {manifest_hash[:12]}"
        )
    if tuple(contents["grid_key"]) != tuple(float(value) for value in grid.key):
        raise SnapshotFormatError(f"checkpoint grid {tuple(contents['grid_key'])} differs from {grid!r}")

    psi = ScalarField3D(grid, contents["psi"])
    ledger_values = contents["ledger"]
    state = State(
        G=grad_lambda(psi, profile),
        psi=psi,
        t=float(contents["t"]),
        step=int(contents["step"]),
        profile=profile,
        reprojection_residual=float(contents["reprojection_residual"]),
    )
    ledger = RunLedger(*(float(value) for value in ledger_values))
    logger.info(f"Checkpoint restored: {path} (step {state.step}, t={state.t:.6g})")
    return state, ledger
