"""
Tridiagonal Module
------------------
Per-horizontal-mode banded solves for vertical two-point problems.

Every horizontal mode with the same squared integer wavenumber shares one
matrix, so modes are grouped by label and each group is solved with a single
scipy banded factorization over many right-hand sides. Groups are visited in
sorted label order, which keeps results bit-identical between runs.
"""

import logging
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from core.exceptions import SingularSystemError
from core.grid import Grid3D

logger = logging.getLogger(__name__)

# assemble(label, k_squared) -> banded matrix of shape (3, n) in solve_banded layout
BandAssembler = Callable[[int, float], np.ndarray]


def banded_from_diagonals(lower: np.ndarray, diagonal: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """
    Pack three diagonals into the (1, 1) layout used by solve_banded.

    Args:
        lower: Sub-diagonal, length n - 1.
        diagonal: Main diagonal, length n.
        upper: Super-diagonal, length n - 1.
    """
    n = diagonal.shape[0]
    banded = np.zeros((3, n), dtype=float)
    banded[0, 1:] = upper
    banded[1, :] = diagonal
    banded[2, :-1] = lower
    return banded


def solve_per_mode(
    grid: Grid3D,
    assemble: BandAssembler,
    rhs: np.ndarray,
    active: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Solve one tridiagonal system per horizontal mode.

    Args:
        grid: Grid supplying mode labels and the discrete |k|^2 table.
        assemble: Builds the banded matrix for a mode label.
        rhs: Complex right-hand sides of shape (n, N_y, N_x//2+1).
        active: Optional boolean mask of modes to solve; others return zero.

    Returns:
        Solutions with the shape of rhs.

    Raises:
        SingularSystemError: A group matrix could not be factorized.
    """
    labels = grid.mode_key
    k_squared = grid.k_squared_discrete
    n = rhs.shape[0]
    flat_rhs = rhs.reshape(n, -1)
    flat_labels = labels.ravel()
    flat_active = np.ones(flat_labels.shape, dtype=bool) if active is None else active.ravel()

    solution = np.zeros_like(flat_rhs, dtype=complex)
    for label in np.unique(flat_labels[flat_active]):
        columns = np.flatnonzero((flat_labels == label) & flat_active)
        banded = assemble(int(label), float(k_squared.ravel()[columns[0]]))
        try:
            solution[:, columns] = solve_banded(
                (1, 1), banded, flat_rhs[:, columns], check_finite=False
            )
        except (LinAlgError, ValueError) as error:
            raise SingularSystemError(f"mode group {label}: {error}") from error

    if not np.all(np.isfinite(solution)):
        raise SingularSystemError("banded solve produced non-finite values")
    return solution.reshape(rhs.shape)
