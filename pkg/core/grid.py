"""
Grid Module
-----------
Discretization of the half space: a periodic horizontal torus
[0, 2*pi*L_h)^2 times the truncated vertical interval [0, Z_max].

Horizontal directions are pseudo-spectral (real FFTs with "forward"
normalization, so cos(x1) has coefficient 1/2 at k = (+-1, 0)). The vertical
direction is a uniform finite-difference grid with integer nodes
z_j = j*dz (j = 0..N_z) and half-nodes z_{j+1/2} (j = 0..N_z-1).
"""

import logging
from typing import Tuple

import numpy as np
import scipy.fft

from core.exceptions import InvalidParameterError, ShapeMismatchError

logger = logging.getLogger(__name__)


class Grid3D:
    """
    Immutable half-space grid owning wavenumber tables and transform settings.

    Physical arrays are laid out as (level, x2, x1); spectral arrays as
    (level, k2, k1) with only k1 >= 0 stored (real-to-complex transforms).
    """

    MIN_HORIZONTAL_POINTS = 4
    MIN_VERTICAL_CELLS = 4

    def __init__(
        self,
        length_h: float,
        n_x: int,
        n_y: int,
        n_z: int,
        z_max: float,
        workers: int = 1,
    ) -> None:
        """
        Build the grid and its wavenumber tables.

        Args:
            length_h: Horizontal scale L_h; the period is 2*pi*L_h.
            n_x: Collocation points along x1 (even, >= 4).
            n_y: Collocation points along x2 (even, >= 4).
            n_z: Vertical cell count (>= 4).
            z_max: Vertical truncation height.
            workers: Threads used by the FFTs. Never affects results.
        """
        self._validate(length_h, n_x, n_y, n_z, z_max, workers)

        self._length_h = float(length_h)
        self._n_x = int(n_x)
        self._n_y = int(n_y)
        self._n_z = int(n_z)
        self._z_max = float(z_max)
        self._workers = int(workers)
        self._dz = self._z_max / self._n_z

        self._build_tables()

    @staticmethod
    def _validate(length_h, n_x, n_y, n_z, z_max, workers) -> None:
        """Reject parameters outside the grid invariants."""
        for name, count in (("N_x", n_x), ("N_y", n_y)):
            if int(count) != count or count < Grid3D.MIN_HORIZONTAL_POINTS or count % 2:
                raise InvalidParameterError(
                    f"{name} must be an even integer >= "
                    f"{Grid3D.MIN_HORIZONTAL_POINTS}, got {count}"
                )
        if int(n_z) != n_z or n_z < Grid3D.MIN_VERTICAL_CELLS:
            raise InvalidParameterError(
                f"N_z must be an integer >= {Grid3D.MIN_VERTICAL_CELLS}, got {n_z}"
            )
        if not length_h > 0:
            raise InvalidParameterError(f"L_h must be positive, got {length_h}")
        if not z_max > 0:
            raise InvalidParameterError(f"Z_max must be positive, got {z_max}")
        if int(workers) < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {workers}")

    def _build_tables(self) -> None:
        """Precompute wavenumbers, masks, quadrature weights and coordinates."""
        n_kx = self._n_x // 2 + 1

        m1 = np.fft.rfftfreq(self._n_x, d=1.0 / self._n_x)
        m2 = np.fft.fftfreq(self._n_y, d=1.0 / self._n_y)
        m2_table, m1_table = np.meshgrid(m2, m1, indexing="ij")

        self._m1 = m1_table
        self._m2 = m2_table
        self._k1 = m1_table / self._length_h
        self._k2 = m2_table / self._length_h
        self._k_squared = self._k1 ** 2 + self._k2 ** 2
        self._k_abs = np.sqrt(self._k_squared)

        # Derivatives vanish on the Nyquist row/column so that they stay real.
        nyquist = (np.abs(m1_table) == self._n_x // 2) | (
            np.abs(m2_table) == self._n_y // 2
        )
        self._ik1 = np.where(nyquist, 0.0, 1j * self._k1)
        self._ik2 = np.where(nyquist, 0.0, 1j * self._k2)
        self._nyquist = nyquist
        # Symbol of div(grad) in the horizontal: zero wherever derivatives are.
        self._k_squared_discrete = np.where(nyquist, 0.0, self._k_squared)
        self._mode_key = np.where(
            nyquist, -1, (m1_table ** 2 + m2_table ** 2).astype(np.int64)
        )

        self._dealias_mask = (np.abs(m1_table) <= self._n_x // 3) & (
            np.abs(m2_table) <= self._n_y // 3
        )

        weight = np.full((self._n_y, n_kx), 2.0)
        weight[:, 0] = 1.0
        weight[:, -1] = 1.0
        self._mode_weight = weight

        self._z_nodes = np.arange(self._n_z + 1) * self._dz
        self._z_half = (np.arange(self._n_z) + 0.5) * self._dz
        trapezoid = np.full(self._n_z + 1, self._dz)
        trapezoid[0] = trapezoid[-1] = 0.5 * self._dz
        self._node_weights = trapezoid
        # End half cells folded onto the first and last interior nodes.
        interior = np.zeros(self._n_z + 1)
        interior[1:-1] = self._dz
        interior[1] += 0.5 * self._dz
        interior[-2] += 0.5 * self._dz
        self._interior_weights = interior

        period = 2.0 * np.pi * self._length_h
        x1 = np.arange(self._n_x) * period / self._n_x
        x2 = np.arange(self._n_y) * period / self._n_y
        self._x2, self._x1 = np.meshgrid(x2, x1, indexing="ij")

        for table in (
            self._m1, self._m2, self._k1, self._k2, self._k_squared, self._k_abs,
            self._ik1, self._ik2, self._dealias_mask, self._mode_weight,
            self._nyquist, self._k_squared_discrete, self._mode_key,
            self._z_nodes, self._z_half, self._node_weights, self._interior_weights,
            self._x1, self._x2,
        ):
            table.setflags(write=False)

        logger.debug(
            f"Grid built: {self._n_x}x{self._n_y}x{self._n_z}, "
            f"L_h={self._length_h}, Z_max={self._z_max}, dz={self._dz}"
        )

    # ------------------------------------------------------------------
    # Scalar properties
    # ------------------------------------------------------------------

    @property
    def length_h(self) -> float:
        return self._length_h

    @property
    def n_x(self) -> int:
        return self._n_x

    @property
    def n_y(self) -> int:
        return self._n_y

    @property
    def n_z(self) -> int:
        return self._n_z

    @property
    def z_max(self) -> float:
        return self._z_max

    @property
    def dz(self) -> float:
        return self._dz

    @property
    def workers(self) -> int:
        return self._workers

    @property
    def period(self) -> float:
        """Horizontal period 2*pi*L_h."""
        return 2.0 * np.pi * self._length_h

    @property
    def area(self) -> float:
        """Area of the horizontal torus."""
        return self.period ** 2

    @property
    def dx(self) -> float:
        """Smallest horizontal collocation spacing."""
        return self.period / max(self._n_x, self._n_y)

    @property
    def max_retained_mode(self) -> Tuple[int, int]:
        """Largest integer wavenumbers (|m1|, |m2|) kept by the 2/3 rule."""
        return self._n_x // 3, self._n_y // 3

    # ------------------------------------------------------------------
    # Tables
    # ------------------------------------------------------------------

    @property
    def k1(self) -> np.ndarray:
        return self._k1

    @property
    def k2(self) -> np.ndarray:
        return self._k2

    @property
    def ik1(self) -> np.ndarray:
        """Spectral x1-derivative multiplier (zero on Nyquist modes)."""
        return self._ik1

    @property
    def ik2(self) -> np.ndarray:
        """Spectral x2-derivative multiplier (zero on Nyquist modes)."""
        return self._ik2

    @property
    def k_squared(self) -> np.ndarray:
        return self._k_squared

    @property
    def k_abs(self) -> np.ndarray:
        return self._k_abs

    @property
    def k_squared_discrete(self) -> np.ndarray:
        """|k|^2 as seen by div(grad): zero on Nyquist modes."""
        return self._k_squared_discrete

    @property
    def nyquist_mask(self) -> np.ndarray:
        return self._nyquist

    @property
    def mode_key(self) -> np.ndarray:
        """
        Integer label m1^2 + m2^2 per stored mode, -1 on Nyquist modes.

        Modes sharing a label share every vertical operator.
        """
        return self._mode_key

    @property
    def integer_modes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Integer wavenumber tables (m1, m2)."""
        return self._m1, self._m2

    @property
    def dealias_mask(self) -> np.ndarray:
        return self._dealias_mask

    @property
    def mode_weight(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full (two-sided) spectrum."""
        return self._mode_weight

    @property
    def z_nodes(self) -> np.ndarray:
        return self._z_nodes

    @property
    def z_half(self) -> np.ndarray:
        return self._z_half

    @property
    def node_weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights on the integer nodes."""
        return self._node_weights

    @property
    def interior_weights(self) -> np.ndarray:
        """
        Second-order weights that leave out the two end nodes.

        Node operators built from staggered differences only extrapolate
        at z = 0 and Z_max; these weights see the interior values alone.
        """
        return self._interior_weights

    @property
    def x1(self) -> np.ndarray:
        return self._x1

    @property
    def x2(self) -> np.ndarray:
        return self._x2

    @property
    def physical_shape(self) -> Tuple[int, int]:
        return self._n_y, self._n_x

    @property
    def spectral_shape(self) -> Tuple[int, int]:
        return self._n_y, self._n_x // 2 + 1

    # ------------------------------------------------------------------
    # Transforms
    # ------------------------------------------------------------------

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """
        Forward horizontal transform of real data with trailing shape (N_y, N_x).

        Args:
            values: Real array; leading axes are transformed independently.

        Returns:
            Complex coefficients with trailing shape (N_y, N_x//2 + 1).
        """
        values = np.asarray(values, dtype=float)
        if values.shape[-2:] != self.physical_shape:
            raise ShapeMismatchError(
                f"expected trailing shape {self.physical_shape}, got {values.shape}"
            )
        return scipy.fft.rfft2(
            values, axes=(-2, -1), norm="forward", workers=self._workers
        )

    def to_physical(self, coefficients: np.ndarray) -> np.ndarray:
        """
        Inverse horizontal transform to real collocation values.

        Args:
            coefficients: Complex array with trailing shape (N_y, N_x//2 + 1).

        Returns:
            Real array with trailing shape (N_y, N_x).
        """
        coefficients = np.asarray(coefficients)
        if coefficients.shape[-2:] != self.spectral_shape:
            raise ShapeMismatchError(
                f"expected trailing shape {self.spectral_shape}, got {coefficients.shape}"
            )
        return scipy.fft.irfft2(
            coefficients,
            s=self.physical_shape,
            axes=(-2, -1),
            norm="forward",
            workers=self._workers,
        )

    def spectral_pairing(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """
        Horizontal L^2 inner product of two real fields from their coefficients.

        Returns one value per leading index: area * sum_k w_k Re(a_k conj(b_k)).
        """
        product = self._mode_weight * np.real(a * np.conj(b))
        return self.area * product.sum(axis=(-2, -1))

    def conjugate_symmetry_defect(self, coefficients: np.ndarray) -> float:
        """
        Largest violation of c(-k) = conj(c(k)) on the self-paired k1 columns.

        Only the k1 = 0 and Nyquist columns carry both members of a pair.
        """
        worst = 0.0
        for column in (0, -1):
            strip = coefficients[..., :, column]
            mirrored = np.roll(strip[..., ::-1], 1, axis=-1)
            worst = max(worst, float(np.max(np.abs(strip - np.conj(mirrored)))))
        return worst

    # ------------------------------------------------------------------
    # Identity
    # ------------------------------------------------------------------

    @property
    def key(self) -> Tuple[float, int, int, int, float]:
        """Parameters that define the discretization (thread count excluded)."""
        return (self._length_h, self._n_x, self._n_y, self._n_z, self._z_max)

    def with_resolution(self, n_x: int, n_y: int, n_z: int) -> "Grid3D":
        """Return a grid over the same domain at another resolution."""
        return Grid3D(self._length_h, n_x, n_y, n_z, self._z_max, self._workers)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Grid3D) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return (
            f"Grid3D(L_h={self._length_h}, N_x={self._n_x}, N_y={self._n_y}, "
            f"N_z={self._n_z}, Z_max={self._z_max})"
        )


def make_grid(
    length_h: float,
    n_x: int,
    n_y: int,
    n_z: int,
    z_max: float,
    workers: int = 1,
) -> Grid3D:
    """
    Factory function for validated half-space grids.

    Args:
        length_h: Horizontal scale L_h.
        n_x: Points along x1.
        n_y: Points along x2.
        n_z: Vertical cells.
        z_max: Truncation height.
        workers: FFT threads.

    Returns:
        Immutable Grid3D.
    """
    grid = Grid3D(length_h, n_x, n_y, n_z, z_max, workers)
    logger.info(f"Created {grid!r} with dz={grid.dz:.6g}")
    return grid
