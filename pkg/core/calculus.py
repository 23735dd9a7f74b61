"""
Calculus Module
---------------
Discrete operator vocabulary of the half-space model: weighted gradients,
divergence, the elliptic operator L_lambda, horizontal fractional powers,
mollification, boundary traces and norms.

Vertical derivatives are centred differences between integer nodes and
half-nodes. Horizontal derivatives are spectral multipliers.
"""

import logging
from typing import Callable, Dict, Optional, Union

import numpy as np

from core.exceptions import GaugeViolationError, InvalidParameterError
from core.fields import Field, ScalarField3D, SurfaceField2D, VectorField3D
from core.grid import Grid3D

logger = logging.getLogger(__name__)

MAX_FRACTIONAL_EXPONENT = 3.0
GAUGE_TOLERANCE = 1e-12


# ----------------------------------------------------------------------
# Stratification weight
# ----------------------------------------------------------------------


class LambdaProfile:
    """
    Stratification weight lambda(z) sampled at nodes and half-nodes.

    Profiles keep their generating function so they can be resampled on a
    refined grid.
    """

    def __init__(
        self,
        grid: Grid3D,
        function: Callable[[np.ndarray], np.ndarray],
        name: str = "custom",
        parameters: Optional[Dict[str, float]] = None,
    ) -> None:
        self._grid = grid
        self._function = function
        self._name = name
        self._parameters = dict(parameters or {})

        nodes = np.broadcast_to(np.asarray(function(grid.z_nodes), dtype=float), grid.z_nodes.shape)
        half = np.broadcast_to(np.asarray(function(grid.z_half), dtype=float), grid.z_half.shape)
        samples = np.concatenate([nodes, half])
        if not np.all(np.isfinite(samples)) or np.any(samples <= 0.0):
            raise InvalidParameterError(f"lambda profile '{name}' must be finite and positive")

        self._nodes = np.array(nodes)
        self._half = np.array(half)
        self._nodes.setflags(write=False)
        self._half.setflags(write=False)
        self._bound = float(max(samples.max(), 1.0 / samples.min()))

    @classmethod
    def constant(cls, grid: Grid3D, value: float = 1.0) -> "LambdaProfile":
        """lambda(z) = value."""
        if not value > 0:
            raise InvalidParameterError(f"constant lambda must be positive, got {value}")
        return cls(grid, lambda z: np.full_like(z, value, dtype=float), "constant", {"value": value})

    @classmethod
    def tanh_stratified(
        cls,
        grid: Grid3D,
        surface: float,
        deep: float,
        depth: float,
        width: float,
    ) -> "LambdaProfile":
        """
        Smooth transition from `surface` near z = 0 to `deep` below `depth`.

        lambda(z) = surface + (deep - surface) * (1 + tanh((z - depth)/width)) / 2
        """
        if not (surface > 0 and deep > 0 and width > 0):
            raise InvalidParameterError("tanh profile needs positive surface, deep and width")

        def _profile(z: np.ndarray) -> np.ndarray:
            return surface + (deep - surface) * 0.5 * (1.0 + np.tanh((z - depth) / width))

        return cls(
            grid,
            _profile,
            "tanh",
            {"surface": surface, "deep": deep, "depth": depth, "width": width},
        )

    @property
    def grid(self) -> Grid3D:
        return self._grid

    @property
    def name(self) -> str:
        return self._name

    @property
    def parameters(self) -> Dict[str, float]:
        return dict(self._parameters)

    @property
    def at_nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def at_half(self) -> np.ndarray:
        return self._half

    @property
    def bound(self) -> float:
        """Smallest Lambda with 1/Lambda <= lambda <= Lambda on every sample."""
        return self._bound

    def scaled(self, factor: float) -> "LambdaProfile":
        base = self._function
        return LambdaProfile(
            self._grid,
            lambda z: factor * np.asarray(base(z), dtype=float),
            f"{self._name}*{factor:g}",
            self._parameters,
        )

    def with_grid(self, grid: Grid3D) -> "LambdaProfile":
        """Resample the same profile on another grid."""
        return LambdaProfile(grid, self._function, self._name, self._parameters)

    def __repr__(self) -> str:
        return f"LambdaProfile({self._name}, {self._parameters}, bound={self._bound:.4g})"


def _half_weights(profile: Optional[LambdaProfile], grid: Grid3D) -> np.ndarray:
    if profile is None:
        return np.ones(grid.n_z)
    return profile.at_half


def _column(values: np.ndarray) -> np.ndarray:
    """Broadcast a vertical profile over the spectral plane."""
    return values[:, np.newaxis, np.newaxis]


# ----------------------------------------------------------------------
# Vertical staggering helpers
# ----------------------------------------------------------------------


def nodes_to_half(values: np.ndarray) -> np.ndarray:
    """Average node values onto half-nodes."""
    return 0.5 * (values[1:] + values[:-1])


def half_to_nodes(values: np.ndarray) -> np.ndarray:
    """Interpolate half-node values onto nodes, extrapolating linearly at both ends."""
    nodes = np.empty((values.shape[0] + 1,) + values.shape[1:], dtype=values.dtype)
    nodes[1:-1] = 0.5 * (values[1:] + values[:-1])
    nodes[0] = 1.5 * values[0] - 0.5 * values[1]
    nodes[-1] = 1.5 * values[-1] - 0.5 * values[-2]
    return nodes


# ----------------------------------------------------------------------
# Differential operators
# ----------------------------------------------------------------------


def horizontal_gradient(psi: ScalarField3D) -> VectorField3D:
    """(0, d/dx1, d/dx2) applied to psi."""
    grid = psi.grid
    return VectorField3D(
        grid,
        np.zeros((grid.n_z,) + grid.spectral_shape, dtype=complex),
        grid.ik1 * psi.values,
        grid.ik2 * psi.values,
    )


def perp_gradient(psi: ScalarField3D) -> VectorField3D:
    """Geostrophic velocity (0, -d psi/dx2, d psi/dx1)."""
    grid = psi.grid
    return VectorField3D(
        grid,
        np.zeros((grid.n_z,) + grid.spectral_shape, dtype=complex),
        -grid.ik2 * psi.values,
        grid.ik1 * psi.values,
    )


def grad_lambda(psi: ScalarField3D, profile: Optional[LambdaProfile] = None) -> VectorField3D:
    """
    Weighted gradient (lambda dpsi/dz, dpsi/dx1, dpsi/dx2).

    The vertical component is a centred difference on the half-nodes times
    lambda at the half-nodes. Passing no profile gives the plain gradient.
    """
    grid = psi.grid
    vertical = _column(_half_weights(profile, grid)) * np.diff(psi.values, axis=0) / grid.dz
    return VectorField3D(grid, vertical, grid.ik1 * psi.values, grid.ik2 * psi.values)


def horizontal_divergence(u: VectorField3D) -> np.ndarray:
    """ik . u_h on the nodes (spectral array)."""
    return u.grid.ik1 * u.h1 + u.grid.ik2 * u.h2


def div(u: VectorField3D) -> ScalarField3D:
    """
    Discrete divergence on the nodes.

    Interior nodes use the staggered vertical difference. The two end nodes
    are extrapolated linearly from their two interior neighbours.
    """
    grid = u.grid
    result = horizontal_divergence(u)
    result[1:-1] += np.diff(u.vertical, axis=0) / grid.dz
    result[0] = 2.0 * result[1] - result[2]
    result[-1] = 2.0 * result[-2] - result[-3]
    return ScalarField3D(grid, result)


def L_lambda_apply(psi: ScalarField3D, profile: Optional[LambdaProfile] = None) -> ScalarField3D:
    """L_lambda psi = div(grad_lambda psi)."""
    return div(grad_lambda(psi, profile))


# ----------------------------------------------------------------------
# Horizontal multipliers
# ----------------------------------------------------------------------


def _has_mean(field: Field) -> bool:
    """True when a k = 0 coefficient is nonzero relative to the field size."""
    if isinstance(field, VectorField3D):
        arrays = (field.vertical, field.h1, field.h2)
    else:
        arrays = (field.values,)
    scale = max(float(np.max(np.abs(a))) for a in arrays)
    if scale == 0.0:
        return False
    mean = max(float(np.max(np.abs(a[..., 0, 0]))) for a in arrays)
    return mean > GAUGE_TOLERANCE * scale


def check_gauge(field: Field) -> None:
    """Raise GaugeViolationError when the field carries a horizontal mean."""
    if _has_mean(field):
        raise GaugeViolationError(
            "negative horizontal powers need the k = 0 coefficient to vanish at every level"
        )


def fractional_multiplier(grid: Grid3D, s: float) -> np.ndarray:
    """Symbol |k|^(2s) of the horizontal power Delta^s, set to zero at k = 0 for s != 0."""
    if abs(s) > MAX_FRACTIONAL_EXPONENT:
        raise InvalidParameterError(
            f"fractional exponent must satisfy |s| <= {MAX_FRACTIONAL_EXPONENT}, got {s}"
        )
    if s == 0:
        return np.ones(grid.spectral_shape)
    multiplier = np.zeros(grid.spectral_shape)
    nonzero = grid.k_abs > 0
    multiplier[nonzero] = grid.k_abs[nonzero] ** (2.0 * s)
    return multiplier


def fractional_horizontal(field: Field, s: float) -> Field:
    """
    Apply the horizontal power Delta^s with symbol |k|^(2s).

    Args:
        field: Scalar, vector or surface field.
        s: Exponent with |s| <= 3.

    Returns:
        Field of the same type.

    Raises:
        GaugeViolationError: s < 0 and the field has a k = 0 component.
    """
    multiplier = fractional_multiplier(field.grid, s)
    if s < 0:
        check_gauge(field)
    return field.map_spectral(lambda c: c * multiplier)


def mollifier_multiplier(grid: Grid3D, delta: float) -> np.ndarray:
    """Gaussian symbol exp(-delta^2 |k|^2 / 2)."""
    if delta < 0:
        raise InvalidParameterError(f"mollification length must be >= 0, got {delta}")
    return np.exp(-0.5 * delta ** 2 * grid.k_squared)


def mollify(field: Field, delta: float) -> Field:
    """
    Horizontal mollification by a unit-mass Gaussian of width delta.

    delta = 0 returns the field unchanged.
    """
    if delta < 0:
        raise InvalidParameterError(f"mollification length must be >= 0, got {delta}")
    if delta == 0:
        return field
    multiplier = mollifier_multiplier(field.grid, delta)
    return field.map_spectral(lambda c: c * multiplier)


def mollifier_kernel_norms(grid: Grid3D, delta: float) -> Dict[str, float]:
    """
    L2 norms of the periodic Gaussian kernel and of its horizontal gradient.

    The kernel has coefficients m(k)/area, so both norms follow from
    Parseval over every stored mode.

    Returns:
        Dictionary with "kernel_l2", "kernel_grad_l2" and "bound_shape"
        (1/delta^2 + 1/delta).
    """
    if not delta > 0:
        raise InvalidParameterError(f"kernel norms need delta > 0, got {delta}")
    multiplier = mollifier_multiplier(grid, delta)
    weights = grid.mode_weight * multiplier ** 2 / grid.area
    return {
        "kernel_l2": float(np.sqrt(np.sum(weights))),
        "kernel_grad_l2": float(np.sqrt(np.sum(weights * grid.k_squared))),
        "bound_shape": 1.0 / delta ** 2 + 1.0 / delta,
    }


# ----------------------------------------------------------------------
# Traces
# ----------------------------------------------------------------------


def trace_gamma0(field: ScalarField3D) -> SurfaceField2D:
    """Value at z = 0."""
    return field.level(0)


def half_cell_closure(
    first_vertical: np.ndarray,
    surface_horizontal_divergence: np.ndarray,
    first_divergence: np.ndarray,
    second_divergence: np.ndarray,
    dz: float,
) -> np.ndarray:
    """
    Minus the vertical flux at z = 0, closing the half cell [0, dz/2].

    The vertical component at the first half-node is corrected by the
    vertical derivative over the half cell, taken from the divergence
    extrapolated to z = 0 minus the horizontal divergence there. Linear in
    all four inputs; the Neumann solver builds its boundary row from it.
    """
    extrapolated = 2.0 * first_divergence - second_divergence
    return -(first_vertical + 0.5 * dz * surface_horizontal_divergence - 0.5 * dz * extrapolated)


def trace_gamma_nu(u: VectorField3D) -> SurfaceField2D:
    """
    Normal trace: minus the vertical component of u at z = 0.

    Second order. Together with div it satisfies
    <u, grad chi> = -<div u, chi> + area * sum_k w gamma_nu(u) conj(chi(0))
    exactly for every chi vanishing at Z_max. The vertical component
    already carries lambda.
    """
    grid = u.grid
    divergence = div(u).values
    values = half_cell_closure(
        u.vertical[0],
        horizontal_divergence(u)[0],
        divergence[1],
        divergence[2],
        grid.dz,
    )
    return SurfaceField2D(grid, values)


# ----------------------------------------------------------------------
# Inner products and norms
# ----------------------------------------------------------------------


def inner_product(a: Union[ScalarField3D, VectorField3D], b: Union[ScalarField3D, VectorField3D]) -> float:
    """
    Discrete L2 inner product over the truncated half space.

    Node quantities use trapezoid weights in z, half-node quantities the
    midpoint rule; horizontally the spectral pairing is exact.
    """
    grid = a.grid
    if isinstance(a, VectorField3D) and isinstance(b, VectorField3D):
        vertical = grid.dz * np.sum(grid.spectral_pairing(a.vertical, b.vertical))
        horizontal = grid.spectral_pairing(a.h1, b.h1) + grid.spectral_pairing(a.h2, b.h2)
        return float(vertical + np.dot(grid.node_weights, horizontal))
    return float(np.dot(grid.node_weights, grid.spectral_pairing(a.values, b.values)))


def surface_inner_product(a: SurfaceField2D, b: SurfaceField2D) -> float:
    return float(a.grid.spectral_pairing(a.values, b.values))


def norm_L2_3d(field: Union[ScalarField3D, VectorField3D]) -> float:
    return float(np.sqrt(max(inner_product(field, field), 0.0)))


def norm_fractional_surface(surface: SurfaceField2D, s: float) -> float:
    """
    Homogeneous norm ||surface||_{H^s dot} with weight |k|^s.

    Raises GaugeViolationError for s < 0 when the k = 0 coefficient is nonzero.
    """
    grid = surface.grid
    if s < 0:
        check_gauge(surface)
    weight = fractional_multiplier(grid, 0.5 * s)
    return float(np.sqrt(grid.spectral_pairing(weight * surface.values, weight * surface.values)))


def norm_sobolev_surface(surface: SurfaceField2D, s: float) -> float:
    """Inhomogeneous norm with weight (1 + |k|^2)^(s/2)."""
    grid = surface.grid
    weight = (1.0 + grid.k_squared) ** (0.5 * s)
    return float(np.sqrt(grid.spectral_pairing(weight * surface.values, weight * surface.values)))


def norm_fractional_3d(field: Union[ScalarField3D, VectorField3D], s: float) -> float:
    """L2 in z of the homogeneous H^s norm in x."""
    if s < 0:
        check_gauge(field)
    return norm_L2_3d(fractional_horizontal(field, 0.5 * s))


def norm_interior_L2(field: ScalarField3D, s: float = 0.0) -> float:
    """
    L2 in z over grid.interior_weights of the homogeneous H^s norm in x.

    Used for div and L_lambda outputs, whose end nodes are extrapolated
    rather than computed from a staggered difference.
    """
    grid = field.grid
    if s < 0:
        check_gauge(field)
    weighted = fractional_multiplier(grid, 0.5 * s) * field.values
    levels = grid.spectral_pairing(weighted, weighted)
    return float(np.sqrt(max(np.dot(grid.interior_weights, levels), 0.0)))


def _physical_magnitude(field: Union[ScalarField3D, VectorField3D]) -> np.ndarray:
    """Pointwise |field| on the nodes, shape (N_z+1, N_y, N_x)."""
    if isinstance(field, ScalarField3D):
        return np.abs(field.physical())
    grid = field.grid
    vertical = grid.to_physical(half_to_nodes(field.vertical))
    h1 = grid.to_physical(field.h1)
    h2 = grid.to_physical(field.h2)
    return np.sqrt(vertical ** 2 + h1 ** 2 + h2 ** 2)


def _horizontal_lp(grid: Grid3D, magnitude: np.ndarray, p: float) -> np.ndarray:
    """L^p over the torus of each leading slice, by collocation."""
    if np.isinf(p):
        return magnitude.max(axis=(-2, -1))
    cell = grid.area / (grid.n_x * grid.n_y)
    return (cell * np.sum(magnitude ** p, axis=(-2, -1))) ** (1.0 / p)


def norm_mixed(field: Union[ScalarField3D, VectorField3D], p_z: float, p_x: float) -> float:
    """
    Mixed norm L^{p_z}(z; L^{p_x}(x)).

    The horizontal norm is taken level by level on the collocation points,
    then composed with the trapezoid rule in z. Either exponent may be inf.
    """
    grid = field.grid
    levels = _horizontal_lp(grid, _physical_magnitude(field), p_x)
    if np.isinf(p_z):
        return float(levels.max())
    return float(np.dot(grid.node_weights, levels ** p_z) ** (1.0 / p_z))


def norm_Lp_3d(field: Union[ScalarField3D, VectorField3D], p: float) -> float:
    return norm_mixed(field, p, p)


def norm_sup_z_L2(field: Union[ScalarField3D, VectorField3D]) -> float:
    """max over nodes of the horizontal L2 norm."""
    return norm_mixed(field, np.inf, 2.0)


def norm_surface_Lp(surface: SurfaceField2D, p: float) -> float:
    return float(_horizontal_lp(surface.grid, np.abs(surface.physical()), p))


def relative_difference(a: Union[ScalarField3D, VectorField3D], b: Union[ScalarField3D, VectorField3D]) -> float:
    """||a - b|| / ||b||, or ||a - b|| when b vanishes."""
    scale = norm_L2_3d(b)
    gap = norm_L2_3d(a - b)
    return gap / scale if scale > 0 else gap
