"""
Discretization geometry for the 2-D parallel-beam Radon transform.

Coordinates are always normalized to the square [-1, 1]^2 (image) and
[0, pi[ x ]-1, 1[ (sinogram). Physical units only appear as an output
scaling factor in the CLI.

Conventions:
- Image pixels X_ij with centers x_ij = ((i+1/2)dx - 1, (j+1/2)dx - 1),
  i = x-index, j = y-index.
- Detector pixels S_p with centers s_p = (p+1/2)ds - 1.
- Angular pixels Phi_q with widths |Phi_q|; equispaced full-range sets use
  the uniform width pi/n_phi.
- Images are stored row-major with entry [i*n_x + j] = f_ij, sinograms with
  entry [q*n_s + p] = g_qp.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

WIDTH_SUM_TOLERANCE = 1e-12


class GeometryError(ValueError):
    """Invalid discretization parameters or out-of-range indices."""


# ----------------------------
# Angle sets
# ----------------------------

@dataclass(frozen=True)
class FullEquispaced:
    """phi_q = q*pi/n_phi over the full range [0, pi[."""
    n_phi: int


@dataclass(frozen=True)
class Limited:
    """n_phi angles at the cell midpoints of the interval [a, b[."""
    a: float
    b: float
    n_phi: int


@dataclass(frozen=True)
class Explicit:
    """Arbitrary strictly increasing angles in [0, pi[ (radians)."""
    angles: Tuple[float, ...]

    def __init__(self, angles: Sequence[float]):
        object.__setattr__(self, "angles", tuple(float(a) for a in angles))


AngleSetKind = Union[FullEquispaced, Limited, Explicit]


def _literal_widths(angles: Sequence[float], lo: float, hi: float) -> Tuple[float, ...]:
    """Widths of Phi_q = [(phi_{q-1}+phi_q)/2, (phi_q+phi_{q+1})/2[ with boundary cells clipped to [lo, hi[."""
    n = len(angles)
    if n == 1:
        return (hi - lo,)
    edges = [lo]
    for q in range(n - 1):
        edges.append(0.5 * (angles[q] + angles[q + 1]))
    edges.append(hi)
    return tuple(edges[q + 1] - edges[q] for q in range(n))


def _check_angles(angles: Sequence[float], lo: float = 0.0, hi: float = math.pi) -> None:
    for q, phi in enumerate(angles):
        if not math.isfinite(phi) or phi < lo or phi >= hi:
            raise GeometryError(f"angle #{q} = {phi!r} outside [{lo}, {hi}[")
        if q > 0 and phi <= angles[q - 1]:
            raise GeometryError(
                f"angles must be strictly increasing (angle #{q} = {phi!r} <= {angles[q - 1]!r})"
            )


# ----------------------------
# Parameters and grids
# ----------------------------

@dataclass(frozen=True)
class DiscretizationParams:
    """
    Resolution parameters delta = (delta_x, delta_phi, delta_s) and the angle set.

    delta_x and delta_s are derived from the pixel counts and never stored.
    """
    n_x: int
    n_s: int
    angles: Tuple[float, ...]
    angular_widths: Tuple[float, ...]
    is_equispaced: bool = False

    @property
    def delta_x(self) -> float:
        return 2.0 / self.n_x

    @property
    def delta_s(self) -> float:
        return 2.0 / self.n_s

    @property
    def n_phi(self) -> int:
        return len(self.angles)

    @property
    def delta_phi(self) -> float:
        return max(self.angular_widths) if self.angular_widths else 0.0

    def angles_array(self) -> np.ndarray:
        return np.asarray(self.angles, dtype=np.float64)

    def widths_array(self) -> np.ndarray:
        return np.asarray(self.angular_widths, dtype=np.float64)


def make_params(n_x: int, n_s: int, angle_set: AngleSetKind) -> DiscretizationParams:
    """Build DiscretizationParams with derived resolutions and angular widths."""
    if int(n_x) != n_x or n_x < 1:
        raise GeometryError(f"n_x must be a positive integer, got {n_x!r}")
    if int(n_s) != n_s or n_s < 1:
        raise GeometryError(f"n_s must be a positive integer, got {n_s!r}")

    if isinstance(angle_set, FullEquispaced):
        n_phi = int(angle_set.n_phi)
        if n_phi < 1:
            raise GeometryError(f"n_phi must be >= 1, got {angle_set.n_phi!r}")
        angles = tuple(q * math.pi / n_phi for q in range(n_phi))
        # uniform widths; L_{phi+pi,s} = L_{phi,-s} closes the range periodically
        widths = (math.pi / n_phi,) * n_phi
        equispaced = True
    elif isinstance(angle_set, Limited):
        a, b, n_phi = float(angle_set.a), float(angle_set.b), int(angle_set.n_phi)
        if not (0.0 <= a < b <= math.pi):
            raise GeometryError(f"limited angle interval requires 0 <= a < b <= pi, got [{a}, {b}[")
        if n_phi < 1:
            raise GeometryError(f"n_phi must be >= 1, got {angle_set.n_phi!r}")
        step = (b - a) / n_phi
        angles = tuple(a + (q + 0.5) * step for q in range(n_phi))
        _check_angles(angles)
        widths = _literal_widths(angles, a, b)
        equispaced = False
    elif isinstance(angle_set, Explicit):
        angles = angle_set.angles
        if not angles:
            raise GeometryError("explicit angle set is empty")
        _check_angles(angles)
        widths = _literal_widths(angles, 0.0, math.pi)
        equispaced = False
    else:
        raise GeometryError(f"unknown angle set {angle_set!r}")

    if any(w <= 0.0 for w in widths):
        raise GeometryError(f"non-positive angular width in {widths!r}")

    params = DiscretizationParams(
        n_x=int(n_x), n_s=int(n_s), angles=tuple(angles), angular_widths=tuple(widths),
        is_equispaced=equispaced,
    )
    logger.debug(
        f"params n_x={params.n_x} n_s={params.n_s} n_phi={params.n_phi} "
        f"dx={params.delta_x:.6g} ds={params.delta_s:.6g} dphi={params.delta_phi:.6g}"
    )
    return params


@dataclass(frozen=True)
class ImageGrid:
    """Cartesian n_x x n_x pixel grid tiling [-1, 1]^2."""
    params: DiscretizationParams

    @property
    def n_x(self) -> int:
        return self.params.n_x

    @property
    def delta_x(self) -> float:
        return self.params.delta_x

    def coordinate(self, i: int) -> float:
        return (i + 0.5) * self.delta_x - 1.0

    def pixel_center(self, i: int, j: int) -> Tuple[float, float]:
        n = self.n_x
        if not (0 <= i < n and 0 <= j < n):
            raise GeometryError(f"pixel index ({i}, {j}) out of range for n_x={n}")
        return (self.coordinate(i), self.coordinate(j))

    def coordinates(self) -> np.ndarray:
        return (np.arange(self.n_x, dtype=np.float64) + 0.5) * self.delta_x - 1.0

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (n_x, n_x), indexed [i, j]."""
        c = self.coordinates()
        return np.meshgrid(c, c, indexing="ij")


@dataclass(frozen=True)
class SinogramGrid:
    """n_phi x n_s grid of angular and detector pixels."""
    params: DiscretizationParams

    @property
    def n_s(self) -> int:
        return self.params.n_s

    @property
    def n_phi(self) -> int:
        return self.params.n_phi

    @property
    def delta_s(self) -> float:
        return self.params.delta_s

    def detector_center(self, p: int) -> float:
        if not 0 <= p < self.n_s:
            raise GeometryError(f"detector index {p} out of range for n_s={self.n_s}")
        return (p + 0.5) * self.delta_s - 1.0

    def detector_centers(self) -> np.ndarray:
        return (np.arange(self.n_s, dtype=np.float64) + 0.5) * self.delta_s - 1.0

    def direction(self, q: int) -> Tuple[float, float]:
        phi = self.params.angles[q]
        return (math.cos(phi), math.sin(phi))

    def perpendicular(self, q: int) -> Tuple[float, float]:
        phi = self.params.angles[q]
        return (-math.sin(phi), math.cos(phi))


# ----------------------------
# Coefficient arrays
# ----------------------------

def _as_finite_vector(values, expected: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64).reshape(-1))
    if arr.size != expected:
        raise GeometryError(f"{what} needs {expected} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    """Pixel coefficients f_ij, row-major with entry [i*n_x + j]."""
    grid: ImageGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_finite_vector(self.values, self.grid.n_x ** 2, "image"))

    @classmethod
    def zeros(cls, grid: ImageGrid) -> "Image":
        return cls(grid, np.zeros(grid.n_x ** 2))

    @classmethod
    def from_array(cls, grid: ImageGrid, array: np.ndarray) -> "Image":
        return cls(grid, np.asarray(array, dtype=np.float64).reshape(-1))

    def as_array(self) -> np.ndarray:
        """View of shape (n_x, n_x) indexed [i, j]."""
        return self.values.reshape(self.grid.n_x, self.grid.n_x)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Sinogram coefficients g_qp, row-major with entry [q*n_s + p]."""
    grid: SinogramGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = self.grid.n_phi * self.grid.n_s
        object.__setattr__(self, "values", _as_finite_vector(self.values, expected, "sinogram"))

    @classmethod
    def zeros(cls, grid: SinogramGrid) -> "Sinogram":
        return cls(grid, np.zeros(grid.n_phi * grid.n_s))

    @classmethod
    def from_array(cls, grid: SinogramGrid, array: np.ndarray) -> "Sinogram":
        return cls(grid, np.asarray(array, dtype=np.float64).reshape(-1))

    def as_array(self) -> np.ndarray:
        """View of shape (n_phi, n_s) indexed [q, p]."""
        return self.values.reshape(self.grid.n_phi, self.grid.n_s)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def width_sum_ok(params: DiscretizationParams, expected: float = math.pi) -> bool:
    return abs(sum(params.angular_widths) - expected) <= WIDTH_SUM_TOLERANCE
