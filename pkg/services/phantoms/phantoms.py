"""
Analytical phantoms: unions of ellipses with additive densities.

Each ellipse has a closed-form line integral, so the sinogram of a phantom
is known exactly at every (phi, s) and serves as ground truth for the
forward projections. The constant sinogram g = value is the ground truth
for backprojections ([R* g](x) = value * total angular range).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from shared.models.geometry import Image, ImageGrid, Sinogram, SinogramGrid

logger = logging.getLogger(__name__)

UNIT_BALL_TOLERANCE = 1e-12


class PhantomError(ValueError):
    """Invalid ellipse parameters or unknown phantom name."""


@dataclass(frozen=True)
class Ellipse:
    """Ellipse with semi-axis a along (cos rotation, sin rotation) and b perpendicular to it."""
    center: Tuple[float, float]
    semi_axes: Tuple[float, float]
    rotation: float = 0.0
    density: float = 1.0

    def __post_init__(self):
        a, b = self.semi_axes
        values = (*self.center, a, b, self.rotation, self.density)
        if not all(math.isfinite(v) for v in values):
            raise PhantomError(f"non-finite ellipse parameter in {self!r}")
        if a <= 0 or b <= 0:
            raise PhantomError(f"semi-axes must be positive, got ({a}, {b})")

    @property
    def area(self) -> float:
        return math.pi * self.semi_axes[0] * self.semi_axes[1]

    def reach(self) -> float:
        """Upper bound on the distance of any ellipse point to the origin."""
        return math.hypot(*self.center) + max(self.semi_axes)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        a, b = self.semi_axes
        cr, sr = math.cos(self.rotation), math.sin(self.rotation)
        dx = np.asarray(x, dtype=np.float64) - self.center[0]
        dy = np.asarray(y, dtype=np.float64) - self.center[1]
        u = (dx * cr + dy * sr) / a
        v = (-dx * sr + dy * cr) / b
        return u * u + v * v <= 1.0

    def chord(self, phi: float, s: np.ndarray) -> np.ndarray:
        """Length of L_{phi,s} inside the ellipse, vectorised over s."""
        a, b = self.semi_axes
        rel = phi - self.rotation
        r2 = (a * math.cos(rel)) ** 2 + (b * math.sin(rel)) ** 2
        shifted = np.asarray(s, dtype=np.float64) - (self.center[0] * math.cos(phi) + self.center[1] * math.sin(phi))
        gap = np.maximum(r2 - shifted * shifted, 0.0)
        return 2.0 * a * b * np.sqrt(gap) / r2


@dataclass(frozen=True)
class EllipsePhantom:
    components: Tuple[Ellipse, ...]
    name: str = "custom"

    def __init__(self, components: Iterable[Ellipse], name: str = "custom"):
        comps = tuple(components)
        if not comps:
            raise PhantomError("phantom needs at least one ellipse")
        for k, e in enumerate(comps):
            if e.reach() > 1.0 + UNIT_BALL_TOLERANCE:
                raise PhantomError(
                    f"ellipse #{k} reaches {e.reach():.6g} from the origin; phantoms must lie in the unit ball"
                )
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "name", name)

    def mass(self) -> float:
        """Integral of the density over the plane."""
        return sum(e.density * e.area for e in self.components)


# ----------------------------
# Raster modes
# ----------------------------

@dataclass(frozen=True)
class PointSample:
    """Density at the pixel center."""


@dataclass(frozen=True)
class MeanValue:
    """Average over k x k stratified samples per pixel."""
    k: int = 4

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise PhantomError(f"MeanValue needs k >= 1, got {self.k!r}")


RasterMode = Union[PointSample, MeanValue]


# ----------------------------
# Built-ins
# ----------------------------

def _ellipse_suite() -> List[Ellipse]:
    return [
        Ellipse((0.0, 0.0), (0.7, 0.7), 0.0, 1.0),
        Ellipse((0.2, -0.1), (0.3, 0.15), math.radians(30.0), 0.5),
        Ellipse((-0.3, 0.3), (0.08, 0.08), 0.0, 2.0),
    ]


def _shepp_logan() -> List[Ellipse]:
    # higher-contrast variant; rows are (density, a, b, x0, y0, rotation in degrees)
    rows = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
        (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
        (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
        (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
        (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
        (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
        (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
        (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
    ]
    return [Ellipse((x0, y0), (a, b), math.radians(rot), rho) for rho, a, b, x0, y0, rot in rows]


_BUILTINS = {
    "ellipse-suite": _ellipse_suite,
    "shepp-logan": _shepp_logan,
}


def builtin_names() -> Tuple[str, ...]:
    return tuple(_BUILTINS) + ("disk:<r>:<density>",)


def is_builtin(name: str) -> bool:
    return name in _BUILTINS or name.startswith("disk:")


def builtin_phantom(name: str) -> EllipsePhantom:
    """Resolve 'ellipse-suite', 'shepp-logan' or 'disk:<r>:<density>'."""
    if name in _BUILTINS:
        return EllipsePhantom(_BUILTINS[name](), name=name)
    if name.startswith("disk:"):
        parts = name.split(":")
        if len(parts) != 3:
            raise PhantomError(f"disk phantom must be written disk:<r>:<density>, got {name!r}")
        try:
            radius, density = float(parts[1]), float(parts[2])
        except ValueError as e:
            raise PhantomError(f"bad disk phantom {name!r}: {e}") from e
        return EllipsePhantom([Ellipse((0.0, 0.0), (radius, radius), 0.0, density)], name=name)
    raise PhantomError(f"unknown phantom {name!r} (built-ins: {', '.join(builtin_names())})")


def from_rows(rows: Sequence[Sequence[float]], name: str = "custom") -> EllipsePhantom:
    """Rows of (cx, cy, a, b, rotation_deg, density)."""
    comps = [Ellipse((cx, cy), (a, b), math.radians(rot), rho) for cx, cy, a, b, rot, rho in rows]
    return EllipsePhantom(comps, name=name)


# ----------------------------
# Evaluation
# ----------------------------

def evaluate(phantom: EllipsePhantom, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Total density at the given points (sum over containing ellipses)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros(np.broadcast(x, y).shape)
    for e in phantom.components:
        out += np.where(e.contains(x, y), e.density, 0.0)
    return out


def rasterize(phantom: EllipsePhantom, grid: ImageGrid, mode: RasterMode = PointSample()) -> Image:
    X, Y = grid.centers()
    if isinstance(mode, PointSample):
        return Image.from_array(grid, evaluate(phantom, X, Y))
    if not isinstance(mode, MeanValue):
        raise PhantomError(f"unknown raster mode {mode!r}")

    k = int(mode.k)
    offsets = ((np.arange(k) + 0.5) / k - 0.5) * grid.delta_x
    acc = np.zeros_like(X)
    for ox in offsets:
        for oy in offsets:
            acc += evaluate(phantom, X + ox, Y + oy)
    logger.debug("rasterized %s at n_x=%d with %dx%d samples", phantom.name, grid.n_x, k, k)
    return Image.from_array(grid, acc / (k * k))


def line_integral(phantom: EllipsePhantom, phi: float, s: np.ndarray) -> np.ndarray:
    """[R f](phi, s), vectorised over s."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros(s.shape)
    for e in phantom.components:
        out += e.density * e.chord(phi, s)
    return out


def analytic_sinogram(phantom: EllipsePhantom, sino_grid: SinogramGrid) -> Sinogram:
    """Exact Radon transform sampled at (phi_q, s_p)."""
    s = sino_grid.detector_centers()
    rows = np.empty((sino_grid.n_phi, sino_grid.n_s))
    for q, phi in enumerate(sino_grid.params.angles):
        rows[q] = line_integral(phantom, phi, s)
    return Sinogram.from_array(sino_grid, rows)


def constant_sinogram(sino_grid: SinogramGrid, value: float = 1.0) -> Sinogram:
    return Sinogram(sino_grid, np.full(sino_grid.n_phi * sino_grid.n_s, float(value)))


def constant_backprojection(img_grid: ImageGrid, sino_grid: SinogramGrid, value: float = 1.0) -> Image:
    """[R* g] for g = value: value times the covered angular range (pi for full angle sets)."""
    angular_range = float(sum(sino_grid.params.angular_widths))
    return Image(img_grid, np.full(img_grid.n_x ** 2, float(value) * angular_range))
