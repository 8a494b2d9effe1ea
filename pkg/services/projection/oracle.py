"""
Brute-force references for the weights and operators.

None of these share code paths with the closed-form trapezoid: clipping is
done with the parametric slab method, the brute-force projections visit every
pixel/detector pair without index ranges, and the mass check integrates the
weight numerically. They are slow on purpose and guarded against large sizes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numba as nb
import numpy as np
from scipy import integrate

from shared.models.geometry import Image, ImageGrid, Sinogram, SinogramGrid
from services.projection.operators import INV_SQRT2, SizeGuardError
from services.projection.weights import (
    AXIS_TOLERANCE,
    AngleTable,
    RayGeometryCache,
    WeightKind,
    _weight,
    weight_values,
)

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_NX = 64
QUADRATURE_NODES = 2 ** 20
DEGENERATE_DIRECTION = 1e-15
EDGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ClipResult:
    chord_length: float
    boundary_overlap: float = 0.0

    @property
    def corrected_length(self) -> float:
        """H1(L cap X) - 1/2 H1(L cap boundary X)."""
        return self.chord_length - 0.5 * self.boundary_overlap


def _slab(origin: float, direction: float, lo: float, hi: float, tol: float) -> Tuple[float, float]:
    """Parameter interval of origin + t*direction inside [lo, hi]; (inf, -inf) when empty."""
    if abs(direction) < DEGENERATE_DIRECTION:
        if lo - tol <= origin <= hi + tol:
            return (-math.inf, math.inf)
        return (math.inf, -math.inf)
    t1 = (lo - origin) / direction
    t2 = (hi - origin) / direction
    return (min(t1, t2), max(t1, t2))


def clip_line_square(phi: float, s: float, center: Tuple[float, float], delta_x: float) -> ClipResult:
    """
    Intersect L_{phi,s} = {s*theta + t*theta_perp} with the square of side delta_x at center.
    """
    c, sn = math.cos(phi), math.sin(phi)
    h = 0.5 * delta_x
    tol = EDGE_TOLERANCE * delta_x
    # point of the line at t = 0 and its direction theta_perp = (-sin, cos)
    ox, oy = s * c, s * sn
    tx_lo, tx_hi = _slab(ox, -sn, center[0] - h, center[0] + h, tol)
    ty_lo, ty_hi = _slab(oy, c, center[1] - h, center[1] + h, tol)
    t_lo = max(tx_lo, ty_lo)
    t_hi = min(tx_hi, ty_hi)
    chord = max(0.0, t_hi - t_lo) if math.isfinite(t_lo) and math.isfinite(t_hi) else 0.0

    overlap = 0.0
    if min(abs(c), abs(sn)) < AXIS_TOLERANCE and chord > 0.0:
        offset = s - (center[0] * c + center[1] * sn)
        if abs(abs(offset) - h) <= tol:
            overlap = delta_x
    return ClipResult(chord_length=chord, boundary_overlap=overlap)


# ----------------------------
# brute-force projections
# ----------------------------

@nb.njit(parallel=True, cache=True)
def _brute_forward_kernel(image, kind, delta_x, delta_s, n_s, cos, sin, s_lo, s_hi, plateau, ramp, axis, out):
    n_x = image.shape[0]
    n_phi = cos.shape[0]
    dx2 = delta_x * delta_x
    for row in nb.prange(n_phi * n_s):
        q = row // n_s
        p = row - q * n_s
        s_p = (p + 0.5) * delta_s - 1.0
        c = cos[q]
        s = sin[q]
        val = 0.0
        # same visiting order as the range-restricted kernel
        if abs(c) >= INV_SQRT2:
            for j in range(n_x):
                y = (j + 0.5) * delta_x - 1.0
                for i in range(n_x):
                    x = (i + 0.5) * delta_x - 1.0
                    t = x * c + y * s - s_p
                    val += _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q]) * image[i, j]
        else:
            for i in range(n_x):
                x = (i + 0.5) * delta_x - 1.0
                for j in range(n_x):
                    y = (j + 0.5) * delta_x - 1.0
                    t = x * c + y * s - s_p
                    val += _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q]) * image[i, j]
        out[row] = dx2 * val


@nb.njit(parallel=True, cache=True)
def _brute_backward_kernel(sino, widths, kind, delta_x, delta_s, n_x, cos, sin, s_lo, s_hi, plateau, ramp, axis, out):
    n_phi = sino.shape[0]
    n_s = sino.shape[1]
    for pix in nb.prange(n_x * n_x):
        i = pix // n_x
        j = pix - i * n_x
        x = (i + 0.5) * delta_x - 1.0
        y = (j + 0.5) * delta_x - 1.0
        val = 0.0
        for q in range(n_phi):
            proj = x * cos[q] + y * sin[q]
            for p in range(n_s):
                t = proj - ((p + 0.5) * delta_s - 1.0)
                w = _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q])
                val += widths[q] * w * sino[q, p]
        out[pix] = delta_s * val


def _guard(n_x: int) -> None:
    if n_x > BRUTE_FORCE_MAX_NX:
        raise SizeGuardError(f"brute-force oracle limited to n_x <= {BRUTE_FORCE_MAX_NX}, got {n_x}")


def brute_force_forward(image: Image, sino_grid: SinogramGrid, kind: WeightKind) -> Sinogram:
    """Forward projection summing over every pixel for every (q, p)."""
    kind = WeightKind.parse(kind)
    _guard(image.grid.n_x)
    if not image.is_finite():
        raise ValueError("brute_force_forward: image contains non-finite values")
    tab = AngleTable.build(sino_grid.params.angles, image.grid.delta_x, sino_grid.delta_s, kind)
    out = np.zeros(sino_grid.n_phi * sino_grid.n_s)
    if out.size:
        _brute_forward_kernel(
            image.as_array(), kind.code, image.grid.delta_x, sino_grid.delta_s, sino_grid.n_s,
            tab.cos, tab.sin, tab.s_lo, tab.s_hi, tab.plateau, tab.ramp, tab.axis, out,
        )
    return Sinogram(sino_grid, out)


def brute_force_backward(sino: Sinogram, img_grid: ImageGrid, kind: WeightKind) -> Image:
    """Backprojection summing over every (q, p) for every pixel."""
    kind = WeightKind.parse(kind)
    _guard(img_grid.n_x)
    if not sino.is_finite():
        raise ValueError("brute_force_backward: sinogram contains non-finite values")
    params = sino.grid.params
    tab = AngleTable.build(params.angles, img_grid.delta_x, sino.grid.delta_s, kind)
    out = np.zeros(img_grid.n_x ** 2)
    if sino.grid.n_phi:
        _brute_backward_kernel(
            sino.as_array(), params.widths_array(), kind.code, img_grid.delta_x, sino.grid.delta_s, img_grid.n_x,
            tab.cos, tab.sin, tab.s_lo, tab.s_hi, tab.plateau, tab.ramp, tab.axis, out,
        )
    return Image(img_grid, out)


# ----------------------------
# quadrature
# ----------------------------

def _breakpoints(kind: WeightKind, phi: float, delta_x: float, delta_s: Optional[float]) -> np.ndarray:
    if kind is WeightKind.PIXEL_DRIVEN:
        if delta_s is None:
            raise ValueError("pixel-driven quadrature needs delta_s")
        return np.array([-delta_s, 0.0, delta_s])
    cache = RayGeometryCache.build(phi, delta_x)
    window = delta_x
    return np.unique([-window, -cache.s_hi, -cache.s_lo, cache.s_lo, cache.s_hi, window])


def weight_quadrature(kind: WeightKind, phi: float, delta_x: float, delta_s: Optional[float] = None,
                      n_nodes: int = QUADRATURE_NODES) -> float:
    """
    Trapezoid integral of t -> w(phi, t) over a window enclosing its support.

    The window is split at the kinks and jumps of the weight; on each piece
    the weight is linear, and its end values are taken one ulp inside the
    piece, so jumps (axis-aligned boxes) are integrated without the half value
    at the edge leaking into the neighbouring piece.
    """
    kind = WeightKind.parse(kind)
    ds = delta_x if delta_s is None else delta_s
    edges = _breakpoints(kind, phi, delta_x, delta_s)
    per_piece = max(2, int(n_nodes) // (len(edges) - 1))

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        ts = np.linspace(lo, hi, per_piece + 1)
        samples = ts.copy()
        samples[0] = np.nextafter(lo, hi)
        samples[-1] = np.nextafter(hi, lo)
        total += integrate.trapezoid(weight_values(kind, samples, phi, delta_x, ds), ts)
    return float(total)


def line_integral_quadrature(density: Callable[[float, float], float], phi: float, s: float,
                             half_length: float = math.sqrt(2.0), limit: int = 400,
                             points: Optional[Sequence[float]] = None) -> float:
    """
    Adaptive quadrature of density along L_{phi,s} for t in [-half_length, half_length].

    `points` are line parameters t where the density jumps (e.g. chord ends of
    an ellipse); quad splits the interval there.
    """
    c, sn = math.cos(phi), math.sin(phi)

    def along(t: float) -> float:
        return density(s * c - t * sn, s * sn + t * c)

    breaks = None
    if points is not None:
        breaks = sorted(float(t) for t in points if -half_length < t < half_length) or None
    value, err = integrate.quad(along, -half_length, half_length, limit=limit, epsabs=1e-12, epsrel=1e-12,
                                points=breaks)
    logger.debug("line quadrature phi=%.6g s=%.6g value=%.12g err=%.3g", phi, s, value, err)
    return float(value)
