"""
Weight functions of the ray-driven and pixel-driven discretizations.

A matrix entry is a weight function evaluated at a geometrically meaningful
offset: A[qp, ij] = dx^2 * w(phi_q, x_ij . theta_q - s_p).

- Ray-driven: trapezoid in t with plateau kappa(phi)/dx on |t| < s_lo(phi),
  linear ramp to zero at s_hi(phi); for axis-aligned angles a box with half
  height on the two edges (shared pixel edges count half to each pixel).
- Pixel-driven: hat function max(ds - |t|, 0)/ds^2, independent of phi.

The numba kernels (_ray_kernel, _pixel_kernel, _weight) are shared by the
matrix-free operators, the dense assembly and the oracles so that every code
path evaluates bitwise the same weight.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numba as nb
import numpy as np

logger = logging.getLogger(__name__)

# phi is treated as a multiple of pi/2 when min(|sin|, |cos|) is below this
AXIS_TOLERANCE = 1e-12

# |t| within this of a support edge counts as on the edge (grid offsets carry a few ulp)
EDGE_TOLERANCE = 1e-12

KIND_RAY = 0
KIND_PIXEL = 1


class WeightKind(str, Enum):
    RAY_DRIVEN = "ray"
    PIXEL_DRIVEN = "pixel"

    @property
    def code(self) -> int:
        return KIND_RAY if self is WeightKind.RAY_DRIVEN else KIND_PIXEL

    @classmethod
    def parse(cls, value: "str | WeightKind") -> "WeightKind":
        if isinstance(value, WeightKind):
            return value
        key = str(value).strip().lower()
        aliases = {"ray": cls.RAY_DRIVEN, "rd": cls.RAY_DRIVEN, "ray-driven": cls.RAY_DRIVEN,
                   "pixel": cls.PIXEL_DRIVEN, "pd": cls.PIXEL_DRIVEN, "pixel-driven": cls.PIXEL_DRIVEN}
        if key not in aliases:
            raise ValueError(f"unknown weight kind {value!r} (expected ray|pixel)")
        return aliases[key]


@dataclass(frozen=True)
class RayGeometryCache:
    """Per-angle constants of the ray-driven weight for one delta_x."""
    phi: float
    delta_x: float
    cos_phi: float
    sin_phi: float
    s_lo: float
    s_hi: float
    kappa: float
    axis_aligned: bool

    @classmethod
    def build(cls, phi: float, delta_x: float) -> "RayGeometryCache":
        c, s = math.cos(phi), math.sin(phi)
        ac, as_ = abs(c), abs(s)
        if min(ac, as_) < AXIS_TOLERANCE:
            half = 0.5 * delta_x
            return cls(phi, delta_x, c, s, half, half, 1.0, True)
        return cls(
            phi=phi,
            delta_x=delta_x,
            cos_phi=c,
            sin_phi=s,
            s_lo=0.5 * delta_x * abs(ac - as_),
            s_hi=0.5 * delta_x * (ac + as_),
            kappa=min(1.0 / ac, 1.0 / as_),
            axis_aligned=False,
        )

    @property
    def plateau(self) -> float:
        return self.kappa / self.delta_x

    @property
    def ramp(self) -> float:
        """Slope factor 1/(dx^2 |cos sin|); zero for axis-aligned angles."""
        if self.axis_aligned:
            return 0.0
        return 1.0 / (self.delta_x * self.delta_x * abs(self.cos_phi * self.sin_phi))


# ----------------------------
# numba kernels
# ----------------------------

@nb.njit(cache=True, inline="always")
def _ray_kernel(t, delta_x, s_lo, s_hi, plateau, ramp, axis):
    a = abs(t)
    if axis:
        if a < s_hi - EDGE_TOLERANCE:
            return 1.0 / delta_x
        if a <= s_hi + EDGE_TOLERANCE:
            return 0.5 / delta_x
        return 0.0
    if a < s_lo:
        return plateau
    if a < s_hi:
        return (s_hi - a) * ramp
    return 0.0


@nb.njit(cache=True, inline="always")
def _pixel_kernel(t, delta_s):
    a = abs(t)
    if a >= delta_s - EDGE_TOLERANCE:
        return 0.0
    return (delta_s - a) / (delta_s * delta_s)


@nb.njit(cache=True, inline="always")
def _weight(kind, t, delta_x, delta_s, s_lo, s_hi, plateau, ramp, axis):
    if kind == 0:
        return _ray_kernel(t, delta_x, s_lo, s_hi, plateau, ramp, axis)
    return _pixel_kernel(t, delta_s)


@nb.njit(cache=True)
def _weight_values(kind, ts, delta_x, delta_s, s_lo, s_hi, plateau, ramp, axis):
    out = np.empty(ts.shape[0])
    for k in range(ts.shape[0]):
        out[k] = _weight(kind, ts[k], delta_x, delta_s, s_lo, s_hi, plateau, ramp, axis)
    return out


# ----------------------------
# Per-angle tables
# ----------------------------

@dataclass(frozen=True)
class AngleTable:
    """
    Per-angle arrays consumed by the kernels.

    c_lo/c_hi hold the support interval of t -> w(phi_q, t) for the selected kind.
    """
    kind: WeightKind
    delta_x: float
    delta_s: float
    cos: np.ndarray
    sin: np.ndarray
    s_lo: np.ndarray
    s_hi: np.ndarray
    plateau: np.ndarray
    ramp: np.ndarray
    axis: np.ndarray
    c_lo: np.ndarray
    c_hi: np.ndarray

    @classmethod
    def build(cls, angles, delta_x: float, delta_s: float, kind: WeightKind) -> "AngleTable":
        kind = WeightKind.parse(kind)
        n = len(angles)
        arrays = {k: np.zeros(n) for k in ("cos", "sin", "s_lo", "s_hi", "plateau", "ramp", "c_lo", "c_hi")}
        axis = np.zeros(n, dtype=np.bool_)
        for q, phi in enumerate(angles):
            cache = RayGeometryCache.build(float(phi), delta_x)
            arrays["cos"][q] = cache.cos_phi
            arrays["sin"][q] = cache.sin_phi
            arrays["s_lo"][q] = cache.s_lo
            arrays["s_hi"][q] = cache.s_hi
            arrays["plateau"][q] = cache.plateau
            arrays["ramp"][q] = cache.ramp
            axis[q] = cache.axis_aligned
            lo, hi = support_interval(kind, cache=cache, delta_s=delta_s)
            arrays["c_lo"][q] = lo
            arrays["c_hi"][q] = hi
        return cls(kind=kind, delta_x=float(delta_x), delta_s=float(delta_s), axis=axis, **arrays)


# ----------------------------
# Public API
# ----------------------------

def ray_weight(cache: RayGeometryCache, delta_x: float, t: float) -> float:
    """Ray-driven weight w_rd(phi, t); cache must have been built for the same delta_x."""
    if cache.delta_x != delta_x:
        raise ValueError(f"cache built for delta_x={cache.delta_x}, called with {delta_x}")
    return float(_ray_kernel(float(t), delta_x, cache.s_lo, cache.s_hi, cache.plateau, cache.ramp,
                             cache.axis_aligned))


def pixel_weight(delta_s: float, t: float) -> float:
    """Pixel-driven hat weight w_pd(t)."""
    if delta_s <= 0:
        raise ValueError(f"delta_s must be positive, got {delta_s}")
    return float(_pixel_kernel(float(t), delta_s))


def weight_values(kind: WeightKind, ts: np.ndarray, phi: float, delta_x: float, delta_s: float) -> np.ndarray:
    """Vectorised evaluation of t -> w(phi, t) for either kind."""
    kind = WeightKind.parse(kind)
    cache = RayGeometryCache.build(phi, delta_x)
    return _weight_values(kind.code, np.ascontiguousarray(ts, dtype=np.float64), delta_x, delta_s,
                          cache.s_lo, cache.s_hi, cache.plateau, cache.ramp, cache.axis_aligned)


def support_interval(kind: WeightKind, cache: Optional[RayGeometryCache] = None,
                     delta_s: Optional[float] = None) -> Tuple[float, float]:
    """Closed interval [c_lo, c_hi] containing the support of t -> w(phi, t)."""
    kind = WeightKind.parse(kind)
    if kind is WeightKind.RAY_DRIVEN:
        if cache is None:
            raise ValueError("ray-driven support needs a RayGeometryCache")
        return (-cache.s_hi, cache.s_hi)
    if delta_s is None:
        raise ValueError("pixel-driven support needs delta_s")
    return (-delta_s, delta_s)


def intersection_length_closed_form(phi: float, s: float, center: Tuple[float, float], delta_x: float) -> float:
    """
    Boundary-corrected length of L_{phi,s} inside the square of side delta_x at center:
    H1(L cap X) - 1/2 H1(L cap boundary X) = dx^2 * w_rd(phi, center . theta - s).
    """
    cache = RayGeometryCache.build(phi, delta_x)
    t = center[0] * cache.cos_phi + center[1] * cache.sin_phi - s
    return delta_x * delta_x * ray_weight(cache, delta_x, t)
