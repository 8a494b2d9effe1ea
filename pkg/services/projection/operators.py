"""
Matrix-free convolutional forward projection and backprojection.

forward:  (A f)[qp] = dx^2 * sum_ij w(phi_q, x_ij . theta_q - s_p) f[ij]
backward: (B g)[ij] = ds * sum_q |Phi_q| sum_p w(phi_q, x_ij . theta_q - s_p) g[qp]

Only pixels (detector bins) whose offset can fall into the support
[c_lo, c_hi] of the weight are visited. The candidate index interval comes
from inverting the offset formula, floored/ceiled and widened by one on each
side before clamping, so rounding can only over-cover (zero weights) and never
under-cover.

For the forward projection the loop runs along the axis the ray crosses
most steeply: rows j with an i-interval when |theta_x| >= 1/sqrt(2), columns i
with a j-interval otherwise (theta_x = 0 never reaches the unswapped formula).

Each output entry is accumulated by one worker in ascending index order, so
results do not depend on the thread count.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Iterator, Tuple

import numba as nb
import numpy as np

from shared.models.geometry import (
    DiscretizationParams,
    Image,
    ImageGrid,
    Sinogram,
    SinogramGrid,
)
from services.projection.weights import AngleTable, WeightKind, _weight

logger = logging.getLogger(__name__)

INV_SQRT2 = 1.0 / math.sqrt(2.0)
DENSE_MAX_ENTRIES = 10 ** 8


class SizeGuardError(ValueError):
    """Requested dense/brute-force problem is too large to allocate or loop over."""


@dataclass(frozen=True)
class IndexRange:
    """Inclusive index interval [lo, hi]; empty when lo > hi."""
    lo: int
    hi: int
    swapped: bool = False

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, k: object) -> bool:
        return isinstance(k, (int, np.integer)) and self.lo <= k <= self.hi


@dataclass(frozen=True, eq=False)
class DenseOperatorPair:
    """Explicit matrices A ((n_phi*n_s) x n_x^2) and B (n_x^2 x (n_phi*n_s))."""
    a_matrix: np.ndarray
    b_matrix: np.ndarray
    kind: WeightKind
    params: DiscretizationParams


# ----------------------------
# numba kernels
# ----------------------------

@nb.njit(cache=True, inline="always")
def _clamped(a, b, n):
    lo = a if a < b else b
    hi = b if a < b else a
    ilo = int(math.floor(lo)) - 1
    ihi = int(math.ceil(hi)) + 1
    if ilo < 0:
        ilo = 0
    if ihi > n - 1:
        ihi = n - 1
    return ilo, ihi


@nb.njit(cache=True, inline="always")
def _pixel_range(c_lo, c_hi, s_p, y_fixed, d_run, d_fixed, delta_x, n_x):
    # index along the running axis with coordinate r: r*d_run + y_fixed*d_fixed - s_p in [c_lo, c_hi]
    a = ((c_lo + s_p - y_fixed * d_fixed) / d_run + 1.0) / delta_x - 0.5
    b = ((c_hi + s_p - y_fixed * d_fixed) / d_run + 1.0) / delta_x - 0.5
    return _clamped(a, b, n_x)


@nb.njit(cache=True, inline="always")
def _detector_range(proj, c_lo, c_hi, delta_s, n_s):
    a = (proj - c_hi + 1.0) / delta_s - 0.5
    b = (proj - c_lo + 1.0) / delta_s - 0.5
    return _clamped(a, b, n_s)


@nb.njit(parallel=True, cache=True)
def _forward_kernel(image, kind, delta_x, delta_s, n_s, cos, sin, s_lo, s_hi, plateau, ramp, axis,
                    c_lo, c_hi, out):
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
        if abs(c) >= INV_SQRT2:
            for j in range(n_x):
                y = (j + 0.5) * delta_x - 1.0
                lo, hi = _pixel_range(c_lo[q], c_hi[q], s_p, y, c, s, delta_x, n_x)
                for i in range(lo, hi + 1):
                    x = (i + 0.5) * delta_x - 1.0
                    t = x * c + y * s - s_p
                    w = _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q])
                    val += w * image[i, j]
        else:
            for i in range(n_x):
                x = (i + 0.5) * delta_x - 1.0
                lo, hi = _pixel_range(c_lo[q], c_hi[q], s_p, x, s, c, delta_x, n_x)
                for j in range(lo, hi + 1):
                    y = (j + 0.5) * delta_x - 1.0
                    t = x * c + y * s - s_p
                    w = _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q])
                    val += w * image[i, j]
        out[row] = dx2 * val


@nb.njit(parallel=True, cache=True)
def _backward_kernel(sino, widths, kind, delta_x, delta_s, n_x, cos, sin, s_lo, s_hi, plateau, ramp, axis,
                     c_lo, c_hi, out):
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
            lo, hi = _detector_range(proj, c_lo[q], c_hi[q], delta_s, n_s)
            for p in range(lo, hi + 1):
                s_p = (p + 0.5) * delta_s - 1.0
                t = proj - s_p
                w = _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q])
                val += widths[q] * w * sino[q, p]
        out[pix] = delta_s * val


@nb.njit(parallel=True, cache=True)
def _dense_kernel(n_x, n_s, widths, kind, delta_x, delta_s, cos, sin, s_lo, s_hi, plateau, ramp, axis,
                  a_mat, b_mat):
    n_phi = cos.shape[0]
    dx2 = delta_x * delta_x
    for row in nb.prange(n_phi * n_s):
        q = row // n_s
        p = row - q * n_s
        s_p = (p + 0.5) * delta_s - 1.0
        for i in range(n_x):
            x = (i + 0.5) * delta_x - 1.0
            for j in range(n_x):
                y = (j + 0.5) * delta_x - 1.0
                t = x * cos[q] + y * sin[q] - s_p
                w = _weight(kind, t, delta_x, delta_s, s_lo[q], s_hi[q], plateau[q], ramp[q], axis[q])
                col = i * n_x + j
                a_mat[row, col] = dx2 * w
                b_mat[col, row] = delta_s * widths[q] * w


# ----------------------------
# Public API
# ----------------------------

def configure_threads(n: int) -> int:
    """Cap the number of numba workers; 0 keeps the default. Returns the active count."""
    if n and n > 0:
        nb.set_num_threads(min(int(n), nb.config.NUMBA_NUM_THREADS))
    return nb.get_num_threads()


def estimate_work(n_x: int, n_s: int, n_phi: int) -> int:
    """Rough number of weight evaluations of one forward or back projection."""
    per_pixel_bins = 3 + 2 * math.ceil(n_s / n_x)
    return int(n_phi) * int(n_x) ** 2 * per_pixel_bins


def _table(angles, delta_x: float, delta_s: float, kind: WeightKind) -> AngleTable:
    return AngleTable.build(angles, delta_x, delta_s, kind)


def forward_project(image: Image, sino_grid: SinogramGrid, kind: WeightKind) -> Sinogram:
    """Matrix-free forward projection of the image onto the sinogram grid."""
    kind = WeightKind.parse(kind)
    if not image.is_finite():
        raise ValueError("forward_project: image contains non-finite values")

    n_x = image.grid.n_x
    delta_x = image.grid.delta_x
    delta_s = sino_grid.delta_s
    tab = _table(sino_grid.params.angles, delta_x, delta_s, kind)
    out = np.zeros(sino_grid.n_phi * sino_grid.n_s)

    t0 = time.perf_counter()
    if out.size:
        _forward_kernel(
            image.as_array(), kind.code, delta_x, delta_s, sino_grid.n_s,
            tab.cos, tab.sin, tab.s_lo, tab.s_hi, tab.plateau, tab.ramp, tab.axis, tab.c_lo, tab.c_hi, out,
        )
    logger.debug(
        "forward %s n_x=%d n_s=%d n_phi=%d in %.3fs",
        kind.value, n_x, sino_grid.n_s, sino_grid.n_phi, time.perf_counter() - t0,
    )
    return Sinogram(sino_grid, out)


def back_project(sino: Sinogram, img_grid: ImageGrid, kind: WeightKind) -> Image:
    """Matrix-free backprojection of the sinogram onto the image grid."""
    kind = WeightKind.parse(kind)
    if not sino.is_finite():
        raise ValueError("back_project: sinogram contains non-finite values")

    params = sino.grid.params
    delta_x = img_grid.delta_x
    delta_s = sino.grid.delta_s
    tab = _table(params.angles, delta_x, delta_s, kind)
    out = np.zeros(img_grid.n_x ** 2)

    t0 = time.perf_counter()
    if sino.grid.n_phi:
        _backward_kernel(
            sino.as_array(), params.widths_array(), kind.code, delta_x, delta_s, img_grid.n_x,
            tab.cos, tab.sin, tab.s_lo, tab.s_hi, tab.plateau, tab.ramp, tab.axis, tab.c_lo, tab.c_hi, out,
        )
    logger.debug(
        "backward %s n_x=%d n_s=%d n_phi=%d in %.3fs",
        kind.value, img_grid.n_x, sino.grid.n_s, sino.grid.n_phi, time.perf_counter() - t0,
    )
    return Image(img_grid, out)


def image_index_range(q: int, p: int, fixed: int, kind: WeightKind,
                      img_grid: ImageGrid, sino_grid: SinogramGrid) -> IndexRange:
    """
    Candidate pixels along one grid line for detector pixel (q, p).

    Without swap (|theta_x| >= 1/sqrt(2)) `fixed` is j and the range runs over i;
    with swap `fixed` is i and the range runs over j (IndexRange.swapped).
    """
    kind = WeightKind.parse(kind)
    tab = _table((sino_grid.params.angles[q],), img_grid.delta_x, sino_grid.delta_s, kind)
    c, s = float(tab.cos[0]), float(tab.sin[0])
    s_p = (p + 0.5) * sino_grid.delta_s - 1.0
    coord = (fixed + 0.5) * img_grid.delta_x - 1.0
    if abs(c) >= INV_SQRT2:
        assert c != 0.0
        lo, hi = _pixel_range(tab.c_lo[0], tab.c_hi[0], s_p, coord, c, s, img_grid.delta_x, img_grid.n_x)
        return IndexRange(int(lo), int(hi), swapped=False)
    lo, hi = _pixel_range(tab.c_lo[0], tab.c_hi[0], s_p, coord, s, c, img_grid.delta_x, img_grid.n_x)
    return IndexRange(int(lo), int(hi), swapped=True)


def detector_index_range(i: int, j: int, q: int, kind: WeightKind,
                         img_grid: ImageGrid, sino_grid: SinogramGrid) -> IndexRange:
    """Candidate detector bins p for pixel (i, j) at angle q."""
    kind = WeightKind.parse(kind)
    tab = _table((sino_grid.params.angles[q],), img_grid.delta_x, sino_grid.delta_s, kind)
    x, y = img_grid.pixel_center(i, j)
    proj = x * tab.cos[0] + y * tab.sin[0]
    lo, hi = _detector_range(proj, tab.c_lo[0], tab.c_hi[0], sino_grid.delta_s, sino_grid.n_s)
    return IndexRange(int(lo), int(hi))


def assemble_dense(params: DiscretizationParams, kind: WeightKind) -> DenseOperatorPair:
    """Explicit A and B for small problems (testing only)."""
    kind = WeightKind.parse(kind)
    rows = params.n_phi * params.n_s
    cols = params.n_x ** 2
    if rows * cols > DENSE_MAX_ENTRIES:
        raise SizeGuardError(
            f"dense pair would hold {rows} x {cols} = {rows * cols:.3e} entries (> {DENSE_MAX_ENTRIES:.0e})"
        )
    a_mat = np.zeros((rows, cols))
    b_mat = np.zeros((cols, rows))
    if rows:
        tab = _table(params.angles, params.delta_x, params.delta_s, kind)
        _dense_kernel(
            params.n_x, params.n_s, params.widths_array(), kind.code, params.delta_x, params.delta_s,
            tab.cos, tab.sin, tab.s_lo, tab.s_hi, tab.plateau, tab.ramp, tab.axis, a_mat, b_mat,
        )
    return DenseOperatorPair(a_matrix=a_mat, b_matrix=b_mat, kind=kind, params=params)


def image_inner(f: Image, f2: Image) -> float:
    """<f, f'> = dx^2 sum f f'."""
    return float(f.grid.delta_x ** 2 * np.dot(f.values, f2.values))


def sinogram_inner(g: Sinogram, g2: Sinogram) -> float:
    """<g, g'> = sum_q |Phi_q| ds sum_p g g'."""
    rows = np.sum(g.as_array() * g2.as_array(), axis=1)
    return float(g.grid.delta_s * np.dot(g.grid.params.widths_array(), rows))


def adjoint_inner_products(image: Image, sino: Sinogram, kind: WeightKind) -> Tuple[float, float]:
    """(<A f, g>, <f, B g>); equal up to rounding for matched grids."""
    lhs = sinogram_inner(forward_project(image, sino.grid, kind), sino)
    rhs = image_inner(image, back_project(sino, image.grid, kind))
    return lhs, rhs
