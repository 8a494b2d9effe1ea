"""
Error metrology for sinograms and images.

Norms:
    ||g||^2 = sum_q |Phi_q| ds sum_p g_qp^2     (reduces to dphi*ds*sum g^2 for equispaced sets)
    ||f||^2 = dx^2 sum_ij f_ij^2                 (optionally restricted to |x_ij| <= mask_radius)

Relative errors E(g, g~) = ||g - g~|| / ||g||; per-angle errors use the
same ratio row by row. A truth with zero norm gives None ("undefined").
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from shared.models.geometry import Image, ImageGrid, Sinogram

logger = logging.getLogger(__name__)

DEFAULT_BACKPROJECTION_MASK = 0.95


@dataclass
class ErrorReport:
    global_rel_l2: Optional[float]
    per_angle_rel_l2: List[Optional[float]] = field(default_factory=list)
    worst_angle_rel_l2: Optional[float] = None
    worst_angle_index: Optional[int] = None
    mask_radius: Optional[float] = None

    @property
    def is_defined(self) -> bool:
        return self.global_rel_l2 is not None

    def worst_angle_deg(self, angles: Sequence[float]) -> Optional[float]:
        if self.worst_angle_index is None:
            return None
        return math.degrees(angles[self.worst_angle_index])


def _ratio(num: float, den: float) -> Optional[float]:
    if den == 0.0:
        return None
    return math.sqrt(num) / math.sqrt(den)


def _mask(grid: ImageGrid, mask_radius: Optional[float]) -> np.ndarray:
    if mask_radius is None:
        return np.ones(grid.n_x ** 2, dtype=bool)
    X, Y = grid.centers()
    return (np.hypot(X, Y) <= mask_radius).reshape(-1)


def _sinogram_sq(values: np.ndarray, sino: Sinogram) -> np.ndarray:
    """Per-angle weighted squared norms |Phi_q| ds sum_p v^2."""
    rows = values.reshape(sino.grid.n_phi, sino.grid.n_s)
    params = sino.grid.params
    widths = params.delta_phi if params.is_equispaced else params.widths_array()
    return widths * sino.grid.delta_s * np.sum(rows * rows, axis=1)


def sinogram_norm(sino: Sinogram) -> float:
    return float(math.sqrt(np.sum(_sinogram_sq(sino.values, sino))))


def image_norm(image: Image, mask_radius: Optional[float] = None) -> float:
    sel = image.values[_mask(image.grid, mask_radius)]
    return float(math.sqrt(image.grid.delta_x ** 2 * np.dot(sel, sel)))


def _sinogram_report(truth: Sinogram, candidate: Sinogram) -> ErrorReport:
    diff = truth.values - candidate.values
    truth_sq = _sinogram_sq(truth.values, truth)
    diff_sq = _sinogram_sq(diff, truth)

    per_angle = [_ratio(float(d), float(t)) for d, t in zip(diff_sq, truth_sq)]
    report = ErrorReport(global_rel_l2=_ratio(float(np.sum(diff_sq)), float(np.sum(truth_sq))),
                         per_angle_rel_l2=per_angle)
    defined = [(e, q) for q, e in enumerate(per_angle) if e is not None]
    if defined:
        # ties resolve to the lowest angle index
        worst, idx = max(defined, key=lambda item: (item[0], -item[1]))
        report.worst_angle_rel_l2 = worst
        report.worst_angle_index = idx
    undefined = len(per_angle) - len(defined)
    if undefined:
        logger.debug(f"{undefined} of {len(per_angle)} angles have a zero-norm truth row")
    return report


def _image_report(truth: Image, candidate: Image, mask_radius: Optional[float]) -> ErrorReport:
    sel = _mask(truth.grid, mask_radius)
    diff = (truth.values - candidate.values)[sel]
    ref = truth.values[sel]
    return ErrorReport(
        global_rel_l2=_ratio(float(np.dot(diff, diff)), float(np.dot(ref, ref))),
        mask_radius=mask_radius,
    )


def error_report(truth: Union[Sinogram, Image], candidate: Union[Sinogram, Image],
                 mask_radius: Optional[float] = None) -> ErrorReport:
    """
    Relative L2 errors of candidate against truth on the same grid.

    Sinograms get global, per-angle and worst-angle errors; images get the
    global error over the (optionally masked) pixel set.
    """
    if type(truth) is not type(candidate):
        raise TypeError(f"cannot compare {type(truth).__name__} with {type(candidate).__name__}")
    if truth.values.shape != candidate.values.shape:
        raise ValueError(f"shape mismatch: {truth.values.shape} vs {candidate.values.shape}")
    if isinstance(truth, Sinogram):
        if truth.grid.params.angles != candidate.grid.params.angles:
            raise ValueError("sinograms were sampled at different angles")
        return _sinogram_report(truth, candidate)
    if truth.grid.n_x != candidate.grid.n_x:
        raise ValueError("images live on different grids")
    return _image_report(truth, candidate, mask_radius)


def log_log_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.log(np.asarray(xs, dtype=np.float64))
    y = np.log(np.asarray(ys, dtype=np.float64))
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
