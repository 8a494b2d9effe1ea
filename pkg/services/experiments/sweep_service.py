"""
Convergence sweeps - runs projections over a list of resolutions and
reports relative errors against analytic ground truth.

Sweep kinds:
- forward-balanced     phantom forward projection, n_x = n_s, fixed n_phi
- backproj-constant    backprojection of g = 1, n_x = n_s, fixed n_phi
- backproj-ratio       backprojection of g = 1, n_s = n_x / ratio (ratio = ds/dx)
- backproj-angles      backprojection of g = 1, fixed n_x, increasing n_phi
- backproj-ratio-scan  backprojection of g = 1, fixed n_x, a list of detector counts
"""

from __future__ import annotations

import csv
import logging
import math
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from tqdm import tqdm

from shared.models.database import close_database, initialize_database
from shared.models.geometry import (
    FullEquispaced,
    ImageGrid,
    Limited,
    SinogramGrid,
    make_params,
)
from shared.models.models import SweepRecord
from shared.utils.settings import Settings
from services.experiments.metrics import DEFAULT_BACKPROJECTION_MASK, ErrorReport, error_report
from services.phantoms.phantoms import (
    EllipsePhantom,
    MeanValue,
    PointSample,
    analytic_sinogram,
    constant_backprojection,
    constant_sinogram,
    rasterize,
)
from services.projection.operators import back_project, estimate_work, forward_project
from services.projection.weights import WeightKind

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("n_x", "n_s", "n_phi", "method", "global_rel_l2", "worst_angle_rel_l2", "worst_angle_deg",
               "wall_time_s")
PER_ANGLE_COLUMNS = ("n_x", "n_s", "n_phi", "method", "angle_deg", "rel_l2")
UNDEFINED = "undefined"


class WorkBudgetError(ValueError):
    """A sweep row would exceed the configured work cap."""

    def __init__(self, n_x: int, n_s: int, n_phi: int, estimate: int, cap: float):
        self.n_x, self.n_s, self.n_phi = n_x, n_s, n_phi
        self.estimate = estimate
        self.cap = cap
        super().__init__(
            f"row n_x={n_x} n_s={n_s} n_phi={n_phi} needs ~{estimate:.3e} weight evaluations "
            f"(cap {cap:.3e}; raise RADON_MAX_WORK or --max-work)"
        )


class SweepKind(str, Enum):
    FORWARD_BALANCED = "forward-balanced"
    BACKPROJ_CONSTANT = "backproj-constant"
    BACKPROJ_RATIO = "backproj-ratio"
    BACKPROJ_ANGLES = "backproj-angles"
    BACKPROJ_RATIO_SCAN = "backproj-ratio-scan"

    @property
    def is_forward(self) -> bool:
        return self is SweepKind.FORWARD_BALANCED


@dataclass
class SweepSpec:
    sweep_kind: SweepKind
    resolutions: List[int]
    n_phi: int = 90
    methods: List[WeightKind] = field(default_factory=lambda: [WeightKind.RAY_DRIVEN])
    phantom: Optional[EllipsePhantom] = None
    ratio: float = 1.0                                  # ds/dx
    angle_counts: List[int] = field(default_factory=list)
    detector_counts: List[int] = field(default_factory=list)
    limited: Optional[Tuple[float, float]] = None       # (a, b) in radians
    mask_radius: Optional[float] = DEFAULT_BACKPROJECTION_MASK
    mean_sample: Optional[int] = None
    timing: bool = True

    def __post_init__(self):
        self.sweep_kind = SweepKind(self.sweep_kind)
        self.methods = [WeightKind.parse(m) for m in self.methods]
        self.validate()

    def validate(self) -> None:
        _check_ascending("resolutions", self.resolutions)
        if not self.methods:
            raise ValueError("sweep needs at least one method")
        if self.n_phi < 1:
            raise ValueError(f"n_phi must be >= 1, got {self.n_phi}")
        if not (self.ratio > 0 and math.isfinite(self.ratio)):
            raise ValueError(f"ratio must be positive, got {self.ratio}")
        if self.sweep_kind is SweepKind.BACKPROJ_ANGLES:
            _check_ascending("angle_counts", self.angle_counts)
        if self.sweep_kind is SweepKind.BACKPROJ_RATIO_SCAN:
            _check_ascending("detector_counts", self.detector_counts)
        if self.sweep_kind.is_forward and self.phantom is None:
            raise ValueError("forward sweeps need a phantom")


def _check_ascending(name: str, values: Sequence[int]) -> None:
    if not values:
        raise ValueError(f"{name} must not be empty")
    if any(int(v) != v or v < 1 for v in values):
        raise ValueError(f"{name} must be positive integers, got {list(values)}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly ascending, got {list(values)}")


@dataclass
class SweepRow:
    n_x: int
    n_s: int
    n_phi: int
    method: WeightKind
    report: ErrorReport
    angles: Tuple[float, ...]
    wall_time_s: Optional[float] = None

    @property
    def worst_angle_deg(self) -> Optional[float]:
        return self.report.worst_angle_deg(self.angles)


def _fmt(value: Optional[float]) -> str:
    return UNDEFINED if value is None else format(value, ".17g")


class SweepService:
    """Runs sweeps and writes their results."""

    def __init__(self, settings: Optional[Settings] = None, max_work: Optional[float] = None,
                 progress: Optional[bool] = None):
        self.settings = settings or Settings()
        self.max_work = self.settings.max_work if max_work is None else max_work
        self.progress = self.settings.progress if progress is None else progress
        self.stats: Dict[str, int] = {"rows": 0, "undefined": 0}

    # ----------------------------
    # Planning
    # ----------------------------

    def plan(self, spec: SweepSpec) -> List[Tuple[int, int, int]]:
        """(n_x, n_s, n_phi) per row, in output order."""
        kind = spec.sweep_kind
        configs: List[Tuple[int, int, int]] = []
        for n in spec.resolutions:
            if kind in (SweepKind.FORWARD_BALANCED, SweepKind.BACKPROJ_CONSTANT):
                configs.append((n, n, spec.n_phi))
            elif kind is SweepKind.BACKPROJ_RATIO:
                configs.append((n, max(1, round(n / spec.ratio)), spec.n_phi))
            elif kind is SweepKind.BACKPROJ_ANGLES:
                n_s = max(1, round(n / spec.ratio))
                configs.extend((n, n_s, m) for m in spec.angle_counts)
            elif kind is SweepKind.BACKPROJ_RATIO_SCAN:
                configs.extend((n, n_s, spec.n_phi) for n_s in spec.detector_counts)
        return configs

    def check_budget(self, spec: SweepSpec) -> None:
        for n_x, n_s, n_phi in self.plan(spec):
            est = estimate_work(n_x, n_s, n_phi)
            if est > self.max_work:
                raise WorkBudgetError(n_x, n_s, n_phi, est, self.max_work)

    # ----------------------------
    # Running
    # ----------------------------

    def run(self, spec: SweepSpec) -> List[SweepRow]:
        self.check_budget(spec)
        plan = self.plan(spec)
        logger.info(f"Running {spec.sweep_kind.value} sweep: {len(plan)} configurations x {len(spec.methods)} methods")

        rows: List[SweepRow] = []
        total = len(plan) * len(spec.methods)
        with tqdm(total=total, desc=spec.sweep_kind.value, disable=not self.progress) as bar:
            for n_x, n_s, n_phi in plan:
                for method in spec.methods:
                    row = self._run_row(spec, n_x, n_s, n_phi, method)
                    rows.append(row)
                    self.stats["rows"] += 1
                    if not row.report.is_defined:
                        self.stats["undefined"] += 1
                    logger.debug(
                        f"n_x={n_x} n_s={n_s} n_phi={n_phi} {method.value}: E={_fmt(row.report.global_rel_l2)}"
                    )
                    bar.update(1)
        return rows

    def _params(self, spec: SweepSpec, n_x: int, n_s: int, n_phi: int):
        if spec.limited is not None:
            angle_set = Limited(spec.limited[0], spec.limited[1], n_phi)
        else:
            angle_set = FullEquispaced(n_phi)
        return make_params(n_x, n_s, angle_set)

    def _run_row(self, spec: SweepSpec, n_x: int, n_s: int, n_phi: int, method: WeightKind) -> SweepRow:
        params = self._params(spec, n_x, n_s, n_phi)
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)

        if spec.sweep_kind.is_forward:
            mode = MeanValue(spec.mean_sample) if spec.mean_sample else PointSample()
            image = rasterize(spec.phantom, img_grid, mode)
            truth = analytic_sinogram(spec.phantom, sino_grid)
            t0 = time.perf_counter()
            candidate = forward_project(image, sino_grid, method)
            elapsed = time.perf_counter() - t0
            report = error_report(truth, candidate)
        else:
            sino = constant_sinogram(sino_grid, 1.0)
            truth = constant_backprojection(img_grid, sino_grid, 1.0)
            t0 = time.perf_counter()
            candidate = back_project(sino, img_grid, method)
            elapsed = time.perf_counter() - t0
            report = error_report(truth, candidate, mask_radius=spec.mask_radius)

        return SweepRow(
            n_x=n_x, n_s=n_s, n_phi=n_phi, method=method, report=report, angles=params.angles,
            wall_time_s=elapsed if spec.timing else None,
        )

    # ----------------------------
    # Output
    # ----------------------------

    @staticmethod
    def csv_lines(rows: Sequence[SweepRow]) -> Iterator[List[str]]:
        yield list(CSV_COLUMNS)
        for r in rows:
            worst_deg = r.worst_angle_deg
            yield [
                str(r.n_x), str(r.n_s), str(r.n_phi), r.method.value,
                _fmt(r.report.global_rel_l2),
                "" if r.report.worst_angle_index is None else _fmt(r.report.worst_angle_rel_l2),
                "" if worst_deg is None else _fmt(worst_deg),
                "" if r.wall_time_s is None else format(r.wall_time_s, ".6f"),
            ]

    @staticmethod
    def per_angle_lines(rows: Sequence[SweepRow]) -> Iterator[List[str]]:
        yield list(PER_ANGLE_COLUMNS)
        for r in rows:
            for phi, err in zip(r.angles, r.report.per_angle_rel_l2):
                yield [str(r.n_x), str(r.n_s), str(r.n_phi), r.method.value,
                       _fmt(math.degrees(phi)), _fmt(err)]

    def write_csv(self, rows: Sequence[SweepRow], path: Path) -> None:
        _write_lines(path, self.csv_lines(rows))
        logger.info(f"Wrote {len(rows)} sweep rows to {path}")

    def write_per_angle_csv(self, rows: Sequence[SweepRow], path: Path) -> None:
        _write_lines(path, self.per_angle_lines(rows))
        logger.info(f"Wrote per-angle errors to {path}")

    def record(self, spec: SweepSpec, rows: Sequence[SweepRow], database_url: Optional[str] = None) -> str:
        """Store rows as SweepRecords under a fresh run id; returns the id."""
        run_id = uuid.uuid4().hex
        db = initialize_database(database_url or self.settings.database_url)
        try:
            with db.atomic():
                for r in rows:
                    SweepRecord.create(
                        run_id=run_id,
                        sweep_kind=spec.sweep_kind.value,
                        n_x=r.n_x, n_s=r.n_s, n_phi=r.n_phi,
                        method=r.method.value,
                        global_rel_l2=r.report.global_rel_l2,
                        worst_angle_rel_l2=r.report.worst_angle_rel_l2,
                        worst_angle_deg=r.worst_angle_deg,
                        wall_time_s=r.wall_time_s,
                    )
        finally:
            close_database()
        logger.info(f"Recorded {len(rows)} rows as run {run_id}")
        return run_id


def _write_lines(path: Path, lines: Iterator[List[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(lines)
