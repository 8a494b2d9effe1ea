"""
Self-checks run by `main.py verify`.

Each group compares the production code against an independent reference
(clipping oracle, quadrature, dense matrices, brute-force loops) or checks a
bound that the discretization is known to satisfy. Groups call through the
module objects (weights.*, operators.*) so that a faulty function is caught
wherever it is swapped in.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from shared.models.geometry import (
    Explicit,
    FullEquispaced,
    Image,
    ImageGrid,
    Sinogram,
    SinogramGrid,
    make_params,
)
from services.experiments import metrics
from services.phantoms import phantoms
from services.projection import operators, oracle, weights
from services.projection.weights import WeightKind

logger = logging.getLogger(__name__)

KINDS = (WeightKind.RAY_DRIVEN, WeightKind.PIXEL_DRIVEN)
SEED = 20240611


@dataclass(frozen=True)
class VerificationLevel:
    name: str
    clip_cases: int
    mass_angles: int
    random_configs: int
    adjoint_pairs: int
    norm_images: int
    full_dense_grid: bool


QUICK = VerificationLevel("quick", clip_cases=1000, mass_angles=8, random_configs=100, adjoint_pairs=10,
                          norm_images=20, full_dense_grid=False)
FULL = VerificationLevel("full", clip_cases=10_000, mass_angles=64, random_configs=1000, adjoint_pairs=100,
                         norm_images=100, full_dense_grid=True)
LEVELS = {"quick": QUICK, "full": FULL}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed_s: float = 0.0


class CheckFailure(AssertionError):
    pass


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise CheckFailure(message)


# ----------------------------
# helpers
# ----------------------------

def _axis_distance(phi: float) -> float:
    r = math.fmod(phi, math.pi / 2)
    return min(abs(r), math.pi / 2 - abs(r))


def _random_params(rng: np.random.Generator, max_n: int = 32, max_phi: int = 8, n_s: Optional[int] = None):
    n_x = int(rng.integers(2, max_n + 1))
    n_s = int(rng.integers(2, max_n + 1)) if n_s is None else n_s
    n_phi = int(rng.integers(1, max_phi + 1))
    if rng.random() < 0.5:
        return make_params(n_x, n_s, FullEquispaced(n_phi))
    angles = np.unique(rng.uniform(0.0, math.pi, n_phi))
    return make_params(n_x, n_s, Explicit(angles))


def _scaled_gap(value: np.ndarray, ref: np.ndarray, scale: np.ndarray) -> float:
    """max |value - ref| / (|A||f| scale), guarded against empty or all-zero scale."""
    gap = np.abs(value - ref)
    denom = np.maximum(scale, np.finfo(float).tiny)
    return float(np.max(gap / denom)) if gap.size else 0.0


# ----------------------------
# groups
# ----------------------------

def check_clip_oracle(rng: np.random.Generator, level: VerificationLevel) -> str:
    worst = 0.0
    for k in range(level.clip_cases):
        dx = float(rng.uniform(0.05, 1.0))
        if k % 5 == 4:
            # near-axis angles with the square at the origin
            base = int(rng.integers(0, 4)) * (math.pi / 2)
            phi = base + float(rng.choice([-1.0, 1.0]) * rng.uniform(1e-3, 0.05))
            center = (0.0, 0.0)
        else:
            phi = float(rng.uniform(0.0, math.pi))
            while _axis_distance(phi) < 0.05:
                phi = float(rng.uniform(0.0, math.pi))
            center = (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        proj = center[0] * math.cos(phi) + center[1] * math.sin(phi)
        s = proj + float(rng.uniform(-0.8, 0.8)) * dx
        closed = weights.intersection_length_closed_form(phi, s, center, dx)
        clipped = oracle.clip_line_square(phi, s, center, dx).corrected_length
        gap = abs(closed - clipped) / dx
        worst = max(worst, gap)
        _require(gap <= 1e-12, f"phi={phi!r} s={s!r} center={center} dx={dx}: closed {closed!r} vs oracle {clipped!r}")

    # edge coincidences and corner touches, exact in binary
    for phi in (0.0, math.pi / 2):
        for center in ((0.0, 0.0), (0.25, 0.5)):
            for dx in (1.0, 0.5, 0.25):
                proj = center[0] * math.cos(phi) + center[1] * math.sin(phi)
                for s in (proj - dx / 2, proj + dx / 2):
                    closed = weights.intersection_length_closed_form(phi, s, center, dx)
                    clip = oracle.clip_line_square(phi, s, center, dx)
                    _require(clip.boundary_overlap == dx, f"edge overlap missed at phi={phi} s={s}")
                    _require(abs(closed - clip.corrected_length) <= 1e-12 * dx,
                             f"edge case phi={phi} s={s} center={center}: {closed!r} vs {clip.corrected_length!r}")
    corner = weights.intersection_length_closed_form(math.pi / 4, math.sqrt(2.0) * 0.5, (0.0, 0.0), 1.0)
    _require(abs(corner) <= 1e-12, f"corner touch gives {corner!r}")
    return f"{level.clip_cases} random cases, worst gap {worst:.2e} dx"


def check_weight_mass(rng: np.random.Generator, level: VerificationLevel) -> str:
    phis = [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4] + list(rng.uniform(0.0, math.pi, level.mass_angles))
    worst = 0.0
    for phi in phis:
        dx = float(rng.uniform(0.01, 1.0))
        ds = float(rng.uniform(0.01, 1.0))
        for kind in KINDS:
            mass = oracle.weight_quadrature(kind, float(phi), dx, ds)
            worst = max(worst, abs(mass - 1.0))
            _require(abs(mass - 1.0) <= 1e-10, f"{kind.value} mass at phi={phi!r} dx={dx}: {mass!r}")
    return f"{len(phis)} angles, worst |mass - 1| = {worst:.2e}"


def _dense_grids(rng: np.random.Generator, level: VerificationLevel) -> Iterable[Tuple[int, int, int]]:
    if level.full_dense_grid:
        for n_x in range(1, 17):
            for n_s in range(1, 17):
                yield n_x, n_s, int(rng.integers(1, 9))
    else:
        for n_x, n_s, n_phi in ((1, 1, 1), (2, 2, 1), (4, 7, 3), (8, 8, 8), (5, 16, 4), (16, 4, 2), (16, 16, 8)):
            yield n_x, n_s, n_phi


def check_dense_equivalence(rng: np.random.Generator, level: VerificationLevel) -> str:
    count = 0
    worst = 0.0
    for n_x, n_s, n_phi in _dense_grids(rng, level):
        params = make_params(n_x, n_s, FullEquispaced(n_phi))
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        f = rng.standard_normal(n_x * n_x)
        g = rng.standard_normal(n_phi * n_s)
        for kind in KINDS:
            pair = operators.assemble_dense(params, kind)
            fwd = operators.forward_project(Image(img_grid, f), sino_grid, kind).values
            bwd = operators.back_project(Sinogram(sino_grid, g), img_grid, kind).values
            gap_f = _scaled_gap(fwd, pair.a_matrix @ f, np.abs(pair.a_matrix) @ np.abs(f))
            gap_b = _scaled_gap(bwd, pair.b_matrix @ g, np.abs(pair.b_matrix) @ np.abs(g))
            worst = max(worst, gap_f, gap_b)
            _require(gap_f <= 1e-14 and gap_b <= 1e-14,
                     f"{kind.value} n_x={n_x} n_s={n_s} n_phi={n_phi}: forward gap {gap_f:.2e}, backward gap {gap_b:.2e}")
            count += 1
    return f"{count} grid/method pairs, worst relative gap {worst:.2e}"


def check_brute_force_equivalence(rng: np.random.Generator, level: VerificationLevel) -> str:
    cases = max(4, level.random_configs // 10)
    for _ in range(cases):
        params = _random_params(rng, max_n=24, max_phi=6)
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        f = Image(img_grid, rng.standard_normal(params.n_x ** 2))
        g = Sinogram(sino_grid, rng.standard_normal(params.n_phi * params.n_s))
        for kind in KINDS:
            fast_f = operators.forward_project(f, sino_grid, kind).values
            slow_f = oracle.brute_force_forward(f, sino_grid, kind).values
            fast_b = operators.back_project(g, img_grid, kind).values
            slow_b = oracle.brute_force_backward(g, img_grid, kind).values
            # only zero weights are skipped by the index ranges
            gap = max(float(np.max(np.abs(fast_f - slow_f), initial=0.0)),
                      float(np.max(np.abs(fast_b - slow_b), initial=0.0)))
            _require(np.array_equal(fast_f, slow_f) and np.array_equal(fast_b, slow_b),
                     f"{kind.value} n_x={params.n_x} n_s={params.n_s}: not bitwise equal, gap {gap:.2e}")
    return f"{cases} random grids, bitwise equal"


def _adjoint_shapes() -> List[Tuple[str, int, int]]:
    return [("balanced", 16, 16), ("ds/dx=1/4", 8, 32), ("dx/ds=1/4", 32, 8)]


def check_adjointness(rng: np.random.Generator, level: VerificationLevel) -> str:
    worst = 0.0
    for label, n_x, n_s in _adjoint_shapes():
        params = make_params(n_x, n_s, FullEquispaced(12))
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        for _ in range(level.adjoint_pairs):
            f = Image(img_grid, rng.standard_normal(n_x * n_x))
            g = Sinogram(sino_grid, rng.standard_normal(params.n_phi * n_s))
            for kind in KINDS:
                lhs, rhs = operators.adjoint_inner_products(f, g, kind)
                scale = (metrics.sinogram_norm(operators.forward_project(f, sino_grid, kind)) * metrics.sinogram_norm(g)
                         + metrics.image_norm(f) * metrics.image_norm(operators.back_project(g, img_grid, kind)))
                rel = abs(lhs - rhs) / max(scale, np.finfo(float).tiny)
                worst = max(worst, rel)
                _require(rel <= 1e-12, f"{kind.value} {label}: <Af,g>={lhs!r} <f,Bg>={rhs!r}")
    return f"{level.adjoint_pairs} pairs x 3 shapes x 2 methods, worst relative gap {worst:.2e}"


def check_weight_sums(rng: np.random.Generator, level: VerificationLevel) -> str:
    sqrt8 = math.sqrt(8.0)
    for _ in range(level.random_configs):
        params = _random_params(rng, max_n=48, max_phi=4)
        dx, ds = params.delta_x, params.delta_s
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        X, Y = img_grid.centers()
        s_centers = sino_grid.detector_centers()
        q = int(rng.integers(0, params.n_phi))
        phi = params.angles[q]
        c, sn = math.cos(phi), math.sin(phi)
        proj = (X * c + Y * sn).reshape(-1)

        p = int(rng.integers(0, params.n_s))
        for kind in KINDS:
            total = float(np.sum(weights.weight_values(kind, proj - s_centers[p], phi, dx, ds)))
            if kind is WeightKind.RAY_DRIVEN:
                bound = sqrt8 / dx ** 2
            else:
                bound = math.ceil(ds / dx) * 4 * math.sqrt(2.0) / (dx * ds)
            _require(total <= bound * (1 + 1e-12), f"{kind.value} pixel sum {total!r} exceeds {bound!r} at phi={phi}")

        k = int(rng.integers(0, proj.size))
        if abs(proj[k]) <= 1 - dx / math.sqrt(2.0):
            det_sum = float(np.sum(weights.weight_values(WeightKind.RAY_DRIVEN, proj[k] - s_centers, phi, dx, ds)))
            _require(abs(det_sum - 1 / ds) <= sqrt8 / dx * (1 + 1e-12),
                     f"ray detector sum {det_sum!r} vs 1/ds={1 / ds!r} at phi={phi}")
    return f"{level.random_configs} configurations"


def check_exact_pixel_sum(rng: np.random.Generator, level: VerificationLevel) -> str:
    for _ in range(level.random_configs):
        params = _random_params(rng, max_n=64, max_phi=4)
        dx, ds = params.delta_x, params.delta_s
        sino_grid = SinogramGrid(params)
        s_centers = sino_grid.detector_centers()
        phi = params.angles[int(rng.integers(0, params.n_phi))]
        x = rng.uniform(-1 + dx / 2, 1 - dx / 2, 2)
        proj = float(x[0] * math.cos(phi) + x[1] * math.sin(phi))
        total = float(np.sum(weights.weight_values(WeightKind.PIXEL_DRIVEN, proj - s_centers, phi, dx, ds)))
        if s_centers[0] <= proj <= s_centers[-1]:
            _require(abs(total - 1 / ds) <= 1e-12 / ds, f"pixel detector sum {total!r} != 1/ds at proj={proj!r}")
        else:
            _require(total <= (1 + 1e-12) / ds, f"pixel detector sum {total!r} > 1/ds at proj={proj!r}")

    # zero-order consistency: delta_s * sum_p g_qp is the same for every angle
    params = make_params(64, 64, FullEquispaced(16))
    phantom = phantoms.EllipsePhantom([phantoms.Ellipse((0.1, -0.05), (0.5, 0.35), 0.4, 1.0)])
    image = phantoms.rasterize(phantom, ImageGrid(params))
    spreads = {}
    for kind in KINDS:
        sino = operators.forward_project(image, SinogramGrid(params), kind)
        masses = params.delta_s * np.sum(sino.as_array(), axis=1)
        spreads[kind] = float(np.max(masses) - np.min(masses))
    spread = spreads[WeightKind.PIXEL_DRIVEN]
    _require(spread <= 1e-10, f"pixel-driven projection mass varies by {spread:.2e} over angles")
    # the ray-driven spread is informational only
    return (f"{level.random_configs} points, projection mass spread {spread:.2e} "
            f"(ray-driven {spreads[WeightKind.RAY_DRIVEN]:.2e})")


def check_operator_norm(rng: np.random.Generator, level: VerificationLevel) -> str:
    worst_ratio = 0.0
    for n_x, n_s in ((32, 32), (32, 16), (16, 32), (24, 40)):
        params = make_params(n_x, n_s, FullEquispaced(16))
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        c_ray = params.delta_s / params.delta_x
        c_pix = params.delta_x / params.delta_s
        bounds = {
            WeightKind.RAY_DRIVEN: math.sqrt(math.sqrt(8.0) * math.pi * (1 + math.sqrt(8.0) * c_ray)),
            WeightKind.PIXEL_DRIVEN: math.sqrt(4 * math.sqrt(2.0) * math.pi * (c_pix + 1)),
        }
        for _ in range(level.norm_images):
            f = rng.standard_normal(n_x * n_x)
            img = Image(img_grid, f)
            img = Image(img_grid, f / metrics.image_norm(img))
            for kind, bound in bounds.items():
                norm = metrics.sinogram_norm(operators.forward_project(img, sino_grid, kind))
                worst_ratio = max(worst_ratio, norm / bound)
                _require(norm <= bound, f"{kind.value} ||Af||={norm!r} exceeds {bound!r} (n_x={n_x}, n_s={n_s})")
    return f"largest ||Af|| / bound = {worst_ratio:.3f}"


def check_pixel_backprojection_constant(rng: np.random.Generator, level: VerificationLevel) -> str:
    worst = 0.0
    sizes = ((64, 64, 30), (128, 128, 90)) if level is QUICK else ((128, 128, 30), (128, 500, 90), (500, 128, 30), (500, 500, 90))
    for n_x, n_s, n_phi in sizes:
        params = make_params(n_x, n_s, FullEquispaced(n_phi))
        img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)
        radius = min(0.95, 1 - params.delta_s)
        bp = operators.back_project(phantoms.constant_sinogram(sino_grid, 1.0), img_grid, WeightKind.PIXEL_DRIVEN)
        X, Y = img_grid.centers()
        inside = (np.hypot(X, Y) <= radius).reshape(-1)
        gap = float(np.max(np.abs(bp.values[inside] - math.pi)))
        worst = max(worst, gap)
        _require(gap <= 1e-10, f"n_x={n_x} n_s={n_s} n_phi={n_phi}: max |Bg - pi| = {gap:.2e}")
    return f"{len(sizes)} grids, max |Bg - pi| = {worst:.2e}"


GROUPS: Dict[str, Callable[[np.random.Generator, VerificationLevel], str]] = {
    "clip-oracle": check_clip_oracle,
    "weight-mass": check_weight_mass,
    "dense-equivalence": check_dense_equivalence,
    "brute-force-equivalence": check_brute_force_equivalence,
    "adjointness": check_adjointness,
    "weight-sums": check_weight_sums,
    "exact-pixel-sum": check_exact_pixel_sum,
    "operator-norm": check_operator_norm,
    "pixel-backprojection-constant": check_pixel_backprojection_constant,
}


def run_verification(level: str = "quick", groups: Optional[Iterable[str]] = None, seed: int = SEED) -> List[CheckResult]:
    lvl = LEVELS[level]
    names = list(groups) if groups else list(GROUPS)
    unknown = [n for n in names if n not in GROUPS]
    if unknown:
        raise ValueError(f"unknown verification group(s): {', '.join(unknown)}")

    results: List[CheckResult] = []
    for name in names:
        rng = np.random.default_rng([seed, list(GROUPS).index(name)])
        t0 = time.perf_counter()
        try:
            detail = GROUPS[name](rng, lvl)
            passed = True
        except CheckFailure as e:
            detail = str(e)
            passed = False
        elapsed = time.perf_counter() - t0
        logger.info(f"verify {name}: {'PASS' if passed else 'FAIL'} ({elapsed:.2f}s) {detail}")
        results.append(CheckResult(name=name, passed=passed, detail=detail, elapsed_s=elapsed))
    return results
