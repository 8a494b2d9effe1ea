"""
Command-line driver: projections, backprojections, phantoms, sweeps, self-checks.

Exit codes: 0 ok, 1 verification failure, 2 usage/validation error, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from shared.models.geometry import (
    Explicit,
    FullEquispaced,
    GeometryError,
    ImageGrid,
    Limited,
    Sinogram,
    SinogramGrid,
    make_params,
)
from shared.utils.settings import Settings, get_settings
from services.cli.formats import FormatError, load_phantom, read_rdk, write_rdk
from services.experiments.metrics import DEFAULT_BACKPROJECTION_MASK, error_report
from services.experiments.sweep_service import SweepKind, SweepService, SweepSpec, WorkBudgetError
from services.experiments.verification import GROUPS, run_verification
from services.phantoms.phantoms import MeanValue, PhantomError, PointSample, analytic_sinogram, rasterize
from services.projection.operators import SizeGuardError, back_project, configure_threads, forward_project
from services.projection.weights import WeightKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(ValueError):
    pass


# ----------------------------
# argument helpers
# ----------------------------

def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _methods(text: str) -> List[WeightKind]:
    try:
        return [WeightKind.parse(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _limited(args) -> Optional[tuple]:
    if not args.limited_deg:
        return None
    if len(args.limited_deg) != 2:
        raise UsageError("--limited-deg takes exactly two values a,b")
    a, b = args.limited_deg
    return (math.radians(a), math.radians(b))


def _angle_set(args, default_n_phi: Optional[int] = None):
    if args.angles_deg:
        if args.limited_deg:
            raise UsageError("--angles-deg and --limited-deg are mutually exclusive")
        return Explicit([math.radians(a) for a in args.angles_deg])
    n_phi = args.nphi if args.nphi is not None else default_n_phi
    if n_phi is None:
        raise UsageError("give --nphi or --angles-deg")
    limited = _limited(args)
    if limited is not None:
        return Limited(limited[0], limited[1], n_phi)
    return FullEquispaced(n_phi)


def _raster_mode(args):
    return MeanValue(args.mean_sample) if args.mean_sample else PointSample()


def _add_angle_args(p: argparse.ArgumentParser, nphi_default: Optional[int] = None) -> None:
    p.add_argument("--nphi", type=int, default=nphi_default, help="number of equispaced angles")
    p.add_argument("--angles-deg", type=_float_list, help="explicit angles in degrees, e.g. 0,45,90")
    p.add_argument("--limited-deg", type=_float_list, help="limited angular range a,b in degrees (with --nphi)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radon-disc",
        description="Ray-driven and pixel-driven Radon transform discretizations",
    )
    parser.add_argument("--threads", type=int, default=None, help="cap numba worker threads")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging and extra output")
    parser.add_argument("--quiet", "-q", action="store_true", help="no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="forward-project a phantom")
    p.add_argument("--phantom", required=True, help="phantom file or built-in name (ellipse-suite, disk:<r>:<d>)")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ns", type=int, required=True)
    _add_angle_args(p)
    p.add_argument("--method", type=WeightKind.parse, default=WeightKind.RAY_DRIVEN)
    p.add_argument("--mean-sample", type=int, default=None, help="k x k supersampled rasterization")
    p.add_argument("--fov", type=float, default=2.0, help="physical width of the image square")
    p.add_argument("--compare", action="store_true", help="print errors against the analytic sinogram")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("backproject", help="backproject an RDK sinogram")
    p.add_argument("sinogram", type=Path)
    p.add_argument("--nx", type=int, required=True)
    _add_angle_args(p)
    p.add_argument("--method", type=WeightKind.parse, default=WeightKind.RAY_DRIVEN)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("phantom", help="rasterize a phantom to an RDK image")
    p.add_argument("--phantom", required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--mean-sample", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("sweep", help="run a convergence sweep")
    p.add_argument("--kind", type=SweepKind, choices=list(SweepKind), required=True)
    p.add_argument("--resolutions", type=_int_list, required=True, help="n_x values, ascending")
    p.add_argument("--nphi", type=int, default=90)
    p.add_argument("--method", type=_methods, default=[WeightKind.RAY_DRIVEN], help="ray, pixel or ray,pixel")
    p.add_argument("--ratio", type=float, default=1.0, help="ds/dx for backproj-ratio and backproj-angles")
    p.add_argument("--angle-counts", type=_int_list, default=[], help="n_phi values for backproj-angles")
    p.add_argument("--detector-counts", type=_int_list, default=[], help="n_s values for backproj-ratio-scan")
    p.add_argument("--limited-deg", type=_float_list, default=None)
    p.add_argument("--phantom", default="ellipse-suite")
    p.add_argument("--mask-radius", type=float, default=DEFAULT_BACKPROJECTION_MASK)
    p.add_argument("--mean-sample", type=int, default=None)
    p.add_argument("--no-timing", action="store_true", help="leave wall_time_s empty")
    p.add_argument("--max-work", type=float, default=None, help="weight evaluations allowed per row")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--per-angle-csv", type=Path, default=None)
    p.add_argument("--record", action="store_true", help="store rows in the sweep database")
    p.add_argument("--db", default=None, help="database URL (default RADON_DATABASE_URL)")

    p = sub.add_parser("verify", help="run the self-check suite")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    p.add_argument("--group", action="append", choices=list(GROUPS), help="run only these groups")

    return parser


# ----------------------------
# commands
# ----------------------------

def cmd_project(args, settings: Settings) -> int:
    phantom = load_phantom(args.phantom)
    params = make_params(args.nx, args.ns, _angle_set(args))
    img_grid, sino_grid = ImageGrid(params), SinogramGrid(params)

    image = rasterize(phantom, img_grid, _raster_mode(args))
    sino = forward_project(image, sino_grid, args.method)
    scale = args.fov / 2.0
    write_rdk(args.out, "sinogram", sino.as_array() * scale)
    print(f"wrote sinogram {params.n_phi}x{params.n_s} ({args.method.value}) to {args.out}")

    if args.verbose:
        masses = params.delta_s * np.sum(sino.as_array(), axis=1) * scale
        for phi, m in zip(params.angles, masses):
            print(f"  phi={math.degrees(phi):10.4f} deg  mass={m:.12g}")
    if args.compare:
        report = error_report(analytic_sinogram(phantom, sino_grid), sino)
        worst_deg = report.worst_angle_deg(params.angles)
        print(f"E={_show(report.global_rel_l2)} E_max={_show(report.worst_angle_rel_l2)} "
              f"worst_angle_deg={_show(worst_deg)}")
    return EXIT_OK


def cmd_backproject(args, settings: Settings) -> int:
    data = read_rdk(args.sinogram, expected_kind="sinogram")
    params = make_params(args.nx, data.cols, _angle_set(args, default_n_phi=data.rows))
    if params.n_phi != data.rows:
        raise UsageError(f"sinogram has {data.rows} angle rows but {params.n_phi} angles were given")
    sino = Sinogram.from_array(SinogramGrid(params), data.values)
    image = back_project(sino, ImageGrid(params), args.method)
    write_rdk(args.out, "image", image.as_array())
    print(f"wrote image {args.nx}x{args.nx} ({args.method.value}) to {args.out}")
    return EXIT_OK


def cmd_phantom(args, settings: Settings) -> int:
    phantom = load_phantom(args.phantom)
    params = make_params(args.nx, args.nx, FullEquispaced(1))
    image = rasterize(phantom, ImageGrid(params), _raster_mode(args))
    write_rdk(args.out, "image", image.as_array())
    print(f"wrote {phantom.name} phantom {args.nx}x{args.nx} to {args.out}")
    return EXIT_OK


def cmd_sweep(args, settings: Settings) -> int:
    kind = SweepKind(args.kind)
    if args.per_angle_csv is not None and not kind.is_forward:
        raise UsageError("--per-angle-csv applies to forward sweeps only")
    spec = SweepSpec(
        sweep_kind=kind,
        resolutions=args.resolutions,
        n_phi=args.nphi,
        methods=args.method,
        phantom=load_phantom(args.phantom) if kind.is_forward else None,
        ratio=args.ratio,
        angle_counts=args.angle_counts,
        detector_counts=args.detector_counts,
        limited=_limited(args),
        mask_radius=args.mask_radius,
        mean_sample=args.mean_sample,
        timing=not args.no_timing,
    )
    service = SweepService(settings, max_work=args.max_work, progress=settings.progress and not args.quiet)
    rows = service.run(spec)
    service.write_csv(rows, args.csv)
    if args.per_angle_csv is not None:
        service.write_per_angle_csv(rows, args.per_angle_csv)
    if args.record:
        run_id = service.record(spec, rows, args.db)
        print(f"recorded run {run_id}")

    for r in rows:
        print(f"n_x={r.n_x:5d} n_s={r.n_s:5d} n_phi={r.n_phi:5d} {r.method.value:5s} "
              f"E={_show(r.report.global_rel_l2)}")
    return EXIT_OK


def cmd_verify(args, settings: Settings) -> int:
    results = run_verification(args.level, args.group)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name} ({r.elapsed_s:.2f}s): {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} group(s) failed: {', '.join(failed)}")
        return EXIT_VERIFY_FAILED
    print(f"all {len(results)} groups passed")
    return EXIT_OK


COMMANDS = {
    "project": cmd_project,
    "backproject": cmd_backproject,
    "phantom": cmd_phantom,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def _show(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.6e}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()

    level = logging.DEBUG if args.verbose else getattr(logging, settings.log_level, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    threads = args.threads if args.threads is not None else settings.threads
    active = configure_threads(threads)
    logger.debug(f"Using {active} worker threads")

    try:
        return COMMANDS[args.command](args, settings)
    except FormatError as e:
        logger.error(f"Parse error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, GeometryError, PhantomError, WorkBudgetError, SizeGuardError, ValueError) as e:
        logger.error(f"Invalid request: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
