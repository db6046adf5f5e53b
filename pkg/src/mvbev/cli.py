"""Command-line surface: project, warp, simulate, fuse, eval, losscheck.

Exit codes: 0 success, 1 usage error, 2 data error. Usage problems print
lines prefixed "usage:" and data problems lines prefixed "error:", both on
stderr. Every random choice is driven by --seed, so identical invocations
produce identical outputs. A JSON config supplied via --config provides
defaults that explicit flags override.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .bev import BEVGridSpec, coordinate_maps, fuse_views, warp_view_to_bev
from .dataset_io import (
    Calibration,
    load_annotations,
    load_calibration_file,
    load_detections,
    load_grid,
    save_grid,
    write_annotations,
    write_calibration,
    write_detections,
)
from .errors import MvbevError, ParseError
from .geometry import PixelHomogeneous, WorldPoint, backproject_to_plane, project_point
from .losses import gradient_check_suite
from .metrics import evaluate
from .sim import (
    PipelineParams,
    SceneConfig,
    default_rig,
    run_geometric_pipeline,
    simulate_frames,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures routed to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"usage: {message}\n")
        raise _UsageError(message)


@dataclass
class RunConfig:
    """Config-file defaults shared by the subcommands."""

    calibration: str | None = None
    annotations: str | None = None
    detections: str | None = None
    output: str | None = None
    grid_shape: tuple[int, int] = (120, 160)
    anchor_size: tuple[float, float] = (0.60, 0.45)
    n_bins: int = 8
    nms_threshold: float = 0.3
    match_radius: float = 0.5
    lambda_bev: float = 3.0
    lambda_2d: float = 1.0
    lambda_ori: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.grid_shape[0] <= 0 or self.grid_shape[1] <= 0:
            raise ParseError(f"grid_shape must be positive, got {self.grid_shape}")
        if self.anchor_size[0] <= 0 or self.anchor_size[1] <= 0:
            raise ParseError(f"anchor_size must be positive, got {self.anchor_size}")
        if self.n_bins < 2:
            raise ParseError(f"n_bins must be at least 2, got {self.n_bins}")
        if not 0.0 <= self.nms_threshold <= 1.0:
            raise ParseError(f"nms_threshold outside [0, 1]: {self.nms_threshold}")
        if self.match_radius <= 0:
            raise ParseError(f"match_radius must be positive: {self.match_radius}")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: invalid JSON: {exc.msg}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ParseError(f"{path}: unknown config keys {sorted(unknown)}")
        for key in ("grid_shape", "anchor_size"):
            if key in doc:
                doc[key] = tuple(doc[key])
        for key in ("calibration", "annotations", "detections"):
            if doc.get(key) is not None and not os.path.exists(doc[key]):
                raise ParseError(f"{path}: {key} path does not exist: {doc[key]}")
        return cls(**doc)


def _pick(flag_value, config_value, default):
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    return default


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return RunConfig.from_file(args.config)
    return RunConfig()


def _grid_from_calibration(calib: Calibration, shape) -> BEVGridSpec:
    return calib.grid_spec(shape=tuple(shape))


def cmd_project(args) -> int:
    cfg = _load_config(args)
    calib_path = _pick(args.calib, cfg.calibration, None)
    if calib_path is None:
        raise _UsageError("project requires --calib")
    calib = load_calibration_file(calib_path)
    cams = {c.view_id: c for c in calib.cameras}
    if args.view not in cams:
        raise ParseError(f"view {args.view} not in calibration "
                         f"(available: {sorted(cams)})")
    cam = cams[args.view]
    if args.point is not None:
        px = project_point(cam, WorldPoint(*args.point))
        print(json.dumps({"u": px.u, "v": px.v}))
    else:
        plane = args.plane_z if args.plane_z is not None else calib.plane_altitude
        u, v = args.pixel
        p = backproject_to_plane(cam, PixelHomogeneous(u, v), plane)
        print(json.dumps({"x": p.x, "y": p.y, "z": p.z}))
    return 0


def cmd_warp(args) -> int:
    cfg = _load_config(args)
    calib = load_calibration_file(_pick(args.calib, cfg.calibration, None))
    cams = {c.view_id: c for c in calib.cameras}
    if args.view not in cams:
        raise ParseError(f"view {args.view} not in calibration")
    grid = _grid_from_calibration(calib, _pick(args.grid_shape, cfg.grid_shape,
                                               (120, 160)))
    feat = load_grid(args.feat)
    warped = warp_view_to_bev(feat, cams[args.view], grid)
    save_grid(args.out, warped)
    return 0


def cmd_fuse(args) -> int:
    cfg = _load_config(args)
    calib = load_calibration_file(_pick(args.calib, cfg.calibration, None))
    grid = _grid_from_calibration(calib, _pick(args.grid_shape, cfg.grid_shape,
                                               (120, 160)))
    grids = [load_grid(path) for path in args.inputs]
    fused = fuse_views(grids, coordinate_maps(grid), mode=args.mode)
    save_grid(args.out, fused)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    seed = _pick(args.seed, cfg.seed, 0)
    site = tuple(args.site) if args.site else (8.0, 4.5)
    scene_cfg = SceneConfig(
        site=site,
        n_objects=args.objects,
        cameras=default_rig(site=site, focal=args.focal,
                            image_size=tuple(args.image_size)),
        seed=seed,
        noise_position=args.noise_pos,
        noise_yaw=args.noise_yaw,
        noise_pixel=args.noise_pixel,
    )
    out = args.out
    os.makedirs(out, exist_ok=True)
    views_dir = os.path.join(out, "views")
    os.makedirs(views_dir, exist_ok=True)
    scenes = simulate_frames(scene_cfg, args.frames)
    write_calibration(os.path.join(out, "calibration.json"),
                      Calibration(cameras=scene_cfg.cameras,
                                  site_extent=scene_cfg.site,
                                  plane_altitude=0.0))
    write_annotations(os.path.join(out, "annotations.json"),
                      [s.annotations for s in scenes])
    for scene in scenes:
        for view in scene.views:
            stem = os.path.join(
                views_dir,
                f"frame_{scene.annotations.frame_id:04d}_view_{view.view_id}")
            save_grid(stem, view)
    if args.with_detections:
        grid = scene_cfg.grid_spec(shape=tuple(_pick(args.grid_shape,
                                                     cfg.grid_shape, (120, 160))))
        params = PipelineParams(n_bins=_pick(None, cfg.n_bins, 8),
                                nms_iou=cfg.nms_threshold,
                                fusion_nms_iou=cfg.nms_threshold)
        sets = [run_geometric_pipeline(s.views, scene_cfg.cameras, grid, params,
                                       frame_id=s.annotations.frame_id)
                for s in scenes]
        write_detections(os.path.join(out, "detections.json"), sets)
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    gt_path = _pick(args.gt, cfg.annotations, None)
    det_path = _pick(args.det, cfg.detections, None)
    if gt_path is None or det_path is None:
        raise _UsageError("eval requires --gt and --det")
    gt = load_annotations(gt_path)
    det = load_detections(det_path)
    report = evaluate(gt, det,
                      radius=_pick(args.radius, cfg.match_radius, 0.5),
                      iou_thresholds=tuple(args.iou),
                      modp_mode=args.modp_mode,
                      ap_points=args.ap_points)
    print(report.format_table())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    return 0


def cmd_losscheck(args) -> int:
    cfg = _load_config(args)
    seed = _pick(args.seed, cfg.seed, 0)
    report = gradient_check_suite(seed=seed, n_points=args.points)
    worst = max(report.values())
    for name, err in report.items():
        print(f"{name:>20}: max relative error {err:.3e}")
    ok = worst < args.tolerance
    print(f"{'PASS' if ok else 'FAIL'}: worst {worst:.3e} "
          f"(tolerance {args.tolerance:.0e})")
    return 0 if ok else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="mvbev", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="project a world point or back-project a pixel")
    p.add_argument("--calib")
    p.add_argument("--config")
    p.add_argument("--view", type=int, default=0)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--point", type=float, nargs=3, metavar=("X", "Y", "Z"))
    group.add_argument("--pixel", type=float, nargs=2, metavar=("U", "V"))
    p.add_argument("--plane-z", type=float, default=None)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("warp", help="warp an image-frame grid onto the BEV raster")
    p.add_argument("--calib")
    p.add_argument("--config")
    p.add_argument("--view", type=int, required=True)
    p.add_argument("--feat", required=True, help="input grid stem or header path")
    p.add_argument("--out", required=True, help="output grid stem")
    p.add_argument("--grid-shape", type=int, nargs=2, metavar=("ROWS", "COLS"))
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("fuse", help="fuse warped BEV grids with coordinate maps")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="input grid stem (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("concat", "sum", "max"), default="concat")
    p.add_argument("--calib")
    p.add_argument("--config")
    p.add_argument("--grid-shape", type=int, nargs=2, metavar=("ROWS", "COLS"))
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("simulate", help="generate a deterministic synthetic dataset")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--site", type=float, nargs=2, metavar=("W", "H"))
    p.add_argument("--image-size", type=int, nargs=2, default=(800, 600),
                   metavar=("W", "H"))
    p.add_argument("--focal", type=float, default=400.0)
    p.add_argument("--noise-pos", type=float, default=0.0)
    p.add_argument("--noise-yaw", type=float, default=0.0)
    p.add_argument("--noise-pixel", type=float, default=0.0)
    p.add_argument("--with-detections", action="store_true",
                   help="also run the geometric pipeline and write detections.json")
    p.add_argument("--grid-shape", type=int, nargs=2, metavar=("ROWS", "COLS"))
    p.add_argument("--config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="evaluate detections against ground truth")
    p.add_argument("--gt")
    p.add_argument("--det")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--iou", type=float, nargs="+", default=[0.25, 0.5])
    p.add_argument("--modp-mode", choices=("distance", "iou"), default="distance")
    p.add_argument("--ap-points", type=int, choices=(11, 40), default=11)
    p.add_argument("--json", help="also write the full report to this path")
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("losscheck", help="finite-difference audit of the losses")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--config")
    p.set_defaults(func=cmd_losscheck)
    return parser


def run_cli(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"usage: {exc}\n")
        return 1
    except (MvbevError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
