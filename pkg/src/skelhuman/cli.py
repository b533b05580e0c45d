"""Command line entry point: ``skelhuman <subcommand> ...``.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on I/O
errors that stop the command. ``run`` reports per-frame failures as error
records in its output stream and carries on.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import imaging, skeleton, synthgen
from .config import PipelineConfig
from .errors import ConfigError, SkelHumanError
from .pipeline import analyze_object, extract_object, frame_stream, process_frame, run_pipeline, select_background
from .raster import load_gray, load_mask, save_gray, save_mask

EXIT_USAGE = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def _add_common(p, inputs=True):
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--save-config", type=Path, help="write the effective config here")
    p.add_argument("--out-dir", type=Path, help="directory for rasters and JSON output")
    if inputs:
        p.add_argument("--background", type=Path, action="append", default=[], help="background image (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skelhuman", description="Skeleton-based human shape detection.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("diff", help="write the DIFF mask of a frame against a background")
    _add_common(p)
    p.add_argument("--frame", type=Path, required=True)
    p.add_argument("--format", choices=("png", "pgm"), default="png")

    for name, help_ in (("skeletonize", "write the pruned skeleton raster and graph JSON"),
                        ("features", "write the shape features JSON")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.add_argument("--frame", type=Path)
        p.add_argument("--mask", type=Path, help="binary mask raster instead of background + frame")
        p.add_argument("--format", choices=("png", "pgm"), default="png")

    p = sub.add_parser("detect", help="run the full pipeline on one frame")
    _add_common(p)
    p.add_argument("--frame", type=Path, required=True)
    p.add_argument("--frame-id", type=int, default=0)
    p.add_argument("--timing", action="store_true")

    p = sub.add_parser("run", help="stream reports for a sequence of numbered frames")
    _add_common(p)
    p.add_argument("--frames", type=Path, nargs="+", required=True, help="frame directory or files")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="add per-stage timings to diagnostics")

    p = sub.add_parser("gen", help="render a synthetic figure with ground truth")
    _add_common(p, inputs=False)
    p.add_argument("kind", choices=("humanoid", "quadruped", "box", "car"))
    p.add_argument("--height", type=int, default=160, help="humanoid height / rigid h")
    p.add_argument("--width", type=int, default=100, help="rigid w")
    p.add_argument("--neck-fraction", type=float, default=0.125)
    p.add_argument("--waist-fraction", type=float, default=0.42)
    p.add_argument("--arm-span-fraction", type=float, default=0.30)
    p.add_argument("--thickness", type=int)
    p.add_argument("--pose", choices=[x.value for x in synthgen.Pose], default="ArmsDown")
    p.add_argument("--body-length", type=int, default=120)
    p.add_argument("--leg-length", type=int, default=40)
    p.add_argument("--scale", type=int, default=1, help="integer upscaling of the figure raster")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=int, default=40, help="scene border around the figure")
    return parser


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.save_config:
        cfg.save(args.save_config)
    return cfg


def _need_out_dir(args) -> Path:
    if args.out_dir is None:
        raise UsageError("--out-dir is required for this command")
    return args.out_dir


def _backgrounds(args):
    if not args.background:
        raise UsageError("at least one --background is required")
    return [load_gray(p) for p in args.background]


def _object_mask(args, cfg):
    if args.mask is not None:
        return imaging.largest_object(load_mask(args.mask), cfg.min_area)
    if args.frame is None:
        raise UsageError("give --mask, or --background with --frame")
    backgrounds = _backgrounds(args)
    frame = load_gray(args.frame)
    idx, _ = select_background(backgrounds, frame)
    return extract_object(backgrounds[idx], frame, cfg)[3]


def cmd_diff(args, cfg, out):
    out_dir = _need_out_dir(args)
    backgrounds = _backgrounds(args)
    frame = load_gray(args.frame)
    idx, _ = select_background(backgrounds, frame)
    mask = imaging.diff_mask(backgrounds[idx], frame, cfg.intensity_tolerance)
    path = save_mask(out_dir / f"diff.{args.format}", mask)
    out.write(_dumps({"diff": str(path), "background": idx, "foreground": mask.foreground_count}) + "\n")


def cmd_skeletonize(args, cfg, out):
    out_dir = _need_out_dir(args)
    obj = _object_mask(args, cfg)
    if obj is None:
        raise SkelHumanError("no object reaches min_area")
    graph = skeleton.build_graph(skeleton.thin(obj), cfg.diagonal_cost)
    graph = skeleton.prune(graph, cfg.prune_relative, cfg.prune_absolute)
    raster = save_mask(out_dir / f"skeleton.{args.format}", graph.mask)
    doc = out_dir / "skeleton.json"
    doc.write_text(json.dumps(graph.to_dict()) + "\n")
    out.write(_dumps({"skeleton": str(raster), "graph": str(doc), "branches": len(graph.branches)}) + "\n")


def cmd_features(args, cfg, out):
    obj = _object_mask(args, cfg)
    if obj is None:
        raise SkelHumanError("no object reaches min_area")
    analysis = analyze_object(obj, cfg)
    if analysis.features is None:
        raise SkelHumanError(analysis.note)
    text = _dumps(analysis.features.to_dict())
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "features.json").write_text(text + "\n")
    out.write(text + "\n")


def cmd_detect(args, cfg, out):
    backgrounds = _backgrounds(args)
    frame = load_gray(args.frame)
    result = process_frame(args.frame_id, frame, backgrounds, cfg, timing=args.timing)
    record = result.report.to_dict()
    record["diagnostics"]["movement_alert"] = False
    if args.out_dir is not None:
        idx = record["diagnostics"]["background"]
        diff, _, _, obj = extract_object(backgrounds[idx], frame, cfg)
        save_mask(args.out_dir / "diff.png", diff)
        if obj is not None:
            graph = skeleton.prune(
                skeleton.build_graph(skeleton.thin(obj), cfg.diagonal_cost), cfg.prune_relative, cfg.prune_absolute
            )
            save_mask(args.out_dir / "skeleton.png", graph.mask)
        (args.out_dir / "report.json").write_text(_dumps(record) + "\n")
    out.write(_dumps(record) + "\n")


def cmd_run(args, cfg, out):
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    backgrounds = _backgrounds(args)
    sources = args.frames[0] if len(args.frames) == 1 and args.frames[0].is_dir() else args.frames
    try:
        frames = frame_stream(sources)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for record in run_pipeline(backgrounds, frames, cfg, jobs=args.jobs, timing=args.timing):
        out.write(_dumps(record) + "\n")
        out.flush()


def cmd_gen(args, cfg, out):
    out_dir = _need_out_dir(args)
    if args.kind == "humanoid":
        spec = synthgen.HumanoidSpec(
            height_px=args.height, neck_fraction=args.neck_fraction, waist_fraction=args.waist_fraction,
            arm_span_fraction=args.arm_span_fraction, limb_thickness=args.thickness,
            pose=synthgen.Pose(args.pose),
        )
        truth = synthgen.render_humanoid(spec, seed=args.seed)
    elif args.kind == "quadruped":
        truth = synthgen.render_quadruped(args.body_length, args.leg_length, args.thickness)
    else:
        kind = synthgen.RigidKind.BOX if args.kind == "box" else synthgen.RigidKind.CAR_LIKE
        truth = synthgen.render_rigid(kind, args.width, args.height)
    mask = synthgen.upscale(truth.mask, args.scale) if args.scale > 1 else truth.mask
    out_dir.mkdir(parents=True, exist_ok=True)
    save_mask(out_dir / "figure.png", mask)
    h, w = mask.shape
    m = args.margin
    background = synthgen.make_background(h + 2 * m, w + 2 * m, seed=args.seed)
    frame = synthgen.composite(background, mask, offset=(m, m))
    save_gray(out_dir / "background.png", background)
    save_gray(out_dir / "frame.png", frame)
    doc = truth.to_dict()
    doc["scale"] = args.scale
    doc["offset_in_frame"] = [m, m]
    (out_dir / "truth.json").write_text(json.dumps(doc, indent=2) + "\n")
    out.write(_dumps({"figure": str(out_dir / "figure.png"), "frame": str(out_dir / "frame.png"),
                      "background": str(out_dir / "background.png"), "truth": str(out_dir / "truth.json")}) + "\n")


COMMANDS = {
    "diff": cmd_diff,
    "skeletonize": cmd_skeletonize,
    "features": cmd_features,
    "detect": cmd_detect,
    "run": cmd_run,
    "gen": cmd_gen,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg, out)
    except (UsageError, ConfigError) as exc:
        print(f"skelhuman: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SkelHumanError, ValueError) as exc:
        print(f"skelhuman: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
