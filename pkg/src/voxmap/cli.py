"""Command line entry point: benchmarks, method comparison and single runs."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .geometry import load_cloud, load_depth
from .grid import dump_grid
from .pipeline import LocalMapper, MeasurementFrame
from .sim import bench
from .sim.scene import load_scene, make_scene, render_depth, static_trajectory, sweep_trajectory

DEFAULT_POINTS = [0, 1000, 3000, 10000, 30000, 60000, 100000, 150000, 200000, 300000]
DEFAULT_RAYS = [0, 100, 300, 850, 1500, 2500, 4000, 6000, 8500]
DEFAULT_VOXELS = [0, 24000, 67500, 100000, 150000, 200000, 300000, 450000, 675000]


def _int_list(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _config(args):
    cfg = load_config(args.config)
    overrides = {"seed": args.seed} if args.seed is not None else {}
    if args.mode:
        overrides["parallelism"] = "data_parallel" if args.mode == "parallel" else "sequential"
    if getattr(args, "tracer", None):
        overrides["tracer_mode"] = args.tracer
    return replace(cfg, **overrides)


def _scene(args, cfg):
    target = args.scene
    if Path(target).is_file():
        return load_scene(target)
    return make_scene(target, seed=cfg.seed)


def _emit(report: bench.BenchmarkReport, out) -> None:
    if out:
        report.to_csv(out)
        print(f"wrote {len(report.rows)} rows to {out}", file=sys.stderr)
    else:
        report.to_csv(sys.stdout)


def _slope_line(report, label) -> str:
    try:
        slope = bench.loglog_slope(report.column("count"), report.column("median_us"))
    except ValueError as exc:
        return f"{label}: no slope ({exc})"
    return f"{label}: log-log slope over top decade = {slope:.3f}"


def cmd_bench(args) -> int:
    cfg = _config(args)
    sweeps = {
        "bench-points": (bench.sweep_points_benchmark, DEFAULT_POINTS),
        "bench-rays": (bench.sweep_rays_benchmark, DEFAULT_RAYS),
        "bench-voxels": (bench.sweep_voxels_benchmark, DEFAULT_VOXELS),
    }
    fn, default = sweeps[args.command]
    values = _int_list(args.values) if args.values else default
    report = fn(cfg, values, iters=args.iters, warmup=args.warmup)
    _emit(report, args.out)
    print(_slope_line(report, args.command), file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    scene = _scene(args, cfg)
    poses = sweep_trajectory(args.frames) if args.trajectory == "sweep" else static_trajectory(args.frames)
    report, stats = bench.compare_methods(cfg, scene, poses, repeats=args.repeats)
    _emit(report, args.out)
    med = {r["value"]: r["median_us"] for r in report.rows if r["step"] == "trace"}
    stats["trace_speedup"] = med["per_pixel"] / med["bundled"]
    print(json.dumps(stats, indent=2), file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    pose = sweep_trajectory(1)[0]
    if args.depth_image:
        frame = MeasurementFrame(pose, image=load_depth(args.depth_image))
    elif args.cloud:
        frame = MeasurementFrame(pose, cloud=load_cloud(args.cloud))
    else:
        scene = _scene(args, cfg)
        frame = MeasurementFrame(pose, image=render_depth(scene, pose, cfg.camera))
    mapper = LocalMapper(cfg, pose.translation)
    stats = mapper.integrate(frame)
    if args.dump_grid:
        dump_grid(mapper.grid, args.dump_grid)
    summary = {
        "points": stats.n_points,
        "points_out_of_bounds": stats.points_out_of_bounds,
        "rays_traced": stats.trace.rays_traced,
        "occupied": stats.occupied,
        "free": stats.freed,
        "populate_us": round(stats.populate_us, 1),
        "trace_us": round(stats.trace_us, 1),
        "merge_us": round(stats.merge_us, 1),
    }
    print(json.dumps(summary, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--mode", choices=["sequential", "parallel"], help="kernel scheduling")
    common.add_argument("--out", help="CSV output path (default: stdout)")

    timing = argparse.ArgumentParser(add_help=False)
    timing.add_argument("--iters", type=int, default=50, help="timed iterations per row")
    timing.add_argument("--warmup", type=int, default=5, help="untimed warm-up iterations")

    scene = argparse.ArgumentParser(add_help=False)
    scene.add_argument("--scene", default="wall", help="empty | wall | boxes | path to a box file")
    scene.add_argument("--tracer", choices=["bundled", "per-pixel"], help="free-space tracer")

    p = argparse.ArgumentParser(prog="voxmap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, what in (("bench-points", "point counts"), ("bench-rays", "ray counts"), ("bench-voxels", "voxel counts")):
        sp = sub.add_parser(name, parents=[common, timing], help=f"time one step across {what}")
        sp.add_argument("--values", help=f"comma separated {what}")
        sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("compare", parents=[common, scene], help="bundled vs per-pixel tracing")
    sp.add_argument("--frames", type=int, default=20)
    sp.add_argument("--repeats", type=int, default=1, help="replays of the sequence per method")
    sp.add_argument("--trajectory", choices=["sweep", "static"], default="sweep")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("run", parents=[common, scene], help="integrate one frame and dump the grid")
    sp.add_argument("--dump-grid", help="write the local grid in VOXGRID1 format")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--depth-image", help=".pgm (16-bit mm) or .pfm (float m) depth image")
    src.add_argument("--cloud", help="text point cloud, one 'x y z' per line")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"voxmap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
