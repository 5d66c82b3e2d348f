"""Desk-scale timing sweeps and the bundled vs per-pixel comparison.

Timing: monotonic clock, ``warmup`` untimed rounds, then ``iters`` timed
rounds summarized as min / p25 / median / p75 / max in microseconds. Sweeps
interleave their sizes, one call per size per round.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import CameraModel, PointCloud, RigidTransform, camera_pose
from ..grid import GridSpec, VoxelGrid, VoxelState
from ..integrator import populate_occupied
from ..pipeline import (
    LocalMapper,
    MeasurementFrame,
    PipelineConfig,
    camera_to_grid_transform,
    merge_grids,
)
from ..raytracer import RayBundle, trace_bundle
from .scene import Scene, render_depth

CSV_COLUMNS = [
    "benchmark",
    "step",
    "param",
    "value",
    "count",
    "n_iter",
    "min_us",
    "p25_us",
    "median_us",
    "p75_us",
    "max_us",
]


def summarize(times_us) -> dict:
    t = np.asarray(times_us, dtype=float)
    p25, med, p75 = np.percentile(t, [25, 50, 75])
    return {
        "n_iter": int(t.size),
        "min_us": float(t.min()),
        "p25_us": float(p25),
        "median_us": float(med),
        "p75_us": float(p75),
        "max_us": float(t.max()),
    }


def time_interleaved(cases, iters: int = 50, warmup: int = 5) -> list:
    """Per-call wall times (microseconds) for several ``(fn, setup)`` cases.

    Each round times every case once. A slow spell on the host then spreads
    over all cases instead of skewing whichever one happened to be running,
    and every call starts with caches disturbed by the other cases, much as
    a pipeline step does after its neighbours ran. ``setup`` (may be None)
    runs untimed before each call.
    """
    out = np.empty((len(cases), iters))
    for i in range(warmup + iters):
        for c, (fn, setup) in enumerate(cases):
            if setup is not None:
                setup()
            t0 = time.perf_counter_ns()
            fn()
            dt = time.perf_counter_ns() - t0
            if i >= warmup:
                out[c, i - warmup] = dt / 1e3
    return list(out)


def time_call(fn, setup=None, iters: int = 50, warmup: int = 5) -> np.ndarray:
    """Per-call wall times of ``fn`` in microseconds; ``setup`` runs untimed."""
    return time_interleaved([(fn, setup)], iters, warmup)[0]


@dataclass
class BenchmarkReport:
    benchmark: str
    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add(self, step, param, value, count, times_us) -> dict:
        row = {"benchmark": self.benchmark, "step": step, "param": param, "value": value, "count": count}
        row.update(summarize(times_us))
        self.rows.append(row)
        return row

    def to_csv(self, path_or_stream) -> None:
        if hasattr(path_or_stream, "write"):
            self._write(path_or_stream)
        else:
            with open(path_or_stream, "w", newline="") as f:
                self._write(f)

    def _write(self, f) -> None:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for row in self.rows:
            w.writerow({k: row[k] for k in CSV_COLUMNS})

    def column(self, key, step=None) -> np.ndarray:
        return np.array([r[key] for r in self.rows if step is None or r["step"] == step], dtype=float)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def loglog_slope(x, y, top_decade: bool = True) -> float:
    """Least-squares slope of log(y) against log(x), optionally restricted
    to ``x`` within a factor of ten of its maximum."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if top_decade:
        keep &= x >= x[keep].max() / 10.0
    if keep.sum() < 2:
        raise ValueError("need at least two positive samples for a slope")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def frustum_points(cam: CameraModel, depth: float, n: int, rng) -> np.ndarray:
    """Uniform random camera-frame points inside the viewing frustum."""
    z = rng.uniform(0.2, depth, n)
    x = rng.uniform(-1, 1, n) * math.tan(cam.fov_x / 2) * z
    y = rng.uniform(-1, 1, n) * math.tan(cam.fov_y / 2) * z
    return np.stack([x, y, z], axis=1)


def _standard_setup(cfg: PipelineConfig):
    grid = VoxelGrid(cfg.grid_spec())
    t_vc = camera_to_grid_transform(camera_pose((0.0, 0.0, 0.0)), grid.spec.origin)
    return grid, t_vc


def _noop():
    pass


def sweep_points_benchmark(cfg: PipelineConfig, counts, iters=50, warmup=5) -> BenchmarkReport:
    """Time the occupied-voxel step across point-cloud sizes."""
    rng = np.random.default_rng(cfg.seed)
    grid, t_vc = _standard_setup(cfg)
    clouds = [PointCloud(frustum_points(cfg.camera, cfg.depth, int(n), rng)) for n in counts]

    def reset():
        grid.cells.fill(0)

    cases = [
        (lambda c=c: populate_occupied(grid, c, t_vc, cfg.integrator, parallel=cfg.parallel), reset)
        for c in clouds
    ]
    report = BenchmarkReport("points")
    for n, cloud, times in zip(counts, clouds, time_interleaved(cases, iters, warmup)):
        report.add("populate", "points", int(n), len(cloud), times)
    return report


def bundle_for_rays(n_rays: int, vox_depth: int) -> RayBundle:
    """Square bundle with roughly ``n_rays`` rays at the given depth."""
    half = max(0, int(round((math.sqrt(max(n_rays, 1)) - 1) / 2)))
    return RayBundle(vox_depth, 2 * half + 1, 2 * half + 1)


def sweep_rays_benchmark(cfg: PipelineConfig, ray_counts, iters=50, warmup=5) -> BenchmarkReport:
    """Time bundled tracing across bundle sizes.

    The bundle is widened at fixed depth, i.e. the field of view grows with
    the ray count. Zero rays times an empty call.
    """
    grid, t_vc = _standard_setup(cfg)
    vox_depth = max(1, int(round(cfg.depth / cfg.vox_size)))
    bundles = [bundle_for_rays(int(n), vox_depth) if int(n) else None for n in ray_counts]

    def reset():
        grid.cells.fill(0)

    cases = [
        (lambda b=b: trace_bundle(grid, b, t_vc, parallel=cfg.parallel), reset) if b else (_noop, None)
        for b in bundles
    ]
    report = BenchmarkReport("rays")
    for n, b, times in zip(ray_counts, bundles, time_interleaved(cases, iters, warmup)):
        report.add("trace", "rays", int(n), b.n_rays if b else 0, times)
    return report


def sweep_voxels_benchmark(cfg: PipelineConfig, voxel_counts, iters=50, warmup=5) -> BenchmarkReport:
    """Time the merge step across grid sizes (z extent fixed, x = y)."""
    rng = np.random.default_rng(cfg.seed)
    nz = max(1, int(round(cfg.grid_size[2] / cfg.vox_size)))
    pairs = []
    for n in voxel_counts:
        side = max(1, int(round(math.sqrt(int(n) / nz)))) if int(n) else 0
        if side == 0:
            pairs.append(None)
            continue
        spec = GridSpec.from_size((side * cfg.vox_size, side * cfg.vox_size, nz * cfg.vox_size), cfg.vox_size)
        loc = VoxelGrid(spec, rng.integers(0, 3, spec.n_voxels, dtype=np.uint8))
        ms = VoxelGrid(spec, rng.integers(0, 4, spec.n_voxels, dtype=np.uint8))
        pairs.append((loc, ms))
    cases = [
        (lambda p=p: merge_grids(p[0], p[1], parallel=cfg.parallel), None) if p else (_noop, None)
        for p in pairs
    ]
    times = time_interleaved(cases, iters, warmup)
    report = BenchmarkReport("voxels")
    for n, p, t in zip(voxel_counts, pairs, times):
        report.add("merge", "voxels", int(n), p[0].spec.n_voxels if p else 0, t)
    return report


def render_frames(scene: Scene, poses, cam: CameraModel) -> list[MeasurementFrame]:
    return [
        MeasurementFrame(t_wc=p, image=render_depth(scene, p, cam), timestamp=float(i))
        for i, p in enumerate(poses)
    ]


def run_frames(cfg: PipelineConfig, frames, center=None):
    center = frames[0].t_wc.translation if center is None else center
    mapper = LocalMapper(cfg, center)
    for f in frames:
        mapper.integrate(f)
    return mapper


def agreement(a: VoxelGrid, b: VoxelGrid) -> dict:
    """State agreement between two local grids on the same layout."""
    if not a.spec.same_layout(b.spec):
        raise ValueError("grids cover different extents")
    occ_a = a.cells == VoxelState.OCCUPIED
    occ_b = b.cells == VoxelState.OCCUPIED
    free_a = a.count(VoxelState.FREE)
    free_b = b.count(VoxelState.FREE)
    return {
        "occupied_equal": bool(np.array_equal(occ_a, occ_b)),
        "occupied_a": int(occ_a.sum()),
        "occupied_b": int(occ_b.sum()),
        "free_a": free_a,
        "free_b": free_b,
        "free_ratio": free_a / free_b if free_b else (1.0 if free_a == 0 else math.inf),
        "state_agreement": float(np.mean(a.cells == b.cells)),
    }


def compare_methods(
    cfg: PipelineConfig, scene: Scene, poses, repeats: int = 1
) -> tuple[BenchmarkReport, dict]:
    """Feed the same frames to the bundled and per-pixel pipelines.

    ``repeats`` replays the whole sequence that many times per method to
    gather more timing samples; grids come from the final replay. Returns
    the per-step timing report and agreement stats with ``a`` = bundled,
    ``b`` = per-pixel.
    """
    frames = render_frames(scene, poses, cfg.camera)
    report = BenchmarkReport("compare")
    grids = {}
    for mode in ("bundled", "per_pixel"):
        mcfg = replace(cfg, tracer_mode=mode)
        run_frames(mcfg, frames[:1])  # compile and warm caches
        history = []
        for _ in range(max(1, repeats)):
            mapper = run_frames(mcfg, frames)
            history.extend(mapper.history)
        grids[mode] = mapper.grid
        n_rays = history[-1].trace.rays_traced
        for step in ("populate", "trace", "merge", "total"):
            times = [getattr(s, f"{step}_us") for s in history]
            report.add(step, "tracer", mode, n_rays, times)
    stats = agreement(grids["bundled"], grids["per_pixel"])
    report.extra.update(stats)
    return report, stats
