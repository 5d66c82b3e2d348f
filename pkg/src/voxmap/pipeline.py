"""Per-measurement update of the sliding local grid.

Each frame runs: reset the measurement grid, mark occupied voxels, trace
free space, merge into the local grid, then recenter the local grid on the
camera if it moved by a voxel or more.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import (
    CameraModel,
    DepthImage,
    PointCloud,
    RigidTransform,
    compose,
    depth_to_cloud,
    no_return_rays,
)
from .grid import GridSpec, VoxelGrid, VoxelState, reset, shift_by
from .integrator import IntegratorConfig, populate_occupied
from .raytracer import TraceStats, bresenham_trace_image, make_bundle, trace_bundle

TRACER_MODES = ("bundled", "per_pixel")
PARALLELISM = ("sequential", "data_parallel")


def _canonical(value: str, allowed, aliases) -> str:
    v = aliases.get(value, value)
    if v not in allowed:
        raise ValueError(f"expected one of {allowed}, got {value!r}")
    return v


@dataclass(frozen=True)
class PipelineConfig:
    grid_size: tuple[float, float, float] = (15.0, 15.0, 3.0)
    vox_size: float = 0.15
    camera: CameraModel = field(
        default_factory=lambda: CameraModel.from_degrees(85.0, 101.0, 320, 240, 6.5)
    )
    integrator: IntegratorConfig = IntegratorConfig(vox_inf=2)
    depth: float = 6.5
    tracer_mode: str = "bundled"
    parallelism: str = "sequential"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self,
            "tracer_mode",
            _canonical(self.tracer_mode, TRACER_MODES, {"per-pixel": "per_pixel"}),
        )
        object.__setattr__(
            self,
            "parallelism",
            _canonical(self.parallelism, PARALLELISM, {"parallel": "data_parallel"}),
        )
        if not (0 < self.depth <= self.camera.max_depth):
            raise ValueError(
                f"depth {self.depth} must be positive and <= camera max_depth {self.camera.max_depth}"
            )

    @property
    def parallel(self) -> bool:
        return self.parallelism == "data_parallel"

    def grid_spec(self, center=(0.0, 0.0, 0.0)) -> GridSpec:
        return GridSpec.from_size(self.grid_size, self.vox_size, center)


@dataclass
class MeasurementFrame:
    """One sensor reading: a camera-frame cloud and/or depth image plus pose."""

    t_wc: RigidTransform
    cloud: PointCloud | None = None
    image: DepthImage | None = None
    timestamp: float = 0.0

    def __post_init__(self):
        if self.cloud is None and self.image is None:
            raise ValueError("a frame needs a point cloud or a depth image")
        if not isinstance(self.t_wc, RigidTransform):
            raise TypeError("t_wc must be a RigidTransform")


@dataclass
class PipelineStats:
    populate_us: float = 0.0
    trace_us: float = 0.0
    merge_us: float = 0.0
    shift_us: float = 0.0
    trace: TraceStats = field(default_factory=TraceStats)
    n_points: int = 0
    points_out_of_bounds: int = 0
    occupied: int = 0
    freed: int = 0
    shift_voxels: tuple[int, int, int] = (0, 0, 0)

    @property
    def total_us(self) -> float:
        return self.populate_us + self.trace_us + self.merge_us


def camera_to_grid_transform(t_wc: RigidTransform, grid_origin) -> RigidTransform:
    """Camera-to-grid transform for a grid axis-aligned with the world frame."""
    t_vw = RigidTransform.from_translation(-np.asarray(grid_origin, dtype=float))
    return compose(t_vw, t_wc)


def merge_grids(loc_grid: VoxelGrid, ms_grid: VoxelGrid, parallel: bool = False) -> VoxelGrid:
    """Copy every non-unknown measurement voxel into ``loc_grid`` (in place).

    Unknown-traced voxels land as unknown: the local grid holds only
    unknown, free and occupied.
    """
    if not loc_grid.spec.same_layout(ms_grid.spec):
        raise ValueError("local and measurement grids must share dims, voxel size and origin")
    (K.merge_par if parallel else K.merge_seq)(loc_grid.cells, ms_grid.cells)
    return loc_grid


def init_local_grid(cfg: PipelineConfig, center=(0.0, 0.0, 0.0)) -> VoxelGrid:
    return VoxelGrid(cfg.grid_spec(center))


def recenter_offset(spec: GridSpec, position) -> np.ndarray:
    """Whole-voxel shift due for a camera at ``position``; zero per axis
    until that axis has drifted a full voxel from the grid center."""
    d = (np.asarray(position, dtype=float) - spec.center) / spec.vox_size
    due = np.abs(d) >= 1.0 - 1e-9
    return np.where(due, np.rint(d), 0).astype(np.int64)


def _cloud_of(frame: MeasurementFrame, cam: CameraModel) -> PointCloud:
    if frame.cloud is not None:
        return frame.cloud
    return depth_to_cloud(frame.image, cam)


def integrate_measurement(
    loc_grid: VoxelGrid,
    frame: MeasurementFrame,
    cfg: PipelineConfig,
    ms_grid: VoxelGrid | None = None,
) -> tuple[VoxelGrid, PipelineStats]:
    """Fold one frame into ``loc_grid``.

    ``loc_grid`` is updated in place; the returned grid is a new object only
    when a recentering shift happened. ``ms_grid`` is optional scratch space.
    """
    stats = PipelineStats()
    if ms_grid is None or not ms_grid.spec.same_layout(loc_grid.spec):
        ms_grid = VoxelGrid(loc_grid.spec)
    else:
        reset(ms_grid)
    par = cfg.parallel
    t_vc = camera_to_grid_transform(frame.t_wc, loc_grid.spec.origin)
    cloud = _cloud_of(frame, cfg.camera)
    stats.n_points = len(cloud)

    t0 = time.perf_counter_ns()
    stats.points_out_of_bounds = populate_occupied(ms_grid, cloud, t_vc, cfg.integrator, parallel=par)
    t1 = time.perf_counter_ns()
    if cfg.tracer_mode == "bundled":
        bundle = make_bundle(cfg.camera, cfg.depth, loc_grid.spec.vox_size)
        stats.trace = trace_bundle(ms_grid, bundle, t_vc, parallel=par)
    else:
        free_pts = None
        if frame.image is not None:
            free_pts = no_return_rays(frame.image, cfg.camera) * cfg.depth
        stats.trace = bresenham_trace_image(ms_grid, cloud, t_vc, free_pts, parallel=par)
    t2 = time.perf_counter_ns()
    merge_grids(loc_grid, ms_grid, parallel=par)
    t3 = time.perf_counter_ns()

    offset = recenter_offset(loc_grid.spec, frame.t_wc.translation)
    if offset.any():
        loc_grid = shift_by(loc_grid, offset)
    t4 = time.perf_counter_ns()

    stats.populate_us = (t1 - t0) / 1e3
    stats.trace_us = (t2 - t1) / 1e3
    stats.merge_us = (t3 - t2) / 1e3
    stats.shift_us = (t4 - t3) / 1e3
    stats.shift_voxels = tuple(int(v) for v in offset)
    stats.occupied = loc_grid.count(VoxelState.OCCUPIED)
    stats.freed = loc_grid.count(VoxelState.FREE)
    return loc_grid, stats


class LocalMapper:
    """Holds the local and measurement grids across a stream of frames."""

    def __init__(self, cfg: PipelineConfig, center=(0.0, 0.0, 0.0)):
        self.cfg = cfg
        self.grid = init_local_grid(cfg, center)
        self._ms = VoxelGrid(self.grid.spec)
        self.history: list[PipelineStats] = []

    def integrate(self, frame: MeasurementFrame) -> PipelineStats:
        if not self._ms.spec.same_layout(self.grid.spec):
            self._ms = VoxelGrid(self.grid.spec)
        self.grid, stats = integrate_measurement(self.grid, frame, self.cfg, self._ms)
        self.history.append(stats)
        return stats

    @property
    def measurement_grid(self) -> VoxelGrid:
        """Scratch grid as left by the most recent frame."""
        return self._ms
