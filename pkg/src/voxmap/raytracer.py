"""Bundled free-space ray tracing and the per-pixel Bresenham baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import _kernels as K
from .geometry import CameraModel, PointCloud, RigidTransform, apply, camera_center_in_grid
from .grid import VoxelGrid


@dataclass(frozen=True)
class RayBundle:
    """Rays through every voxel of the far plane ``z = vox_depth``."""

    vox_depth: int
    vox_width: int
    vox_height: int

    def __post_init__(self):
        if self.vox_depth < 1:
            raise ValueError(f"vox_depth must be >= 1, got {self.vox_depth}")
        if self.vox_width < 1 or self.vox_width % 2 == 0:
            raise ValueError(f"vox_width must be a positive odd number, got {self.vox_width}")
        if self.vox_height < 1 or self.vox_height % 2 == 0:
            raise ValueError(f"vox_height must be a positive odd number, got {self.vox_height}")

    @property
    def n_rays(self) -> int:
        return self.vox_width * self.vox_height

    def targets(self) -> np.ndarray:
        """(n_rays, 3) integer targets in row-major (y outer, x inner) order."""
        hw = (self.vox_width - 1) // 2
        hh = (self.vox_height - 1) // 2
        ys, xs = np.mgrid[-hh:hh + 1, -hw:hw + 1]
        out = np.empty((self.n_rays, 3), dtype=np.int64)
        out[:, 0] = xs.ravel()
        out[:, 1] = ys.ravel()
        out[:, 2] = self.vox_depth
        return out


@dataclass
class Ray:
    ray_start: np.ndarray
    ray_dir: np.ndarray
    max_dist: float

    def __post_init__(self):
        self.ray_start = np.asarray(self.ray_start, dtype=float).reshape(3)
        self.ray_dir = np.asarray(self.ray_dir, dtype=float).reshape(3)
        if not (np.all(np.isfinite(self.ray_start)) and np.all(np.isfinite(self.ray_dir))):
            raise ValueError("ray start and direction must be finite")
        if not np.any(self.ray_dir):
            raise ValueError("ray direction must be non-zero")
        if not (self.max_dist > 0):
            raise ValueError(f"max_dist must be positive, got {self.max_dist}")


@dataclass
class RayBatch:
    """Struct-of-arrays form of many rays, as consumed by the kernels."""

    starts: np.ndarray
    dirs: np.ndarray
    max_dists: np.ndarray

    def __len__(self):
        return len(self.dirs)

    def __getitem__(self, i) -> Ray:
        return Ray(self.starts[i], self.dirs[i], float(self.max_dists[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def take(self, order) -> "RayBatch":
        return RayBatch(self.starts[order], self.dirs[order], self.max_dists[order])


@dataclass
class TraceStats:
    rays_traced: int = 0
    voxels_freed: int = 0
    voxels_marked_unknown_traced: int = 0
    voxels_skipped_out_of_bounds: int = 0

    @classmethod
    def from_counters(cls, counters: np.ndarray) -> "TraceStats":
        c = np.asarray(counters, dtype=np.int64).reshape(-1, 4).sum(axis=0)
        return cls(*(int(v) for v in c))

    def __add__(self, other: "TraceStats") -> "TraceStats":
        return TraceStats(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))


def bundle_dimensions(cam: CameraModel, depth: float, vox_size: float) -> tuple[int, int, int]:
    """``(vox_depth, vox_width, vox_height)`` for clearing ``depth`` meters."""
    if not (depth > 0 and vox_size > 0):
        raise ValueError("depth and vox_size must be positive")
    for fov in (cam.fov_x, cam.fov_y):
        if not (0 < fov < math.pi):
            raise ValueError(f"field of view {fov} rad is outside (0, pi)")
    vox_depth = max(1, int(round(depth / vox_size)))
    vox_width = 2 * int(round(math.tan(cam.fov_x / 2) * vox_depth)) + 1
    vox_height = 2 * int(round(math.tan(cam.fov_y / 2) * vox_depth)) + 1
    return vox_depth, vox_width, vox_height


def make_bundle(cam: CameraModel, depth: float, vox_size: float) -> RayBundle:
    return RayBundle(*bundle_dimensions(cam, depth, vox_size))


def generate_rays(bundle: RayBundle, t_vc: RigidTransform, vox_size: float) -> RayBatch:
    targets = bundle.targets().astype(float) * vox_size
    dirs = np.ascontiguousarray(targets @ t_vc.rotation.T)
    starts = np.broadcast_to(camera_center_in_grid(t_vc), dirs.shape).copy()
    max_dists = np.linalg.norm(targets, axis=1)
    return RayBatch(starts, dirs, max_dists)


def _dims(grid: VoxelGrid) -> np.ndarray:
    return np.asarray(grid.spec.dims, dtype=np.int64)


def trace_batch(ms_grid: VoxelGrid, rays: RayBatch, parallel: bool = False) -> TraceStats:
    counters = np.zeros((len(rays), 4), dtype=np.int64)
    kernel = K.trace_rays_par if parallel else K.trace_rays_seq
    kernel(
        ms_grid.cells,
        _dims(ms_grid),
        float(ms_grid.spec.vox_size),
        np.ascontiguousarray(rays.starts, dtype=float),
        np.ascontiguousarray(rays.dirs, dtype=float),
        np.ascontiguousarray(rays.max_dists, dtype=float),
        counters,
    )
    return TraceStats.from_counters(counters)


def traverse_ray(ms_grid: VoxelGrid, ray: Ray) -> TraceStats:
    """Walk one ray through ``ms_grid``, freeing up to the first occupied voxel
    and marking everything after it as unknown-traced."""
    batch = RayBatch(ray.ray_start[None, :], ray.ray_dir[None, :], np.array([ray.max_dist]))
    return trace_batch(ms_grid, batch)


def trace_bundle(
    ms_grid: VoxelGrid,
    bundle: RayBundle,
    t_vc: RigidTransform,
    vox_size: float | None = None,
    parallel: bool = False,
) -> TraceStats:
    vox_size = ms_grid.spec.vox_size if vox_size is None else vox_size
    return trace_batch(ms_grid, generate_rays(bundle, t_vc, vox_size), parallel=parallel)


def ray_voxels(ray: Ray, grid_or_spec) -> np.ndarray:
    """Ordered (n, 3) voxel coordinates a ray visits; the grid is not modified."""
    spec = getattr(grid_or_spec, "spec", grid_or_spec)
    dims = np.asarray(spec.dims, dtype=np.int64)
    cap = int(dims.sum()) + 3
    flat, n = K.visit_ray(dims, float(spec.vox_size), ray.ray_start, ray.ray_dir, float(ray.max_dist), cap)
    return _unflatten(flat, dims)


def bresenham_voxels(a, b, grid_or_spec) -> np.ndarray:
    """Ordered (n, 3) in-grid voxels on the 3D Bresenham line from ``a`` to ``b``."""
    spec = getattr(grid_or_spec, "spec", grid_or_spec)
    dims = np.asarray(spec.dims, dtype=np.int64)
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    cap = int(np.abs(b - a).max()) + 1
    flat, _ = K.visit_bresenham(a, b, dims, cap)
    return _unflatten(flat, dims)


def _unflatten(flat, dims) -> np.ndarray:
    nx, ny = dims[0], dims[1]
    return np.stack([flat % nx, (flat // nx) % ny, flat // (nx * ny)], axis=1)


def _voxel_of(points: np.ndarray, vox_size: float) -> np.ndarray:
    return np.floor(points / vox_size).astype(np.int64)


def bresenham_trace_image(
    ms_grid: VoxelGrid,
    cloud: PointCloud,
    t_vc: RigidTransform,
    free_points: np.ndarray | None = None,
    parallel: bool = False,
) -> TraceStats:
    """Per-pixel baseline: one Bresenham line per measurement point.

    Voxels from the camera voxel up to, but excluding, each point's voxel are
    freed. ``free_points`` (camera frame) are no-return pixel ends whose lines
    are freed including the endpoint. Occupied voxels are never changed.
    """
    vox = ms_grid.spec.vox_size
    dims = _dims(ms_grid)
    start = _voxel_of(camera_center_in_grid(t_vc), vox)
    kernel = K.bresenham_par if parallel else K.bresenham_seq
    total = TraceStats()
    for pts, include_end in ((cloud.points, False), (free_points, True)):
        if pts is None or len(pts) == 0:
            continue
        ends = np.ascontiguousarray(_voxel_of(apply(t_vc, pts), vox))
        counters = np.zeros((len(ends), 4), dtype=np.int64)
        kernel(ms_grid.cells, dims, start, ends, include_end, counters)
        total = total + TraceStats.from_counters(counters)
    return total
