from .bench import (
    BenchmarkReport,
    compare_methods,
    loglog_slope,
    sweep_points_benchmark,
    sweep_rays_benchmark,
    sweep_voxels_benchmark,
)
from .scene import Scene, box_field_scene, empty_scene, make_scene, render_depth, wall_scene

__all__ = [
    "BenchmarkReport",
    "Scene",
    "box_field_scene",
    "compare_methods",
    "empty_scene",
    "loglog_slope",
    "make_scene",
    "render_depth",
    "sweep_points_benchmark",
    "sweep_rays_benchmark",
    "sweep_voxels_benchmark",
    "wall_scene",
]
