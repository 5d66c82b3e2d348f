"""Sliding local voxel grids with bundled free-space ray tracing."""
from .estimator import OccupancyGridMapper
from .geometry import CameraModel, DepthImage, PointCloud, RigidTransform, camera_pose
from .grid import GridSpec, VoxelGrid, VoxelState
from .integrator import IntegratorConfig, populate_occupied
from .pipeline import LocalMapper, MeasurementFrame, PipelineConfig, integrate_measurement
from .raytracer import RayBundle, TraceStats, bundle_dimensions, trace_bundle

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "DepthImage",
    "GridSpec",
    "IntegratorConfig",
    "LocalMapper",
    "MeasurementFrame",
    "OccupancyGridMapper",
    "PipelineConfig",
    "PointCloud",
    "RayBundle",
    "RigidTransform",
    "TraceStats",
    "VoxelGrid",
    "VoxelState",
    "bundle_dimensions",
    "camera_pose",
    "integrate_measurement",
    "populate_occupied",
    "trace_bundle",
]
