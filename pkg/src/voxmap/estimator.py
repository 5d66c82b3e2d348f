"""scikit-learn style front end to the mapping pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .geometry import CameraModel
from .grid import VoxelState, linear_indices
from .integrator import IntegratorConfig
from .pipeline import PipelineConfig, init_local_grid, integrate_measurement
from .validation import check_frames, check_points


class OccupancyGridMapper(BaseEstimator):
    """Sliding local voxel map built from posed depth images or point clouds.

    ``fit`` starts a fresh map centered on the first frame's camera and folds
    in every frame; ``partial_fit`` keeps going from the current map.
    ``predict`` reports the voxel state at world points (Unknown outside the
    grid).

    Parameters
    ----------
    grid_size : tuple of float
        Local grid extent in meters (x, y, z).
    vox_size : float
        Voxel edge length in meters.
    fov_x_deg, fov_y_deg : float
        Camera field of view in degrees.
    width, height : int
        Depth image resolution.
    depth : float
        Free-space clearing range in meters.
    max_depth : float or None
        Sensor range; defaults to ``depth``.
    vox_inf : int
        Obstacle inflation radius in voxels.
    tracer_mode : {"bundled", "per_pixel"}
    parallelism : {"sequential", "data_parallel"}

    Attributes
    ----------
    grid_ : VoxelGrid
    n_frames_ : int
    stats_ : list of PipelineStats
    """

    def __init__(
        self,
        grid_size=(15.0, 15.0, 3.0),
        vox_size=0.15,
        fov_x_deg=85.0,
        fov_y_deg=101.0,
        width=320,
        height=240,
        depth=6.5,
        max_depth=None,
        vox_inf=2,
        tracer_mode="bundled",
        parallelism="sequential",
    ):
        self.grid_size = grid_size
        self.vox_size = vox_size
        self.fov_x_deg = fov_x_deg
        self.fov_y_deg = fov_y_deg
        self.width = width
        self.height = height
        self.depth = depth
        self.max_depth = max_depth
        self.vox_inf = vox_inf
        self.tracer_mode = tracer_mode
        self.parallelism = parallelism

    def pipeline_config(self) -> PipelineConfig:
        cam = CameraModel.from_degrees(
            self.fov_x_deg,
            self.fov_y_deg,
            self.width,
            self.height,
            self.depth if self.max_depth is None else self.max_depth,
        )
        return PipelineConfig(
            grid_size=tuple(float(s) for s in self.grid_size),
            vox_size=float(self.vox_size),
            camera=cam,
            integrator=IntegratorConfig(int(self.vox_inf)),
            depth=float(self.depth),
            tracer_mode=self.tracer_mode,
            parallelism=self.parallelism,
        )

    def fit(self, X, y=None):
        frames = check_frames(X)
        if not frames:
            raise ValueError("fit needs at least one frame")
        self.config_ = self.pipeline_config()
        self.grid_ = init_local_grid(self.config_, frames[0].t_wc.translation)
        self.n_frames_ = 0
        self.stats_ = []
        return self._integrate(frames)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "grid_"):
            return self.fit(X)
        return self._integrate(check_frames(X))

    def _integrate(self, frames):
        for frame in frames:
            self.grid_, stats = integrate_measurement(self.grid_, frame, self.config_)
            self.stats_.append(stats)
            self.n_frames_ += 1
        return self

    def predict(self, X) -> np.ndarray:
        """Voxel state code (see ``VoxelState``) at each world point in ``X``."""
        check_is_fitted(self, "grid_")
        pts = check_points(X)
        spec = self.grid_.spec
        coords = np.floor((pts - np.asarray(spec.origin)) / spec.vox_size).astype(np.int64)
        idx = linear_indices(coords, spec)
        out = np.full(len(pts), int(VoxelState.UNKNOWN), dtype=np.uint8)
        ok = idx >= 0
        out[ok] = self.grid_.cells[idx[ok]]
        return out

    def score(self, X, y) -> float:
        """Fraction of points in ``X`` whose predicted state equals ``y``."""
        return float(np.mean(self.predict(X) == np.asarray(y)))
