"""Marking voxels that contain measurement points as occupied."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .geometry import PointCloud, RigidTransform
from .grid import VoxelGrid


@dataclass(frozen=True)
class IntegratorConfig:
    vox_inf: int = 0

    def __post_init__(self):
        if int(self.vox_inf) != self.vox_inf or self.vox_inf < 0:
            raise ValueError(f"vox_inf must be a non-negative integer, got {self.vox_inf}")


def populate_occupied(
    ms_grid: VoxelGrid,
    cloud: PointCloud,
    t_vc: RigidTransform,
    cfg: IntegratorConfig = IntegratorConfig(),
    parallel: bool = False,
) -> int:
    """Set the voxel of every point, dilated by ``cfg.vox_inf``, to occupied.

    Cubes are clipped at the grid boundary. Returns the number of points
    whose own voxel fell outside the grid.
    """
    pts = np.ascontiguousarray(cloud.points, dtype=float)
    if len(pts) == 0:
        return 0
    kernel = K.populate_par if parallel else K.populate_seq
    return int(
        kernel(
            ms_grid.cells,
            np.asarray(ms_grid.spec.dims, dtype=np.int64),
            np.ascontiguousarray(t_vc.rotation),
            np.ascontiguousarray(t_vc.translation),
            float(ms_grid.spec.vox_size),
            pts,
            int(cfg.vox_inf),
        )
    )
