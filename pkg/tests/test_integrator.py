import numpy as np
import pytest

from voxmap.geometry import PointCloud, RigidTransform
from voxmap.grid import GridSpec, VoxelGrid, VoxelState
from voxmap.integrator import IntegratorConfig, populate_occupied

from oracles import occupy_oracle, random_rotation

IDENT = RigidTransform.identity()


@pytest.fixture
def grid():
    return VoxelGrid(GridSpec((1.5, 1.5, 1.5), 0.15, (10, 10, 10)))


def _occupied(g):
    return set(np.flatnonzero(g.cells == VoxelState.OCCUPIED).tolist())


def test_single_point(grid):
    populate_occupied(grid, PointCloud([[0.05, 0.05, 0.05]]), IDENT, IntegratorConfig(0))
    assert _occupied(grid) == {0}


def test_inflation_125(grid):
    populate_occupied(grid, PointCloud([[0.8, 0.8, 0.8]]), IDENT, IntegratorConfig(2))
    assert len(_occupied(grid)) == 125
    assert _occupied(grid) == occupy_oracle((10, 10, 10), 0.15, [[0.8, 0.8, 0.8]], 2)


def test_inflation_clipped_at_corner(grid):
    populate_occupied(grid, PointCloud([[0.05, 0.05, 0.05]]), IDENT, IntegratorConfig(2))
    assert len(_occupied(grid)) == 27


def test_empty_cloud(grid):
    before = grid.copy()
    assert populate_occupied(grid, PointCloud(np.empty((0, 3))), IDENT, IntegratorConfig(2)) == 0
    assert grid == before


def test_duplicate_points_idempotent(grid):
    other = grid.copy()
    populate_occupied(grid, PointCloud([[0.5, 0.6, 0.7]]), IDENT, IntegratorConfig(1))
    populate_occupied(other, PointCloud([[0.5, 0.6, 0.7], [0.52, 0.61, 0.74]]), IDENT, IntegratorConfig(1))
    assert grid == other


def test_out_of_bounds_counted(grid):
    n = populate_occupied(grid, PointCloud([[-0.1, 0.5, 0.5], [0.5, 0.5, 5.0], [0.5, 0.5, 0.5]]), IDENT)
    assert n == 2
    assert _occupied(grid) == occupy_oracle((10, 10, 10), 0.15, [[0.5, 0.5, 0.5]], 0)


def test_inflation_reaches_in_from_outside(grid):
    # a point just outside the grid still inflates into it
    populate_occupied(grid, PointCloud([[-0.1, 0.5, 0.5]]), IDENT, IntegratorConfig(1))
    assert _occupied(grid) == occupy_oracle((10, 10, 10), 0.15, [[-0.1, 0.5, 0.5]], 1)
    assert len(_occupied(grid)) == 9


def test_overwrites_free_cells(grid):
    grid.cells[:] = VoxelState.FREE
    populate_occupied(grid, PointCloud([[0.05, 0.05, 0.05]]), IDENT)
    assert grid.cells[0] == VoxelState.OCCUPIED
    assert grid.count(VoxelState.FREE) == 999


@pytest.mark.parametrize("vox_inf", [0, 1, 2, 3])
def test_matches_oracle_with_transform(rng, vox_inf):
    spec = GridSpec((1.5, 1.2, 0.9), 0.15, (10, 8, 6))
    t = RigidTransform(random_rotation(rng), rng.uniform(0.3, 1.0, 3))
    pts = rng.uniform(-1, 1, (300, 3))
    g = VoxelGrid(spec)
    populate_occupied(g, PointCloud(pts), t, IntegratorConfig(vox_inf))
    world = pts @ t.rotation.T + t.translation
    assert _occupied(g) == occupy_oracle(spec.dims, 0.15, world, vox_inf)


def test_monotone_and_bounded(rng):
    spec = GridSpec((1.5, 1.5, 1.5), 0.15, (10, 10, 10))
    pts = rng.uniform(0, 1.5, (200, 3))
    prev = set()
    for k in (10, 50, 200):
        g0, g2 = VoxelGrid(spec), VoxelGrid(spec)
        populate_occupied(g0, PointCloud(pts[:k]), IDENT, IntegratorConfig(0))
        populate_occupied(g2, PointCloud(pts[:k]), IDENT, IntegratorConfig(2))
        occ = _occupied(g2)
        assert prev <= occ
        prev = occ
        assert g0.count(VoxelState.OCCUPIED) <= k
        assert len(occ) <= k * 125


def test_parallel_matches_sequential(rng):
    spec = GridSpec((1.5, 1.5, 1.5), 0.15, (10, 10, 10))
    pts = rng.uniform(-0.5, 2.0, (5000, 3))
    a, b = VoxelGrid(spec), VoxelGrid(spec)
    na = populate_occupied(a, PointCloud(pts), IDENT, IntegratorConfig(1))
    nb = populate_occupied(b, PointCloud(pts), IDENT, IntegratorConfig(1), parallel=True)
    assert a == b and na == nb


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(-1)
    with pytest.raises(ValueError):
        IntegratorConfig(1.5)
