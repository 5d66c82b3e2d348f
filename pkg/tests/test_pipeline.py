import math

import numpy as np
import pytest

from voxmap.geometry import CameraModel, DepthImage, PointCloud, RigidTransform, apply, camera_pose, compose, rotation_z
from voxmap.grid import GridSpec, VoxelGrid, VoxelState, shift_by
from voxmap.integrator import IntegratorConfig
from voxmap.pipeline import (
    LocalMapper,
    MeasurementFrame,
    PipelineConfig,
    camera_to_grid_transform,
    init_local_grid,
    integrate_measurement,
    merge_grids,
    recenter_offset,
)

from oracles import merge_cell, random_rotation


def small_cfg(**kw):
    base = dict(
        grid_size=(4.5, 4.5, 1.5),
        vox_size=0.15,
        camera=CameraModel.from_degrees(60, 45, 32, 24, 3.0),
        integrator=IntegratorConfig(1),
        depth=3.0,
    )
    base.update(kw)
    return PipelineConfig(**base)


def test_config_defaults_and_aliases():
    cfg = PipelineConfig()
    assert cfg.grid_spec().dims == (100, 100, 20)
    assert PipelineConfig(tracer_mode="per-pixel").tracer_mode == "per_pixel"
    assert PipelineConfig(parallelism="parallel").parallel
    with pytest.raises(ValueError):
        PipelineConfig(tracer_mode="magic")
    with pytest.raises(ValueError):
        PipelineConfig(depth=7.0)


# merge ----------------------------------------------------------------------

def test_merge_examples(small_spec):
    loc = VoxelGrid(small_spec)
    loc.cells[:] = VoxelState.FREE
    ms = VoxelGrid(small_spec)
    merge_grids(loc, ms)
    assert loc.count(VoxelState.FREE) == small_spec.n_voxels
    ms.cells[3] = VoxelState.OCCUPIED
    ms.cells[5] = VoxelState.UNKNOWN_TRACED
    merge_grids(loc, ms)
    assert loc.cells[3] == VoxelState.OCCUPIED
    assert loc.cells[5] == VoxelState.UNKNOWN


@pytest.mark.parametrize("parallel", [False, True])
def test_merge_matches_cell_oracle(rng, parallel):
    spec = GridSpec((3.0, 2.4, 0.9), 0.15, (20, 16, 6))
    loc = VoxelGrid(spec, rng.integers(0, 3, spec.n_voxels, dtype=np.uint8))
    ms = VoxelGrid(spec, rng.integers(0, 4, spec.n_voxels, dtype=np.uint8))
    expect = np.array([merge_cell(a, b) for a, b in zip(loc.cells, ms.cells)], dtype=np.uint8)
    merge_grids(loc, ms, parallel=parallel)
    assert np.array_equal(loc.cells, expect)
    assert loc.count(VoxelState.UNKNOWN_TRACED) == 0
    once = loc.copy()
    merge_grids(loc, ms, parallel=parallel)
    assert loc == once


def test_merge_layout_mismatch(small_spec):
    other = small_spec.translated((1, 0, 0))
    with pytest.raises(ValueError):
        merge_grids(VoxelGrid(small_spec), VoxelGrid(other))


# transforms -----------------------------------------------------------------

def test_camera_to_grid_examples(rng):
    assert np.allclose(camera_to_grid_transform(RigidTransform.identity(), (0, 0, 0)).as_matrix(), np.eye(4))
    t = camera_to_grid_transform(RigidTransform.identity(), (-7.5, -7.5, -1.5))
    assert np.allclose(t.rotation, np.eye(3))
    assert np.allclose(t.translation, (7.5, 7.5, 1.5))
    t_wc = RigidTransform(random_rotation(rng), rng.normal(size=3))
    origin = rng.normal(size=3)
    t = camera_to_grid_transform(t_wc, origin)
    assert np.allclose(t.rotation, t_wc.rotation)
    expect = compose(RigidTransform.from_translation(-origin), t_wc)
    assert np.allclose(t.as_matrix(), expect.as_matrix())


def test_recenter_offset_threshold(standard_spec):
    assert not recenter_offset(standard_spec, (0.149, -0.1, 0.0)).any()
    assert tuple(recenter_offset(standard_spec, (0.15, 0.0, -0.31))) == (1, 0, -2)


# integration ----------------------------------------------------------------

def test_empty_cloud_only_frees():
    cfg = small_cfg()
    loc = init_local_grid(cfg)
    frame = MeasurementFrame(camera_pose((0, 0, 0)), cloud=PointCloud(np.empty((0, 3))))
    loc, stats = integrate_measurement(loc, frame, cfg)
    assert stats.occupied == 0
    assert stats.freed > 0
    assert loc.count(VoxelState.FREE) + loc.count(VoxelState.UNKNOWN) == loc.spec.n_voxels
    # freed voxels lie in front of the camera (world +x)
    xs = loc.coords_where(VoxelState.FREE)[:, 0] * 0.15 + loc.spec.origin[0]
    assert xs.min() >= -0.15 - 1e-9


def test_occupied_traces_back_to_points(rng):
    cfg = small_cfg()
    loc = init_local_grid(cfg)
    pose = camera_pose((0, 0, 0), yaw=0.3)
    pts = np.column_stack([rng.uniform(-1, 1, 200), rng.uniform(-0.5, 0.5, 200), rng.uniform(0.5, 2.5, 200)])
    loc, _ = integrate_measurement(loc, MeasurementFrame(pose, cloud=PointCloud(pts)), cfg)
    world = apply(pose, pts)
    vox = np.floor((world - loc.spec.origin) / 0.15).astype(int)
    for c in loc.coords_where(VoxelState.OCCUPIED):
        assert np.abs(vox - c).max(axis=1).min() <= 1


def test_untouched_cells_keep_prior_value(rng):
    cfg = small_cfg()
    loc = init_local_grid(cfg)
    loc.cells[:] = rng.integers(0, 3, loc.spec.n_voxels, dtype=np.uint8)
    prior = loc.cells.copy()
    mapper = LocalMapper(cfg)
    mapper.grid = loc
    pts = rng.uniform(-1, 1, (50, 3)) + (0, 0, 2)
    mapper.integrate(MeasurementFrame(camera_pose((0, 0, 0)), cloud=PointCloud(pts)))
    ms = mapper.measurement_grid.cells
    untouched = ms == VoxelState.UNKNOWN
    assert np.array_equal(mapper.grid.cells[untouched], prior[untouched])
    assert mapper.grid.count(VoxelState.UNKNOWN_TRACED) == 0


def test_image_and_cloud_frames_agree():
    cfg = small_cfg()
    depths = np.full(32 * 24, 2.0)
    img = DepthImage(32, 24, depths)
    pose = camera_pose((0, 0, 0))
    from voxmap.geometry import depth_to_cloud

    a, _ = integrate_measurement(init_local_grid(cfg), MeasurementFrame(pose, image=img), cfg)
    b, _ = integrate_measurement(
        init_local_grid(cfg), MeasurementFrame(pose, cloud=depth_to_cloud(img, cfg.camera)), cfg
    )
    assert a == b


def test_shift_after_motion():
    cfg = small_cfg()
    mapper = LocalMapper(cfg)
    empty = PointCloud(np.empty((0, 3)))
    s0 = mapper.integrate(MeasurementFrame(camera_pose((0.1, 0, 0)), cloud=empty))
    assert s0.shift_voxels == (0, 0, 0)
    before = mapper.grid.copy()
    s1 = mapper.integrate(MeasurementFrame(camera_pose((0.31, 0, 0)), cloud=empty))
    assert s1.shift_voxels == (2, 0, 0)
    assert np.allclose(mapper.grid.spec.center, (0.3, 0, 0))
    # merge happens in the old window, then the window moves
    expect = shift_by(merge_grids(before, mapper.measurement_grid), (2, 0, 0))
    assert mapper.grid == expect


def test_per_pixel_mode_runs_and_shares_occupancy():
    cam = CameraModel.from_degrees(60, 45, 32, 24, 3.0)
    depths = np.full(32 * 24, 2.0)
    depths[:100] = np.inf
    img = DepthImage(32, 24, depths)
    pose = camera_pose((0, 0, 0), yaw=0.2)
    grids = {}
    for mode in ("bundled", "per_pixel"):
        cfg = small_cfg(camera=cam, tracer_mode=mode)
        grids[mode], stats = integrate_measurement(init_local_grid(cfg), MeasurementFrame(pose, image=img), cfg)
        assert stats.freed > 0
    a, b = grids["bundled"], grids["per_pixel"]
    assert np.array_equal(a.cells == VoxelState.OCCUPIED, b.cells == VoxelState.OCCUPIED)


def test_parallel_pipeline_matches_on_occupancy(rng):
    pts = rng.uniform(-1, 1, (300, 3)) + (0, 0, 2)
    frame = MeasurementFrame(camera_pose((0.05, 0.02, 0), yaw=0.4), cloud=PointCloud(pts))
    seq, _ = integrate_measurement(init_local_grid(small_cfg()), frame, small_cfg())
    par, _ = integrate_measurement(init_local_grid(small_cfg()), frame, small_cfg(parallelism="data_parallel"))
    assert np.array_equal(seq.cells == VoxelState.OCCUPIED, par.cells == VoxelState.OCCUPIED)


def test_stats_times_non_negative(rng):
    cfg = small_cfg()
    mapper = LocalMapper(cfg)
    s = mapper.integrate(MeasurementFrame(camera_pose((0, 0, 0)), cloud=PointCloud(rng.normal(size=(20, 3)) + 2)))
    assert min(s.populate_us, s.trace_us, s.merge_us, s.shift_us) >= 0
    assert s.total_us == pytest.approx(s.populate_us + s.trace_us + s.merge_us)
    assert s.n_points == 20
    assert len(mapper.history) == 1


def test_frame_validation():
    with pytest.raises(ValueError):
        MeasurementFrame(RigidTransform.identity())
    with pytest.raises(TypeError):
        MeasurementFrame(np.eye(4), cloud=PointCloud([[0, 0, 1]]))
