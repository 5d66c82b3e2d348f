"""Box-world scenes, a synthetic depth camera and scripted trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import CameraModel, DepthImage, RigidTransform, camera_pose


@dataclass
class Scene:
    """Axis-aligned boxes in the world frame, as ``(n, 2, 3)`` min/max corners."""

    boxes: np.ndarray = field(default_factory=lambda: np.empty((0, 2, 3)))

    def __post_init__(self):
        self.boxes = np.asarray(self.boxes, dtype=float).reshape(-1, 2, 3)
        if np.any(self.boxes[:, 0] >= self.boxes[:, 1]):
            raise ValueError("every box needs min < max on each axis")

    def __len__(self):
        return len(self.boxes)

    def add_box(self, lo, hi) -> "Scene":
        return Scene(np.concatenate([self.boxes, [[lo, hi]]]))


def empty_scene() -> Scene:
    return Scene()


def wall_scene(
    distance: float = 4.0, thickness: float = 0.3, half_width: float = 2.0, half_height: float = 1.0
) -> Scene:
    """A free-standing wall facing a camera at the origin that looks along +x."""
    lo = (distance, -half_width, -half_height)
    hi = (distance + thickness, half_width, half_height)
    return Scene([[lo, hi]])


def box_field_scene(seed: int = 0, n_boxes: int = 25, extent: float = 7.0, keep_out: float = 1.0) -> Scene:
    """Seeded random boxes around the origin, none within ``keep_out`` of it."""
    rng = np.random.default_rng(seed)
    boxes = []
    while len(boxes) < n_boxes:
        c = rng.uniform(-extent, extent, size=2)
        half = rng.uniform(0.2, 0.8, size=2)
        if np.all(np.abs(c) < half + keep_out):
            continue
        z_lo = rng.uniform(-1.5, 0.0)
        z_hi = z_lo + rng.uniform(0.5, 3.0)
        boxes.append([(c[0] - half[0], c[1] - half[1], z_lo), (c[0] + half[0], c[1] + half[1], z_hi)])
    return Scene(boxes)


SCENES = {"empty": empty_scene, "wall": wall_scene, "boxes": box_field_scene}


def make_scene(name: str, seed: int = 0) -> Scene:
    if name == "boxes":
        return box_field_scene(seed)
    try:
        return SCENES[name]()
    except KeyError:
        raise ValueError(f"unknown scene {name!r}; choose from {sorted(SCENES)}") from None


def save_scene(scene: Scene, path) -> None:
    np.savetxt(path, scene.boxes.reshape(-1, 6), fmt="%.9g", header="xmin ymin zmin xmax ymax zmax")


def load_scene(path) -> Scene:
    return Scene(np.loadtxt(path, ndmin=2).reshape(-1, 2, 3))


def ray_box_hits(origin, dirs: np.ndarray, lo, hi) -> np.ndarray:
    """Entry parameter of each ray into box ``[lo, hi]``; ``inf`` on a miss.

    Rays starting inside the box count as a miss.
    """
    origin = np.asarray(origin, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        ta = (np.asarray(lo) - origin) * inv
        tb = (np.asarray(hi) - origin) * inv
    # zero components: inside the slab -> (-inf, inf), outside -> (inf, inf),
    # which pushes the entry to infinity
    zero = dirs == 0
    inside = (origin >= lo) & (origin <= hi)
    ta = np.where(zero, np.where(inside, -np.inf, np.inf), ta)
    tb = np.where(zero, np.inf, tb)
    t_near = np.minimum(ta, tb).max(axis=1)
    t_far = np.maximum(ta, tb).min(axis=1)
    hit = (t_near <= t_far) & (t_near > 0)
    return np.where(hit, t_near, np.inf)


def render_depth(scene: Scene, pose: RigidTransform, cam: CameraModel) -> DepthImage:
    """Z-depth image of ``scene`` seen from camera-to-world ``pose``.

    Pixels with no surface within ``cam.max_depth`` are ``+inf``.
    """
    rays_c = cam.pixel_rays().reshape(-1, 3)
    dirs = rays_c @ pose.rotation.T
    depth = np.full(len(dirs), np.inf)
    for lo, hi in scene.boxes:
        np.minimum(depth, ray_box_hits(pose.translation, dirs, lo, hi), out=depth)
    depth[depth > cam.max_depth] = np.inf
    return DepthImage(cam.width, cam.height, depth)


def sweep_trajectory(n_frames: int, step: float = 0.05, yaw_rate: float = 0.1, start=(0.0, 0.0, 0.0)):
    """Camera poses moving along +x while yawing back and forth."""
    poses = []
    for i in range(n_frames):
        pos = np.asarray(start, dtype=float) + np.array([i * step, 0.0, 0.0])
        yaw = 0.5 * math.sin(i * yaw_rate)
        poses.append(camera_pose(pos, yaw=yaw))
    return poses


def static_trajectory(n_frames: int, position=(0.0, 0.0, 0.0), yaw: float = 0.0):
    return [camera_pose(position, yaw=yaw)] * n_frames
