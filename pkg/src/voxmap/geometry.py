"""Rigid transforms, the pinhole camera model and depth image handling.

Camera frame convention: +z along the optical axis, +x right, +y down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("transform contains non-finite values")
        if not np.allclose(r @ r.T, np.eye(3), rtol=0, atol=_ORTHO_TOL * 10):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL * 10:
            raise ValueError("rotation must have determinant +1")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, t) -> "RigidTransform":
        return cls(np.eye(3), t)

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equivalent to applying ``b`` first, then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def apply(t: RigidTransform, p) -> np.ndarray:
    """Apply ``t`` to one point ``(3,)`` or a batch ``(n, 3)``."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("cannot transform non-finite points")
    return p @ t.rotation.T + t.translation


def camera_center_in_grid(t_vc: RigidTransform) -> np.ndarray:
    return t_vc.translation.copy()


def rotation_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# Maps camera axes (right, down, forward) onto a z-up world looking along +x.
_CAM_TO_FLU = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


def camera_pose(position, yaw: float = 0.0, pitch: float = 0.0) -> RigidTransform:
    """Camera-to-world pose for a camera at ``position`` in a z-up world.

    ``yaw`` turns the optical axis counter-clockwise from +x; ``pitch``
    tilts it upward.
    """
    cp, sp = math.cos(pitch), math.sin(pitch)
    pitch_up = np.array([[cp, 0.0, -sp], [0.0, 1.0, 0.0], [sp, 0.0, cp]])
    return RigidTransform(rotation_z(yaw) @ pitch_up @ _CAM_TO_FLU, position)


@dataclass(frozen=True)
class CameraModel:
    fov_x: float
    fov_y: float
    width: int
    height: int
    max_depth: float

    def __post_init__(self):
        for name in ("fov_x", "fov_y"):
            v = getattr(self, name)
            if not (0 < v < math.pi):
                raise ValueError(f"{name} must lie in (0, pi), got {v}")
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("image dimensions must be at least 1")
        if not (self.max_depth > 0):
            raise ValueError("max_depth must be positive")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @classmethod
    def from_degrees(cls, fov_x_deg, fov_y_deg, width, height, max_depth) -> "CameraModel":
        return cls(math.radians(fov_x_deg), math.radians(fov_y_deg), width, height, max_depth)

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(self.fov_x / 2.0)

    @property
    def fy(self) -> float:
        return (self.height / 2.0) / math.tan(self.fov_y / 2.0)

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2.0

    def pixel_rays(self) -> np.ndarray:
        """(height, width, 3) ray directions through pixel centers, unit z."""
        u = (np.arange(self.width) - self.cx) / self.fx
        v = (np.arange(self.height) - self.cy) / self.fy
        rays = np.empty((self.height, self.width, 3))
        rays[..., 0] = u[None, :]
        rays[..., 1] = v[:, None]
        rays[..., 2] = 1.0
        return rays


@dataclass
class DepthImage:
    width: int
    height: int
    depths: np.ndarray

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=float).reshape(-1)
        if self.depths.size != self.width * self.height:
            raise ValueError(
                f"{self.depths.size} depths for a {self.width}x{self.height} image"
            )

    @classmethod
    def from_array(cls, arr) -> "DepthImage":
        arr = np.asarray(arr, dtype=float)
        return cls(arr.shape[1], arr.shape[0], arr)

    def as_array(self) -> np.ndarray:
        return self.depths.reshape(self.height, self.width)

    def valid_mask(self) -> np.ndarray:
        return np.isfinite(self.depths) & (self.depths > 0)


class PointCloud:
    """Camera-frame points; non-finite rows are dropped on construction."""

    def __init__(self, points=None):
        pts = np.empty((0, 3)) if points is None else np.asarray(points, dtype=float)
        pts = pts.reshape(-1, 3)
        self.points = np.ascontiguousarray(pts[np.all(np.isfinite(pts), axis=1)])

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointCloud(n={len(self)})"


def _check_dims(img: DepthImage, cam: CameraModel) -> None:
    if (img.width, img.height) != (cam.width, cam.height):
        raise ValueError(
            f"image is {img.width}x{img.height}, camera expects {cam.width}x{cam.height}"
        )


def depth_to_cloud(img: DepthImage, cam: CameraModel) -> PointCloud:
    _check_dims(img, cam)
    d = img.depths
    keep = img.valid_mask() & (d <= cam.max_depth)
    pts = cam.pixel_rays().reshape(-1, 3)[keep] * d[keep, None]
    return PointCloud(pts)


def no_return_rays(img: DepthImage, cam: CameraModel) -> np.ndarray:
    """Unit-z directions of pixels with no return inside ``max_depth``.

    Such pixels carry ``+inf`` or a depth beyond sensor range; zero, negative
    and NaN pixels are invalid and excluded.
    """
    _check_dims(img, cam)
    d = img.depths
    far = (d > cam.max_depth) & ~np.isnan(d)
    return cam.pixel_rays().reshape(-1, 3)[far]


def save_cloud(cloud: PointCloud, path) -> None:
    np.savetxt(path, cloud.points, fmt="%.9g")


def load_cloud(path) -> PointCloud:
    pts = np.loadtxt(path, dtype=float, ndmin=2)
    if pts.size and pts.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns, found {pts.shape[1]}")
    return PointCloud(pts)


def _read_pnm_header(data: bytes, magic: bytes, n_fields: int):
    fields, pos = [], 0
    while len(fields) < n_fields:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != magic:
        raise ValueError(f"bad magic {fields[0]!r}, expected {magic!r}")
    return fields[1:], pos + 1


def save_depth(img: DepthImage, path) -> None:
    """Write ``.pgm`` (16-bit millimeters) or ``.pfm`` (float32 meters).

    In PGM, invalid pixels become 0 and no-return pixels saturate at 65535.
    """
    path = Path(path)
    arr = img.as_array()
    if path.suffix.lower() == ".pgm":
        mm = np.where(np.isfinite(arr) & (arr > 0), np.rint(arr * 1000.0), 0.0)
        mm = np.where(np.isposinf(arr), 65535, np.clip(mm, 0, 65535))
        header = f"P5\n{img.width} {img.height}\n65535\n".encode("ascii")
        path.write_bytes(header + mm.astype(">u2").tobytes())
    elif path.suffix.lower() == ".pfm":
        header = f"Pf\n{img.width} {img.height}\n-1.0\n".encode("ascii")
        path.write_bytes(header + np.flipud(arr).astype("<f4").tobytes())
    else:
        raise ValueError(f"unsupported depth image extension {path.suffix!r} (use .pgm or .pfm)")


def load_depth(path) -> DepthImage:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() == ".pgm":
        (w, h, maxval), off = _read_pnm_header(data, b"P5", 4)
        w, h, maxval = int(w), int(h), int(maxval)
        dtype = ">u2" if maxval > 255 else "u1"
        raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=off).astype(float)
        depths = raw / 1000.0
        if maxval == 65535:
            depths[raw == 65535] = np.inf
        return DepthImage(w, h, depths)
    if path.suffix.lower() == ".pfm":
        (w, h, scale), off = _read_pnm_header(data, b"Pf", 4)
        w, h, scale = int(w), int(h), float(scale)
        dtype = "<f4" if scale < 0 else ">f4"
        raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=off).astype(float)
        return DepthImage(w, h, np.flipud(raw.reshape(h, w)) * abs(scale))
    raise ValueError(f"unsupported depth image extension {path.suffix!r} (use .pgm or .pfm)")
