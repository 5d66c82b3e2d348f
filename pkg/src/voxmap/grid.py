"""Dense voxel grid storage, index mapping and the sliding-window shift.

Cells live in a flat ``uint8`` array in x-fastest order, so the voxel at
integer coordinates ``(x, y, z)`` sits at ``x + y*nx + z*nx*ny``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

MAGIC = "VOXGRID1"
INVALID_INDEX = -1


class VoxelState(IntEnum):
    UNKNOWN = 0
    FREE = 1
    OCCUPIED = 2
    UNKNOWN_TRACED = 3


@dataclass(frozen=True)
class GridSpec:
    """Extent, resolution and placement of a voxel grid.

    ``origin`` is the world position of the grid's minimum corner.
    """

    size: tuple[float, float, float]
    vox_size: float
    dims: tuple[int, int, int]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.vox_size > 0 and math.isfinite(self.vox_size)):
            raise ValueError(f"vox_size must be positive, got {self.vox_size}")
        if len(self.dims) != 3 or any(int(d) < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if any(not (s > 0) for s in self.size):
            raise ValueError(f"grid size must be positive, got {self.size}")
        if not all(math.isfinite(o) for o in self.origin):
            raise ValueError(f"origin must be finite, got {self.origin}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def from_size(cls, size, vox_size, center=(0.0, 0.0, 0.0)) -> "GridSpec":
        """Grid of metric ``size`` whose center is placed at ``center``.

        The half extent is rounded down to whole voxels so the origin stays
        on the voxel lattice through ``center``.
        """
        size = tuple(float(s) for s in size)
        dims = tuple(max(1, int(round(s / vox_size))) for s in size)
        origin = tuple(c - (d // 2) * vox_size for c, d in zip(center, dims))
        return cls(size, float(vox_size), dims, origin)

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def center(self) -> np.ndarray:
        half = np.array([d // 2 for d in self.dims], dtype=float)
        return np.asarray(self.origin) + half * self.vox_size

    def translated(self, offset_voxels) -> "GridSpec":
        origin = tuple(o + int(k) * self.vox_size for o, k in zip(self.origin, offset_voxels))
        return GridSpec(self.size, self.vox_size, self.dims, origin)

    def same_layout(self, other: "GridSpec") -> bool:
        if self is other:
            return True
        tol = 1e-9 * self.vox_size
        return (
            self.dims == other.dims
            and self.vox_size == other.vox_size
            and all(abs(a - b) <= tol for a, b in zip(self.origin, other.origin))
        )


@dataclass
class VoxelGrid:
    spec: GridSpec
    cells: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.zeros(self.spec.n_voxels, dtype=np.uint8)
        else:
            self.cells = np.ascontiguousarray(self.cells, dtype=np.uint8).reshape(-1)
        if self.cells.size != self.spec.n_voxels:
            raise ValueError(
                f"cells has {self.cells.size} entries, spec needs {self.spec.n_voxels}"
            )

    @classmethod
    def empty(cls, spec: GridSpec) -> "VoxelGrid":
        return cls(spec)

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.spec, self.cells.copy())

    def volume(self) -> np.ndarray:
        """View of the cells indexed as ``[x, y, z]``."""
        nx, ny, nz = self.spec.dims
        return self.cells.reshape(nz, ny, nx).transpose(2, 1, 0)

    def __getitem__(self, coord) -> VoxelState:
        idx = linear_index(coord, self.spec)
        if idx == INVALID_INDEX:
            raise IndexError(f"voxel {tuple(coord)} outside grid {self.spec.dims}")
        return VoxelState(int(self.cells[idx]))

    def __setitem__(self, coord, state) -> None:
        idx = linear_index(coord, self.spec)
        if idx == INVALID_INDEX:
            raise IndexError(f"voxel {tuple(coord)} outside grid {self.spec.dims}")
        self.cells[idx] = int(state)

    def count(self, state: VoxelState) -> int:
        return int(np.count_nonzero(self.cells == int(state)))

    def counts(self) -> dict[str, int]:
        binc = np.bincount(self.cells, minlength=4)
        return {s.name.lower(): int(binc[s]) for s in VoxelState}

    def coords_where(self, state: VoxelState) -> np.ndarray:
        """(n, 3) integer coordinates of all voxels in ``state``."""
        return unravel_index(np.flatnonzero(self.cells == int(state)), self.spec)

    def __eq__(self, other):
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return self.spec.same_layout(other.spec) and np.array_equal(self.cells, other.cells)


def in_bounds(coord, spec: GridSpec) -> bool:
    return all(0 <= int(c) < d for c, d in zip(coord, spec.dims))


def linear_index(coord, spec: GridSpec) -> int:
    """Flat index of ``coord``, or ``INVALID_INDEX`` when it lies outside the grid."""
    if not in_bounds(coord, spec):
        return INVALID_INDEX
    x, y, z = (int(c) for c in coord)
    nx, ny, _ = spec.dims
    return x + y * nx + z * nx * ny


def linear_indices(coords: np.ndarray, spec: GridSpec) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    nx, ny, nz = spec.dims
    ok = (
        (coords[:, 0] >= 0) & (coords[:, 0] < nx)
        & (coords[:, 1] >= 0) & (coords[:, 1] < ny)
        & (coords[:, 2] >= 0) & (coords[:, 2] < nz)
    )
    idx = coords[:, 0] + coords[:, 1] * nx + coords[:, 2] * nx * ny
    return np.where(ok, idx, INVALID_INDEX)


def unravel_index(idx, spec: GridSpec) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    nx, ny, _ = spec.dims
    return np.stack([idx % nx, (idx // nx) % ny, idx // (nx * ny)], axis=-1)


def world_to_voxel(point, spec: GridSpec) -> tuple[int, int, int]:
    """Voxel containing ``point`` (grid frame, meters). May be out of bounds."""
    p = np.asarray(point, dtype=float).reshape(3)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p}")
    return tuple(int(v) for v in np.floor(p / spec.vox_size))


def reset(grid: VoxelGrid) -> VoxelGrid:
    grid.cells.fill(VoxelState.UNKNOWN)
    return grid


def shift_offset(spec: GridSpec, new_center) -> np.ndarray:
    """Whole-voxel offset that recenters ``spec`` on ``new_center``."""
    c = np.asarray(new_center, dtype=float).reshape(3)
    if not np.all(np.isfinite(c)):
        raise ValueError(f"non-finite center {c}")
    return np.rint((c - spec.center) / spec.vox_size).astype(np.int64)


def shift_by(grid: VoxelGrid, offset_voxels) -> VoxelGrid:
    """Move the grid window by ``offset_voxels``; exposed cells become Unknown.

    New cell ``i`` takes old cell ``i + offset`` where that exists.
    """
    k = np.asarray(offset_voxels, dtype=np.int64).reshape(3)
    out = VoxelGrid(grid.spec.translated(k))
    if not k.any():
        out.cells[:] = grid.cells
        return out
    dims = np.array(grid.spec.dims)
    if np.any(np.abs(k) >= dims):
        return out
    src = grid.volume()
    dst = out.volume()
    dst_sl, src_sl = [], []
    for kk, n in zip(k, dims):
        if kk >= 0:
            dst_sl.append(slice(0, n - kk))
            src_sl.append(slice(kk, n))
        else:
            dst_sl.append(slice(-kk, n))
            src_sl.append(slice(0, n + kk))
    dst[tuple(dst_sl)] = src[tuple(src_sl)]
    return out


def shift_grid(grid: VoxelGrid, new_center) -> VoxelGrid:
    """Recenter the grid on ``new_center``, quantized to whole voxels."""
    return shift_by(grid, shift_offset(grid.spec, new_center))


def dump_grid(grid: VoxelGrid, path) -> None:
    spec = grid.spec
    header = "{}\n{} {} {}\n{!r}\n{!r} {!r} {!r}\n".format(
        MAGIC, *spec.dims, spec.vox_size, *spec.origin
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(grid.cells.tobytes())


def load_grid(path) -> VoxelGrid:
    data = Path(path).read_bytes()
    lines = data.split(b"\n", 4)
    if len(lines) < 5 or lines[0].decode("ascii", "replace") != MAGIC:
        raise ValueError(f"{path}: not a {MAGIC} grid dump")
    dims = tuple(int(v) for v in lines[1].split())
    vox_size = float(lines[2])
    origin = tuple(float(v) for v in lines[3].split())
    payload = np.frombuffer(lines[4], dtype=np.uint8)
    size = tuple(d * vox_size for d in dims)
    spec = GridSpec(size, vox_size, dims, origin)
    if payload.size != spec.n_voxels:
        raise ValueError(f"{path}: expected {spec.n_voxels} state bytes, found {payload.size}")
    if payload.size and payload.max() > VoxelState.UNKNOWN_TRACED:
        raise ValueError(f"{path}: invalid state byte {payload.max()}")
    return VoxelGrid(spec, payload.copy())
