"""Compiled per-item kernels.

Every kernel comes in a sequential flavour and a ``prange`` flavour built
from the same per-item body, so the two differ only in scheduling.
"""
import math

import numpy as np
from numba import njit, prange

UNKNOWN = np.uint8(0)
FREE = np.uint8(1)
OCCUPIED = np.uint8(2)
UNKNOWN_TRACED = np.uint8(3)

# TraceStats columns
RAYS, FREED, MARKED_UT, SKIPPED = 0, 1, 2, 3

_jit = dict(cache=True, nogil=True, fastmath=False)


# ---------------------------------------------------------------- populate

@njit(inline="always", **_jit)
def _occupy_point(cells, nx, ny, nz, rot, trans, inv_vox, p, vox_inf):
    gx = rot[0, 0] * p[0] + rot[0, 1] * p[1] + rot[0, 2] * p[2] + trans[0]
    gy = rot[1, 0] * p[0] + rot[1, 1] * p[1] + rot[1, 2] * p[2] + trans[1]
    gz = rot[2, 0] * p[0] + rot[2, 1] * p[1] + rot[2, 2] * p[2] + trans[2]
    xi = int(math.floor(gx * inv_vox))
    yi = int(math.floor(gy * inv_vox))
    zi = int(math.floor(gz * inv_vox))
    outside = 0
    if xi < 0 or xi >= nx or yi < 0 or yi >= ny or zi < 0 or zi >= nz:
        outside = 1
    x0 = max(xi - vox_inf, 0)
    x1 = min(xi + vox_inf, nx - 1)
    y0 = max(yi - vox_inf, 0)
    y1 = min(yi + vox_inf, ny - 1)
    z0 = max(zi - vox_inf, 0)
    z1 = min(zi + vox_inf, nz - 1)
    for k in range(z0, z1 + 1):
        for j in range(y0, y1 + 1):
            base = j * nx + k * nx * ny
            for i in range(x0, x1 + 1):
                cells[base + i] = OCCUPIED
    return outside


@njit(**_jit)
def populate_seq(cells, dims, rot, trans, vox_size, points, vox_inf):
    nx, ny, nz = dims[0], dims[1], dims[2]
    inv = 1.0 / vox_size
    skipped = 0
    for n in range(points.shape[0]):
        skipped += _occupy_point(cells, nx, ny, nz, rot, trans, inv, points[n], vox_inf)
    return skipped


@njit(parallel=True, **_jit)
def populate_par(cells, dims, rot, trans, vox_size, points, vox_inf):
    nx, ny, nz = dims[0], dims[1], dims[2]
    inv = 1.0 / vox_size
    skipped = 0
    for n in prange(points.shape[0]):
        skipped += _occupy_point(cells, nx, ny, nz, rot, trans, inv, points[n], vox_inf)
    return skipped


# ---------------------------------------------------------------- traversal

@njit(**_jit)
def _box_entry(sx, sy, sz, dx, dy, dz, bx, by, bz):
    """Parametric [t0, t1] of the ray inside box [0, b]; t0 > t1 on a miss."""
    t0 = 0.0
    t1 = np.inf
    for s, d, b in ((sx, dx, bx), (sy, dy, by), (sz, dz, bz)):
        if d == 0.0:
            if s < 0.0 or s >= b:
                return 1.0, 0.0
        else:
            ta = (0.0 - s) / d
            tb = (b - s) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
    return t0, t1


@njit(**_jit)
def _start_index(s, d, t, vox, n):
    i = int(math.floor((s + d * t) / vox))
    if i < 0:
        i = 0
    elif i >= n:
        i = n - 1
    return i


@njit(**_jit)
def _next_boundary(s, d, i, vox):
    if d > 0.0:
        return ((i + 1) * vox - s) / d
    if d < 0.0:
        return (i * vox - s) / d
    return np.inf


@njit(**_jit)
def walk_ray(cells, dims, vox, start, direction, max_dist, write, stats, visits):
    """Amanatides-Woo walk with the free / unknown-traced state machine.

    ``t`` is arc length from ``start`` along the normalized direction. A voxel
    is visited when it is entered at ``t < max_dist``. With ``write`` the
    measurement grid is updated; ``visits`` (if non-empty) receives the flat
    index of each visited voxel in order. Returns the number of visits.
    """
    nx, ny, nz = dims[0], dims[1], dims[2]
    norm = math.sqrt(direction[0] ** 2 + direction[1] ** 2 + direction[2] ** 2)
    dx = direction[0] / norm
    dy = direction[1] / norm
    dz = direction[2] / norm
    sx, sy, sz = start[0], start[1], start[2]
    stats[RAYS] += 1

    t, t_exit = _box_entry(sx, sy, sz, dx, dy, dz, nx * vox, ny * vox, nz * vox)
    if t > t_exit or t >= max_dist:
        stats[SKIPPED] += int(math.ceil(max_dist / vox))
        return 0
    outside = t + max(0.0, max_dist - t_exit)
    if outside > 0.0:
        stats[SKIPPED] += int(math.ceil(outside / vox))
    ix = _start_index(sx, dx, t, vox, nx)
    iy = _start_index(sy, dy, t, vox, ny)
    iz = _start_index(sz, dz, t, vox, nz)
    step_x = 1 if dx > 0.0 else -1
    step_y = 1 if dy > 0.0 else -1
    step_z = 1 if dz > 0.0 else -1
    tmx = _next_boundary(sx, dx, ix, vox)
    tmy = _next_boundary(sy, dy, iy, vox)
    tmz = _next_boundary(sz, dz, iz, vox)

    val = FREE
    n_vis = 0
    cap = visits.shape[0]
    stride_y = nx
    stride_z = nx * ny
    while True:
        idx = ix + iy * stride_y + iz * stride_z
        if n_vis < cap:
            visits[n_vis] = idx
        n_vis += 1
        if write:
            if cells[idx] == OCCUPIED:
                val = UNKNOWN_TRACED
            else:
                cells[idx] = val
                if val == FREE:
                    stats[FREED] += 1
                else:
                    stats[MARKED_UT] += 1
        # ties step the lower axis first
        if tmx <= tmy and tmx <= tmz:
            t = tmx
            ix += step_x
            tmx = _next_boundary(sx, dx, ix, vox)
            if ix < 0 or ix >= nx:
                break
        elif tmy <= tmz:
            t = tmy
            iy += step_y
            tmy = _next_boundary(sy, dy, iy, vox)
            if iy < 0 or iy >= ny:
                break
        else:
            t = tmz
            iz += step_z
            tmz = _next_boundary(sz, dz, iz, vox)
            if iz < 0 or iz >= nz:
                break
        if t >= max_dist:
            break
    return n_vis


@njit(**_jit)
def trace_rays_seq(cells, dims, vox, starts, dirs, max_dists, stats_out):
    empty = np.empty(0, dtype=np.int64)
    for r in range(dirs.shape[0]):
        walk_ray(cells, dims, vox, starts[r], dirs[r], max_dists[r], True, stats_out[r], empty)


@njit(parallel=True, **_jit)
def trace_rays_par(cells, dims, vox, starts, dirs, max_dists, stats_out):
    empty = np.empty(0, dtype=np.int64)
    for r in prange(dirs.shape[0]):
        walk_ray(cells, dims, vox, starts[r], dirs[r], max_dists[r], True, stats_out[r], empty)


@njit(**_jit)
def visit_ray(dims, vox, start, direction, max_dist, cap):
    """Flat indices visited by ``walk_ray`` without touching any grid."""
    stats = np.zeros(4, dtype=np.int64)
    dummy = np.empty(0, dtype=np.uint8)
    buf = np.empty(cap, dtype=np.int64)
    n = walk_ray(dummy, dims, vox, start, direction, max_dist, False, stats, buf)
    return buf[:min(n, cap)], n


# ---------------------------------------------------------------- bresenham

@njit(**_jit)
def bresenham_line(a, b, dims, cells, write, include_end, stats, visits):
    """3D Bresenham walk from voxel ``a`` to voxel ``b``.

    Ties round toward the direction of travel on every axis. Stops once the
    line leaves the grid after having been inside it.
    """
    nx, ny, nz = dims[0], dims[1], dims[2]
    x, y, z = a[0], a[1], a[2]
    ddx = abs(b[0] - x)
    ddy = abs(b[1] - y)
    ddz = abs(b[2] - z)
    sx = 1 if b[0] > x else -1
    sy = 1 if b[1] > y else -1
    sz = 1 if b[2] > z else -1
    stats[RAYS] += 1
    n = max(ddx, ddy, ddz)
    # axis 0 = driving axis
    if ddx >= ddy and ddx >= ddz:
        drive = 0
        e1 = 2 * ddy - ddx
        e2 = 2 * ddz - ddx
    elif ddy >= ddz:
        drive = 1
        e1 = 2 * ddx - ddy
        e2 = 2 * ddz - ddy
    else:
        drive = 2
        e1 = 2 * ddy - ddz
        e2 = 2 * ddx - ddz
    cap = visits.shape[0]
    n_vis = 0
    was_inside = False
    for s in range(n + 1):
        last = s == n
        inside = 0 <= x < nx and 0 <= y < ny and 0 <= z < nz
        if inside:
            was_inside = True
            if n_vis < cap:
                visits[n_vis] = x + y * nx + z * nx * ny
            n_vis += 1
            if write and (include_end or not last):
                idx = x + y * nx + z * nx * ny
                if cells[idx] != OCCUPIED:
                    cells[idx] = FREE
                    stats[FREED] += 1
        else:
            stats[SKIPPED] += 1
            if was_inside:
                break
        if last:
            break
        if drive == 0:
            if e1 >= 0:
                y += sy
                e1 -= 2 * ddx
            if e2 >= 0:
                z += sz
                e2 -= 2 * ddx
            e1 += 2 * ddy
            e2 += 2 * ddz
            x += sx
        elif drive == 1:
            if e1 >= 0:
                x += sx
                e1 -= 2 * ddy
            if e2 >= 0:
                z += sz
                e2 -= 2 * ddy
            e1 += 2 * ddx
            e2 += 2 * ddz
            y += sy
        else:
            if e1 >= 0:
                y += sy
                e1 -= 2 * ddz
            if e2 >= 0:
                x += sx
                e2 -= 2 * ddz
            e1 += 2 * ddy
            e2 += 2 * ddx
            z += sz
    return n_vis


@njit(**_jit)
def _bresenham_batch(cells, dims, start, ends, include_end, stats_out, r):
    empty = np.empty(0, dtype=np.int64)
    bresenham_line(start, ends[r], dims, cells, True, include_end, stats_out[r], empty)


@njit(**_jit)
def bresenham_seq(cells, dims, start, ends, include_end, stats_out):
    for r in range(ends.shape[0]):
        _bresenham_batch(cells, dims, start, ends, include_end, stats_out, r)


@njit(parallel=True, **_jit)
def bresenham_par(cells, dims, start, ends, include_end, stats_out):
    for r in prange(ends.shape[0]):
        _bresenham_batch(cells, dims, start, ends, include_end, stats_out, r)


@njit(**_jit)
def visit_bresenham(a, b, dims, cap):
    stats = np.zeros(4, dtype=np.int64)
    dummy = np.empty(0, dtype=np.uint8)
    buf = np.empty(cap, dtype=np.int64)
    n = bresenham_line(a, b, dims, dummy, False, True, stats, buf)
    return buf[:min(n, cap)], n


# ---------------------------------------------------------------- merge

@njit(**_jit)
def merge_seq(loc, ms):
    for i in range(ms.shape[0]):
        v = ms[i]
        if v != UNKNOWN:
            loc[i] = UNKNOWN if v == UNKNOWN_TRACED else v


@njit(parallel=True, **_jit)
def merge_par(loc, ms):
    for i in prange(ms.shape[0]):
        v = ms[i]
        if v != UNKNOWN:
            loc[i] = UNKNOWN if v == UNKNOWN_TRACED else v
