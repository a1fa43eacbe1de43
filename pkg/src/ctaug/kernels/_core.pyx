# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled voxel kernels: clipping/normalization, resampling, component
labeling, and histogram accumulation.

Must produce bit-identical results to kernels._numpy; any change here needs
the matching change there.
"""

from libc.math cimport floor

import numpy as np

ctypedef fused pixel_t:
    float
    unsigned char


def clip_affine(x, double lo, double up, double sub, double den):
    """(clip(x, lo, up) - sub) / den, elementwise in float32."""
    cdef float lo32 = <float> lo
    cdef float up32 = <float> up
    cdef float sub32 = <float> sub
    cdef float den32 = <float> den
    x = np.ascontiguousarray(x, dtype=np.float32)
    out = np.empty_like(x)
    cdef const float[::1] xv = x.ravel()
    cdef float[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef float c
    for i in range(n):
        c = xv[i]
        if c < lo32:
            c = lo32
        if c > up32:
            c = up32
        ov[i] = (c - sub32) / den32
    return out


cdef inline double _coord(Py_ssize_t i, double step, Py_ssize_t n_src):
    cdef double c = i * step
    cdef double top = <double> (n_src - 1)
    if c > top:
        c = top
    return c


def resample_trilinear(src, out_shape, steps):
    """Corner-aligned trilinear resample of a float32 volume."""
    src = np.ascontiguousarray(src, dtype=np.float32)
    out = np.empty(tuple(out_shape), dtype=np.float32)
    cdef const float[:, :, ::1] s = src
    cdef float[:, :, ::1] o = out
    cdef Py_ssize_t nz = s.shape[0], ny = s.shape[1], nx = s.shape[2]
    cdef Py_ssize_t oz = o.shape[0], oy = o.shape[1], ox = o.shape[2]
    cdef double step_z = steps[0], step_y = steps[1], step_x = steps[2]
    cdef Py_ssize_t iz, iy, ix, z0, y0, x0, z1, y1, x1
    cdef double cz, cy, cx, fz, fy, fx
    cdef double v000, v001, v010, v011, v100, v101, v110, v111
    cdef double c00, c01, c10, c11, c0, c1
    for iz in range(oz):
        cz = _coord(iz, step_z, nz)
        z0 = <Py_ssize_t> floor(cz)
        fz = cz - z0
        z1 = z0 + 1 if z0 + 1 < nz else nz - 1
        for iy in range(oy):
            cy = _coord(iy, step_y, ny)
            y0 = <Py_ssize_t> floor(cy)
            fy = cy - y0
            y1 = y0 + 1 if y0 + 1 < ny else ny - 1
            for ix in range(ox):
                cx = _coord(ix, step_x, nx)
                x0 = <Py_ssize_t> floor(cx)
                fx = cx - x0
                x1 = x0 + 1 if x0 + 1 < nx else nx - 1
                v000 = s[z0, y0, x0]; v001 = s[z0, y0, x1]
                v010 = s[z0, y1, x0]; v011 = s[z0, y1, x1]
                v100 = s[z1, y0, x0]; v101 = s[z1, y0, x1]
                v110 = s[z1, y1, x0]; v111 = s[z1, y1, x1]
                c00 = v000 + (v001 - v000) * fx
                c01 = v010 + (v011 - v010) * fx
                c10 = v100 + (v101 - v100) * fx
                c11 = v110 + (v111 - v110) * fx
                c0 = c00 + (c01 - c00) * fy
                c1 = c10 + (c11 - c10) * fy
                o[iz, iy, ix] = <float> (c0 + (c1 - c0) * fz)
    return out


def resample_nearest(src, out_shape, steps):
    """Nearest-neighbor resample (ties round up: floor(coord + 0.5))."""
    src = np.ascontiguousarray(src)
    if src.dtype == np.uint8:
        return _nearest(src, <unsigned char> 0, out_shape, steps)
    return _nearest(np.ascontiguousarray(src, dtype=np.float32), <float> 0, out_shape, steps)


cdef _nearest(src, pixel_t marker, out_shape, steps):
    out = np.empty(tuple(out_shape), dtype=src.dtype)
    cdef const pixel_t[:, :, ::1] s = src
    cdef pixel_t[:, :, ::1] o = out
    cdef Py_ssize_t nz = s.shape[0], ny = s.shape[1], nx = s.shape[2]
    cdef Py_ssize_t oz = o.shape[0], oy = o.shape[1], ox = o.shape[2]
    cdef double step_z = steps[0], step_y = steps[1], step_x = steps[2]
    cdef Py_ssize_t iz, iy, ix, z, y, x
    for iz in range(oz):
        z = _nearest_index(iz, step_z, nz)
        for iy in range(oy):
            y = _nearest_index(iy, step_y, ny)
            for ix in range(ox):
                x = _nearest_index(ix, step_x, nx)
                o[iz, iy, ix] = s[z, y, x]
    return out


cdef inline Py_ssize_t _nearest_index(Py_ssize_t i, double step, Py_ssize_t n):
    cdef Py_ssize_t k = <Py_ssize_t> floor(i * step + 0.5)
    if k < 0:
        k = 0
    if k > n - 1:
        k = n - 1
    return k


def label_components(mask, int connectivity):
    """Label connected foreground, numbering components by first-voxel scan order."""
    if connectivity not in (6, 18, 26):
        raise ValueError(f"connectivity must be 6, 18, or 26, got {connectivity}")
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    labels = np.zeros(mask.shape, dtype=np.int32)
    cdef const unsigned char[:, :, ::1] m = mask
    cdef int[:, :, ::1] lab = labels

    cdef Py_ssize_t nz = m.shape[0], ny = m.shape[1], nx = m.shape[2]
    cdef Py_ssize_t n = nz * ny * nx

    # neighbor offset triples for the requested connectivity
    cdef int[26] dzs, dys, dxs
    cdef int n_offs = 0
    cdef int dz, dy, dx, manhattan
    for dz in range(-1, 2):
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                if dz == 0 and dy == 0 and dx == 0:
                    continue
                manhattan = (dz if dz >= 0 else -dz) + (dy if dy >= 0 else -dy) + (dx if dx >= 0 else -dx)
                if connectivity == 6 and manhattan > 1:
                    continue
                if connectivity == 18 and manhattan > 2:
                    continue
                dzs[n_offs] = dz
                dys[n_offs] = dy
                dxs[n_offs] = dx
                n_offs += 1

    stack_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef const unsigned char[::1] mf = mask.ravel()
    cdef int[::1] lf = labels.ravel()

    cdef int current = 0
    cdef Py_ssize_t idx, top, cur, nb
    cdef Py_ssize_t cz, cy, cx, zz, yy, xx
    cdef int k
    for idx in range(n):
        if mf[idx] == 0 or lf[idx] != 0:
            continue
        current += 1
        lf[idx] = current
        top = 0
        stack[top] = idx
        top += 1
        while top > 0:
            top -= 1
            cur = stack[top]
            cz = cur // (ny * nx)
            cy = (cur // nx) % ny
            cx = cur % nx
            for k in range(n_offs):
                zz = cz + dzs[k]
                yy = cy + dys[k]
                xx = cx + dxs[k]
                if zz < 0 or zz >= nz or yy < 0 or yy >= ny or xx < 0 or xx >= nx:
                    continue
                nb = (zz * ny + yy) * nx + xx
                if mf[nb] != 0 and lf[nb] == 0:
                    lf[nb] = current
                    stack[top] = nb
                    top += 1
    return labels, current


def histogram_fixed(x, double lo, double hi, int bins):
    """Fixed-width histogram; returns (counts, underflow, overflow).

    Bins are closed-open with the last bin closed; bin index is
    floor((x - lo)/(hi - lo) * bins).
    """
    x = np.ascontiguousarray(x, dtype=np.float32)
    counts = np.zeros(bins, dtype=np.int64)
    cdef const float[::1] xv = x.ravel()
    cdef long long[::1] cv = counts
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef long long under = 0, over = 0
    cdef double span = hi - lo
    cdef double xd, t
    cdef long long k
    for i in range(n):
        xd = <double> xv[i]
        if xd < lo:
            under += 1
        elif xd > hi:
            over += 1
        else:
            t = (xd - lo) / span
            k = <long long> (t * bins)
            if k == bins:
                k = bins - 1
            cv[k] += 1
    return counts, int(under), int(over)
