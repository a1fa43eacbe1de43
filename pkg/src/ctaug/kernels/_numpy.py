"""Pure numpy/scipy kernel implementations.

These are the import-time fallback for the compiled extension and must stay
bit-identical to it: same dtypes, same operation order, same rounding.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_STRUCTURE_RANK = {6: 1, 18: 2, 26: 3}


def clip_affine(x: np.ndarray, lo: float, up: float, sub: float, den: float) -> np.ndarray:
    """(clip(x, lo, up) - sub) / den, elementwise in float32."""
    lo32, up32 = np.float32(lo), np.float32(up)
    sub32, den32 = np.float32(sub), np.float32(den)
    c = np.minimum(np.maximum(x, lo32), up32)
    return (c - sub32) / den32


def _axis_coords(n_out: int, step: float, n_src: int) -> np.ndarray:
    return np.minimum(np.arange(n_out, dtype=np.float64) * step, float(n_src - 1))


def resample_trilinear(src: np.ndarray, out_shape, steps) -> np.ndarray:
    """Corner-aligned trilinear resample of a float32 volume."""
    nz, ny, nx = src.shape
    cz = _axis_coords(out_shape[0], steps[0], nz)
    cy = _axis_coords(out_shape[1], steps[1], ny)
    cx = _axis_coords(out_shape[2], steps[2], nx)
    z0 = np.floor(cz).astype(np.int64)
    y0 = np.floor(cy).astype(np.int64)
    x0 = np.floor(cx).astype(np.int64)
    fz = (cz - z0)[:, None, None]
    fy = (cy - y0)[None, :, None]
    fx = (cx - x0)[None, None, :]
    z1 = np.minimum(z0 + 1, nz - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    x1 = np.minimum(x0 + 1, nx - 1)

    def gather(zi, yi, xi):
        return src[np.ix_(zi, yi, xi)].astype(np.float64)

    c00 = _lerp(gather(z0, y0, x0), gather(z0, y0, x1), fx)
    c01 = _lerp(gather(z0, y1, x0), gather(z0, y1, x1), fx)
    c10 = _lerp(gather(z1, y0, x0), gather(z1, y0, x1), fx)
    c11 = _lerp(gather(z1, y1, x0), gather(z1, y1, x1), fx)
    c0 = _lerp(c00, c01, fy)
    c1 = _lerp(c10, c11, fy)
    return _lerp(c0, c1, fz).astype(np.float32)


def _lerp(a, b, t):
    return a + (b - a) * t


def resample_nearest(src: np.ndarray, out_shape, steps) -> np.ndarray:
    """Nearest-neighbor resample (ties round up: floor(coord + 0.5))."""
    idx = []
    for axis in range(3):
        c = np.arange(out_shape[axis], dtype=np.float64) * steps[axis]
        i = np.floor(c + 0.5).astype(np.int64)
        idx.append(np.clip(i, 0, src.shape[axis] - 1))
    return src[np.ix_(*idx)].copy()


def label_components(mask: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """Label connected foreground, numbering components by first-voxel scan order."""
    structure = ndimage.generate_binary_structure(3, _STRUCTURE_RANK[connectivity])
    raw, n = ndimage.label(mask != 0, structure=structure)
    if n == 0:
        return raw.astype(np.int32), 0
    flat = raw.ravel()
    values, first = np.unique(flat, return_index=True)
    keep = values != 0
    values, first = values[keep], first[keep]
    order = np.argsort(first, kind="stable")
    remap = np.zeros(int(values.max()) + 1, dtype=np.int32)
    remap[values[order]] = np.arange(1, n + 1, dtype=np.int32)
    return remap[flat].reshape(mask.shape), n


def histogram_fixed(x: np.ndarray, lo: float, hi: float, bins: int) -> tuple[np.ndarray, int, int]:
    """Fixed-width histogram; returns (counts, underflow, overflow).

    Bins are closed-open with the last bin closed; bin index is
    floor((x - lo)/(hi - lo) * bins).
    """
    xd = np.ascontiguousarray(x, dtype=np.float64).ravel()
    under = int(np.count_nonzero(xd < lo))
    over = int(np.count_nonzero(xd > hi))
    inside = xd[(xd >= lo) & (xd <= hi)]
    t = (inside - lo) / (hi - lo)
    idx = (t * bins).astype(np.int64)
    idx[idx == bins] = bins - 1
    counts = np.bincount(idx, minlength=bins).astype(np.int64)
    return counts, under, over
