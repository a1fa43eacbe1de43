"""Deterministic synthetic abdominal CT phantoms.

A body ellipsoid in air, a rib-like bone ring, a liver ellipsoid, and one
spherical tumor per configured HU offset.  Geometry is rasterized by
voxel-center inclusion in fractional index space (no anti-aliasing), so the
mask matches the geometry exactly and Gaussian noise never alters labels.
Identical specs (and seeds) produce bit-identical volumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .rng import SplitMix64
from .volume import LIVER, TUMOR, Mask, Units, Volume

# geometry constants, as fractions of the half-extent (N-1)/2 per axis
_BODY_CENTER = (1.0, 1.1, 1.0)
_BODY_SEMI = (0.95, 0.78, 0.88)
_RING_INNER, _RING_OUTER = 0.90, 0.985
_LIVER_CENTER = (1.0, 0.86, 1.16)
_LIVER_SEMI = (0.58, 0.40, 0.34)
_TUMOR_RADIUS_FRAC = 0.45  # of the smallest liver semi-axis
_TUMOR_SPREAD = 0.45  # tumor centers span +/- this fraction of the liver y semi-axis


@dataclass(frozen=True)
class PhantomSpec:
    shape: tuple[int, int, int] = (24, 48, 48)
    spacing: tuple[float, float, float] = (1.5, 1.5, 1.5)
    body_hu: float = 40.0
    liver_hu: float = 110.0
    tumor_hu_offsets: tuple[float, ...] = (-30.0,)
    bone_hu: float = 700.0
    air_hu: float = -1000.0
    ce_offset: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(n) < 4 for n in self.shape):
            raise ValidationError(f"phantom shape must be 3 axes of >= 4 voxels, got {self.shape}")
        if self.noise_sigma < 0:
            raise ValidationError("noise sigma must be non-negative")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "tumor_hu_offsets", tuple(float(o) for o in self.tumor_hu_offsets))

    def to_json(self) -> dict:
        return {
            "shape": list(self.shape),
            "spacing": list(self.spacing),
            "body_hu": self.body_hu,
            "liver_hu": self.liver_hu,
            "tumor_hu_offsets": list(self.tumor_hu_offsets),
            "bone_hu": self.bone_hu,
            "air_hu": self.air_hu,
            "ce_offset": self.ce_offset,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PhantomSpec":
        kwargs = {}
        for key in (
            "shape", "spacing", "body_hu", "liver_hu", "tumor_hu_offsets",
            "bone_hu", "air_hu", "ce_offset", "noise_sigma", "seed",
        ):
            if key in doc:
                value = doc[key]
                kwargs[key] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "PhantomSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _ellipsoid(coords, center, semi) -> np.ndarray:
    z, y, x = coords
    return (
        ((z - center[0]) / semi[0]) ** 2
        + ((y - center[1]) / semi[1]) ** 2
        + ((x - center[2]) / semi[2]) ** 2
    ) <= 1.0


def generate(spec: PhantomSpec) -> tuple[Volume, Mask]:
    """Rasterize the phantom; returns (HU volume, mask)."""
    nz, ny, nx = spec.shape
    half = np.array([(nz - 1) / 2.0, (ny - 1) / 2.0, (nx - 1) / 2.0])
    z, y, x = np.meshgrid(
        np.arange(nz, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nx, dtype=np.float64),
        indexing="ij",
    )
    body_center = np.array(_BODY_CENTER) * half
    body_semi = np.array(_BODY_SEMI) * half
    body = _ellipsoid((z, y, x), body_center, body_semi)
    if not body.any():
        raise ValidationError("degenerate phantom: empty body region")

    in_slice = (
        ((y - body_center[1]) / body_semi[1]) ** 2
        + ((x - body_center[2]) / body_semi[2]) ** 2
    )
    ring = body & (in_slice >= _RING_INNER**2) & (in_slice <= _RING_OUTER**2)

    liver_center = np.array(_LIVER_CENTER) * half
    liver_semi = np.array(_LIVER_SEMI) * half
    liver = _ellipsoid((z, y, x), liver_center, liver_semi)
    if not liver.any():
        raise ValidationError("degenerate phantom: empty liver region")
    if not (liver <= body).all():
        raise ValidationError("phantom geometry violates liver-inside-body")
    if (liver & ring).any():
        raise ValidationError("phantom geometry: liver intersects the bone ring")

    radius = max(float(_TUMOR_RADIUS_FRAC * liver_semi.min()), 1.0)
    k = len(spec.tumor_hu_offsets)
    if k > 1:
        # keep spheres pairwise disjoint along the placement axis
        gap = 2.0 * _TUMOR_SPREAD * float(liver_semi[1]) / (k - 1)
        radius = min(radius, 0.4 * gap)
    tumors = []
    occupied = np.zeros(spec.shape, dtype=bool)
    for j in range(k):
        frac = 0.0 if k == 1 else -_TUMOR_SPREAD + 2.0 * _TUMOR_SPREAD * j / (k - 1)
        center = liver_center + np.array([0.0, frac * liver_semi[1], 0.0])
        sphere = ((z - center[0]) ** 2 + (y - center[1]) ** 2 + (x - center[2]) ** 2) <= radius**2
        if not sphere.any():
            raise ValidationError(f"degenerate phantom: empty tumor region {j}")
        if not (sphere <= liver).all():
            raise ValidationError(f"phantom geometry: tumor {j} not strictly inside liver")
        if (sphere & occupied).any():
            raise ValidationError(f"phantom geometry: tumor {j} overlaps another tumor")
        occupied |= sphere
        tumors.append(sphere)

    values = np.full(spec.shape, spec.air_hu, dtype=np.float64)
    values[body] = spec.body_hu
    values[ring] = spec.bone_hu
    values[liver] = spec.liver_hu + spec.ce_offset
    labels = np.zeros(spec.shape, dtype=np.uint8)
    labels[liver] = LIVER
    for sphere, offset in zip(tumors, spec.tumor_hu_offsets):
        values[sphere] = spec.liver_hu + offset + spec.ce_offset
        labels[sphere] = TUMOR

    if spec.noise_sigma > 0:
        noise_rng = SplitMix64(spec.seed).substream("phantom-noise")
        noise = noise_rng.normals(values.size).reshape(spec.shape)
        values = values + spec.noise_sigma * noise

    volume = Volume(voxels=values.astype(np.float32), spacing=spec.spacing, units=Units.HU)
    mask = Mask(labels=labels, spacing=spec.spacing)
    return volume, mask
