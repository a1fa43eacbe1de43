"""Core data model: volumes, masks, viewing windows, calibration, resampling.

All types are immutable after construction (voxel arrays are frozen) and all
operations are pure functions, so everything here is safe to use from
concurrent workers.  Voxels are stored as float32 in z-major, x-fastest
order; int16 input is widened on ingest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ShapeMismatchError, UnitsError, ValidationError
from . import kernels

BACKGROUND, LIVER, TUMOR = 0, 1, 2
DEFAULT_LABEL_NAMES = {BACKGROUND: "background", LIVER: "liver", TUMOR: "tumor"}


class Units(Enum):
    """Intensity unit tag.

    ``NORM01`` guarantees every voxel lies in [0, 1].  ``ZSCORE`` covers all
    standardized/unbounded real intensities (global z-scores as well as fixed
    affine rescalings that may leave [0, 1]).
    """

    HU = "hu"
    NORM01 = "norm01"
    ZSCORE = "zscore"


def _frozen_array(a: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=dtype)
    if out is a and a.flags.writeable:
        out = out.copy()
    out.setflags(write=False)
    return out


def _check_spacing(spacing) -> tuple[float, float, float]:
    s = tuple(float(x) for x in spacing)
    if len(s) != 3 or any(x <= 0 for x in s) or not all(np.isfinite(s)):
        raise ValidationError(f"spacing must be 3 positive reals, got {spacing!r}")
    return s


@dataclass(frozen=True)
class ViewingWindow:
    """Clipping interval in HU given as (width, level)."""

    width: float
    level: float

    def __post_init__(self):
        if not (self.width > 0 and np.isfinite(self.width) and np.isfinite(self.level)):
            raise ValidationError(f"window width must be positive, got {self.width!r}")

    @property
    def lower(self) -> float:
        return self.level - self.width / 2.0

    @property
    def upper(self) -> float:
        return self.level + self.width / 2.0

    def to_json(self) -> dict:
        return {"width": self.width, "level": self.level}

    @classmethod
    def from_json(cls, doc: dict) -> "ViewingWindow":
        try:
            return cls(width=float(doc["width"]), level=float(doc["level"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad viewing window document: {doc!r}") from exc


@dataclass(frozen=True)
class Volume:
    """Dense 3D scalar field with voxel spacing (mm) and a units tag."""

    voxels: np.ndarray
    spacing: tuple[float, float, float]
    units: Units = Units.HU

    def __post_init__(self):
        v = self.voxels
        if v.ndim != 3 or v.size == 0:
            raise ValidationError(f"volume must be a non-empty 3D array, got shape {v.shape}")
        if v.dtype != np.float32:
            if v.dtype not in (np.int16, np.float64, np.int32):
                raise ValidationError(f"unsupported voxel dtype {v.dtype}")
            v = v.astype(np.float32)
        object.__setattr__(self, "voxels", _frozen_array(v, np.float32))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        if self.units == Units.NORM01:
            lo, hi = float(self.voxels.min()), float(self.voxels.max())
            if lo < 0.0 or hi > 1.0:
                raise ValidationError(
                    f"norm01 volume has voxels outside [0, 1]: min={lo}, max={hi}"
                )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.voxels.shape

    def with_voxels(self, voxels: np.ndarray, units: Units | None = None) -> "Volume":
        return Volume(voxels=voxels, spacing=self.spacing, units=units or self.units)


@dataclass(frozen=True)
class Mask:
    """Integer label field aligned with a Volume (0=background, 1=liver, 2=tumor)."""

    labels: np.ndarray
    spacing: tuple[float, float, float]
    label_names: dict[int, str] = field(default_factory=lambda: dict(DEFAULT_LABEL_NAMES))

    def __post_init__(self):
        m = self.labels
        if m.ndim != 3 or m.size == 0:
            raise ValidationError(f"mask must be a non-empty 3D array, got shape {m.shape}")
        object.__setattr__(self, "labels", _frozen_array(m, np.uint8))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        present = set(np.unique(self.labels).tolist())
        declared = set(self.label_names)
        if not present <= declared:
            raise ValidationError(f"mask labels {present - declared} not in declared set {declared}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.labels.shape

    def binary(self, label: int) -> np.ndarray:
        return self.labels == label


def check_same_shape(a, b) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def require_units(v: Volume, units: Units) -> None:
    if v.units != units:
        raise UnitsError(f"expected {units.value} volume, got {v.units.value}")


def hu_from_attenuation(
    mu: float, mu_water: float, mu_air: float, convention: str = "conventional"
) -> float:
    """Calibrate a linear attenuation value against water and air references.

    ``convention="conventional"`` puts water at 0 HU and air at -1000 HU.
    ``convention="verbatim"`` applies the textbook ratio
    1000*(mu - mu_water)/(mu_air - mu_water) literally, which puts air at
    +1000; downstream thresholds in this package assume the conventional
    scale.
    """
    if mu_air == mu_water:
        raise ValidationError("degenerate calibration: mu_air == mu_water")
    if convention == "conventional":
        return 1000.0 * ((mu - mu_water) / (mu_water - mu_air))
    if convention == "verbatim":
        return 1000.0 * ((mu - mu_water) / (mu_air - mu_water))
    raise ValidationError(f"unknown HU convention {convention!r}")


def _resample_geometry(shape, spacing, target_spacing):
    target = _check_spacing(target_spacing)
    out_shape = tuple(
        max(1, int(np.floor(n * s / t + 0.5)))
        for n, s, t in zip(shape, spacing, target)
    )
    steps = tuple(t / s for s, t in zip(spacing, target))
    return out_shape, steps, target


def resample_trilinear(v: Volume, target_spacing) -> Volume:
    """Resample to ``target_spacing`` with trilinear interpolation.

    Output shape is round(shape * spacing / target) with at least one voxel
    per axis.  Output voxel i maps to source coordinate i * (target/spacing),
    clamped to the source grid (corner-aligned sampling), so resampling to
    the identical spacing is voxel-exact.
    """
    out_shape, steps, target = _resample_geometry(v.shape, v.spacing, target_spacing)
    if out_shape == v.shape and all(s == 1.0 for s in steps):
        return Volume(voxels=v.voxels, spacing=target, units=v.units)
    out = kernels.resample_trilinear(v.voxels, out_shape, steps)
    return Volume(voxels=out, spacing=target, units=v.units)


def resample_mask_nearest(m: Mask, target_spacing) -> Mask:
    """Nearest-neighbor companion of :func:`resample_trilinear` for masks."""
    out_shape, steps, target = _resample_geometry(m.shape, m.spacing, target_spacing)
    if out_shape == m.shape and all(s == 1.0 for s in steps):
        return Mask(labels=m.labels, spacing=target, label_names=dict(m.label_names))
    out = kernels.resample_nearest(m.labels, out_shape, steps)
    return Mask(labels=out, spacing=target, label_names=dict(m.label_names))
