"""Standard intensity augmentations applied after clipping, plus the composed
framework-style pipelines used as comparison baselines.

These transforms operate on clipped (normalized or z-scored) intensities and,
by default, do not re-clip, which is exactly what displaces boundary values
and creates clipping artifacts.  Parameter defaults mirror the cited
frameworks' published recipes and are configuration, not ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import UnitsError, ValidationError
from .rng import SplitMix64
from .volume import Units, Volume

CONTRAST = "contrast"
BRIGHTNESS_MULT = "brightness_mult"
BRIGHTNESS_ADD = "brightness_add"
GAMMA = "gamma"
GAMMA_INVERSE = "gamma_inverse"

KINDS = (CONTRAST, BRIGHTNESS_MULT, BRIGHTNESS_ADD, GAMMA, GAMMA_INVERSE)

ANCHOR_IMAGE_MEAN = "image_mean"
ANCHOR_WINDOW_CENTER = "window_center"


def _require_clipped_domain(v: Volume) -> None:
    if v.units == Units.HU:
        raise UnitsError("intensity transforms expect clipped (norm01/zscore) volumes, got hu")


def _degraded(units: Units) -> Units:
    # unbounded output cannot keep the norm01 tag
    return Units.ZSCORE if units == Units.NORM01 else units


def contrast(v: Volume, alpha: float, anchor: str = ANCHOR_IMAGE_MEAN,
             preserve_range: bool = False) -> Volume:
    """out = a + alpha * (x - a), anchored at the image mean or the window
    center (0.5 on zero-one normalized volumes); optionally re-clipped to the
    original per-volume [min, max]."""
    _require_clipped_domain(v)
    x = v.voxels
    if anchor == ANCHOR_IMAGE_MEAN:
        a = np.float32(x.mean(dtype=np.float64))
    elif anchor == ANCHOR_WINDOW_CENTER:
        a = np.float32(0.5)
    else:
        raise ValidationError(f"unknown contrast anchor {anchor!r}")
    out = a + np.float32(alpha) * (x - a)
    if preserve_range:
        out = np.clip(out, x.min(), x.max())
        return v.with_voxels(out)
    return v.with_voxels(out, units=_degraded(v.units))


def brightness_mult(v: Volume, factor: float, clip01: bool = False) -> Volume:
    """out = factor * x; optional re-clip to [0, 1] (off by default)."""
    _require_clipped_domain(v)
    out = v.voxels * np.float32(factor)
    if clip01:
        return v.with_voxels(np.clip(out, np.float32(0), np.float32(1)))
    return v.with_voxels(out, units=_degraded(v.units))


def brightness_add(v: Volume, offset: float, clip01: bool = False) -> Volume:
    """out = x + offset; optional re-clip to [0, 1] (off by default)."""
    _require_clipped_domain(v)
    out = v.voxels + np.float32(offset)
    if clip01:
        return v.with_voxels(np.clip(out, np.float32(0), np.float32(1)))
    return v.with_voxels(out, units=_degraded(v.units))


def gamma(v: Volume, g: float, inverse: bool = False) -> Volume:
    """Power-law remap inside the per-volume range.

    The volume is rescaled to [0, 1] by its min/max, x**g applied (inverse:
    1 - (1-x)**g), then rescaled back; the endpoints are fixed points, so the
    per-volume range and the units tag are preserved.  A constant volume is
    returned unchanged.
    """
    _require_clipped_domain(v)
    if not g > 0:
        raise ValidationError(f"gamma requires g > 0, got {g}")
    x = v.voxels
    lo, hi = np.float32(x.min()), np.float32(x.max())
    if lo == hi:
        return v
    t = (x - lo) / (hi - lo)
    g32 = np.float32(g)
    if inverse:
        t = np.float32(1) - np.power(np.float32(1) - t, g32)
    else:
        t = np.power(t, g32)
    return v.with_voxels(lo + t * (hi - lo))


@dataclass(frozen=True)
class IntensityTransform:
    """One stochastic intensity transform inside a pipeline."""

    kind: str
    parameter_range: tuple[float, float]
    probability: float = 1.0
    anchor: str = ANCHOR_IMAGE_MEAN
    preserve_range: bool = False
    clip01: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown transform kind {self.kind!r}")
        lo, hi = self.parameter_range
        if not lo <= hi:
            raise ValidationError(f"parameter range inverted: {self.parameter_range}")
        if self.kind in (GAMMA, GAMMA_INVERSE) and not lo > 0:
            raise ValidationError(f"gamma ranges require lo > 0, got {self.parameter_range}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError(f"probability must be in [0, 1], got {self.probability}")

    def apply(self, v: Volume, parameter: float) -> Volume:
        if self.kind == CONTRAST:
            return contrast(v, parameter, anchor=self.anchor, preserve_range=self.preserve_range)
        if self.kind == BRIGHTNESS_MULT:
            return brightness_mult(v, parameter, clip01=self.clip01)
        if self.kind == BRIGHTNESS_ADD:
            return brightness_add(v, parameter, clip01=self.clip01)
        return gamma(v, parameter, inverse=self.kind == GAMMA_INVERSE)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "parameter_range": list(self.parameter_range),
            "probability": self.probability,
            "anchor": self.anchor,
            "preserve_range": self.preserve_range,
            "clip01": self.clip01,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IntensityTransform":
        try:
            return cls(
                kind=doc["kind"],
                parameter_range=tuple(float(x) for x in doc["parameter_range"]),
                probability=float(doc.get("probability", 1.0)),
                anchor=doc.get("anchor", ANCHOR_IMAGE_MEAN),
                preserve_range=bool(doc.get("preserve_range", False)),
                clip01=bool(doc.get("clip01", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad transform document: {exc}") from exc


@dataclass(frozen=True)
class Pipeline:
    """Ordered intensity transforms; an empty list is the explicit identity."""

    transforms: tuple[IntensityTransform, ...] = ()
    seed: int = 0

    def to_json(self) -> dict:
        return {"pipeline": [t.to_json() for t in self.transforms], "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "Pipeline":
        if "pipeline" not in doc:
            raise ValidationError("pipeline document requires a 'pipeline' key")
        return cls(
            transforms=tuple(IntensityTransform.from_json(t) for t in doc["pipeline"]),
            seed=int(doc.get("seed", 0)),
        )

    @classmethod
    def from_file(cls, path) -> "Pipeline":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def run_pipeline(v: Volume, pipeline: Pipeline, rng: SplitMix64) -> Volume:
    """Apply each transform gate-then-value in list order.

    Every transform consumes one gate draw; a passed gate consumes one more
    for the parameter, drawn uniformly from the transform's range.
    """
    out = v
    for t in pipeline.transforms:
        if rng.uniform() < t.probability:
            parameter = rng.uniform_in(*t.parameter_range)
            out = t.apply(out, parameter)
    return out


def preset_nnunet() -> Pipeline:
    """Contrast, multiplicative brightness, gamma, inverse gamma in sequence."""
    return Pipeline(
        transforms=(
            IntensityTransform(CONTRAST, (0.75, 1.25), probability=0.15,
                               anchor=ANCHOR_IMAGE_MEAN, preserve_range=True),
            IntensityTransform(BRIGHTNESS_MULT, (0.75, 1.25), probability=0.15),
            IntensityTransform(GAMMA, (0.7, 1.5), probability=0.3),
            IntensityTransform(GAMMA_INVERSE, (0.7, 1.5), probability=0.1),
        )
    )


def preset_unetr() -> Pipeline:
    """Additive then multiplicative brightness on normalized intensities."""
    return Pipeline(
        transforms=(
            IntensityTransform(BRIGHTNESS_ADD, (-0.1, 0.1), probability=0.5),
            IntensityTransform(BRIGHTNESS_MULT, (0.9, 1.1), probability=0.1),
        )
    )


def equal_strength_intensity_ranges(
    level_range: tuple[float, float],
    width_range: tuple[float, float],
    base_level: float,
    base_width: float,
    global_std: float,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Intensity shift/scale ranges matching window ranges on the z-scored axis.

    Offset range is the level range taken relative to the base level divided
    by the global std; factor range is the width range over the base width.
    Lets ablations swap window augmentation for intensity augmentation with
    all other variables unchanged.
    """
    if not global_std > 0:
        raise ValidationError("global std must be positive")
    offset_range = (
        (level_range[0] - base_level) / global_std,
        (level_range[1] - base_level) / global_std,
    )
    factor_range = (width_range[0] / base_width, width_range[1] / base_width)
    return offset_range, factor_range
