"""Windowing preprocessing and window-based augmentation.

``apply_window`` clips raw HU to a viewing window and normalizes.  The
stochastic variants sample the window first: ``random_windowing`` re-normalizes
with the sampled window (min-max), while ``rw_shift_scale`` keeps a fixed
normalization map so surviving HU always land on the same output value and the
augmentation acts purely through which intensities survive clipping.

Draw order is fixed and documented for reproducibility: width gate, width
value (if gated in), level gate, level value (if gated in); each evaluated
gate or value consumes exactly one uniform draw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .rng import SplitMix64
from .volume import Units, ViewingWindow, Volume, require_units

MINMAX_SAMPLED = "minmax_sampled"
FIXED_BASE = "fixed_base"
ZSCORE_GLOBAL = "zscore_global"


@dataclass(frozen=True)
class Normalization:
    """Post-clipping intensity map.

    minmax_sampled: affine map of the applied window onto [0, 1].
    fixed_base: affine map of a fixed base window; values from wider applied
        windows legitimately leave [0, 1] (tagged zscore).
    zscore_global: (x - mean) / std with global dataset statistics.
    """

    mode: str
    base: ViewingWindow | None = None
    mean: float | None = None
    std: float | None = None

    def __post_init__(self):
        if self.mode == MINMAX_SAMPLED:
            pass
        elif self.mode == FIXED_BASE:
            if self.base is None:
                raise ValidationError("fixed_base normalization requires a base window")
        elif self.mode == ZSCORE_GLOBAL:
            if self.mean is None or self.std is None or not self.std > 0:
                raise ValidationError("zscore_global normalization requires mean and std > 0")
        else:
            raise ValidationError(f"unknown normalization mode {self.mode!r}")

    @classmethod
    def minmax(cls) -> "Normalization":
        return cls(mode=MINMAX_SAMPLED)

    @classmethod
    def fixed_base(cls, base: ViewingWindow) -> "Normalization":
        return cls(mode=FIXED_BASE, base=base)

    @classmethod
    def zscore(cls, mean: float, std: float) -> "Normalization":
        return cls(mode=ZSCORE_GLOBAL, mean=mean, std=std)

    def to_json(self) -> dict:
        doc: dict = {"mode": self.mode}
        if self.base is not None:
            doc["base"] = self.base.to_json()
        if self.mean is not None:
            doc["mean"] = self.mean
        if self.std is not None:
            doc["std"] = self.std
        return doc

    @classmethod
    def from_json(cls, doc: dict, default_base: ViewingWindow | None = None) -> "Normalization":
        mode = doc.get("mode", MINMAX_SAMPLED)
        base = ViewingWindow.from_json(doc["base"]) if "base" in doc else None
        if mode == FIXED_BASE and base is None:
            base = default_base
        return cls(mode=mode, base=base, mean=doc.get("mean"), std=doc.get("std"))


@dataclass(frozen=True)
class AugmentationSpec:
    """Sampling ranges, gate probabilities, normalization, and seed."""

    base: ViewingWindow
    level_range: tuple[float, float]
    width_range: tuple[float, float]
    p_level: float = 0.3
    p_width: float = 0.3
    normalization: Normalization = Normalization.minmax()
    seed: int = 0

    def __post_init__(self):
        l_min, l_max = self.level_range
        w_min, w_max = self.width_range
        if not l_min <= l_max:
            raise ValidationError(f"level range inverted: {self.level_range}")
        if not (0 < w_min <= w_max):
            raise ValidationError(f"width range must satisfy 0 < W_min <= W_max: {self.width_range}")
        if not (w_min <= self.base.width <= w_max):
            raise ValidationError(
                f"base width {self.base.width} outside width range {self.width_range}"
            )
        for name, p in (("p_level", self.p_level), ("p_width", self.p_width)):
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {p}")

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "level_range": list(self.level_range),
            "width_range": list(self.width_range),
            "p_level": self.p_level,
            "p_width": self.p_width,
            "normalization": self.normalization.to_json(),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AugmentationSpec":
        try:
            base = ViewingWindow.from_json(doc["base"])
            return cls(
                base=base,
                level_range=tuple(float(x) for x in doc["level_range"]),
                width_range=tuple(float(x) for x in doc["width_range"]),
                p_level=float(doc.get("p_level", 0.3)),
                p_width=float(doc.get("p_width", 0.3)),
                normalization=Normalization.from_json(
                    doc.get("normalization", {}), default_base=base
                ),
                seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad augmentation spec: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "AugmentationSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class SampledWindow:
    window: ViewingWindow
    level_was_shifted: bool
    width_was_scaled: bool
    draws_consumed: int


def sample_window(spec: AugmentationSpec, rng: SplitMix64) -> SampledWindow:
    """Draw a window: width gate, width value, level gate, level value."""
    width = spec.base.width
    level = spec.base.level
    scaled = shifted = False
    draws = 2
    if rng.uniform() < spec.p_width:
        width = rng.uniform_in(*spec.width_range)
        scaled = True
        draws += 1
    if rng.uniform() < spec.p_level:
        level = rng.uniform_in(*spec.level_range)
        shifted = True
        draws += 1
    return SampledWindow(
        window=ViewingWindow(width=width, level=level),
        level_was_shifted=shifted,
        width_was_scaled=scaled,
        draws_consumed=draws,
    )


def window_bounds_f32(w: ViewingWindow) -> tuple[float, float]:
    """Clip interval realized in float32, as stored voxels will see it."""
    return float(np.float32(w.lower)), float(np.float32(w.upper))


def output_interval(w: ViewingWindow, normalization: Normalization) -> tuple[float, float]:
    """Image of the clip interval under the normalization map (float32)."""
    lo, up = window_bounds_f32(w)
    if normalization.mode == MINMAX_SAMPLED:
        return 0.0, 1.0
    if normalization.mode == FIXED_BASE:
        blo, bup = window_bounds_f32(normalization.base)
        den = np.float32(bup) - np.float32(blo)
        lo_out = (np.float32(lo) - np.float32(blo)) / den
        up_out = (np.float32(up) - np.float32(blo)) / den
        return float(lo_out), float(up_out)
    mean, std = np.float32(normalization.mean), np.float32(normalization.std)
    return float((np.float32(lo) - mean) / std), float((np.float32(up) - mean) / std)


def apply_window(
    v: Volume, w: ViewingWindow, normalization: Normalization = Normalization.minmax()
) -> Volume:
    """Clip an HU volume to ``w`` and normalize.

    The interval is realized in float32 as [lo, up] and the min-max map
    divides by (up - lo), so outputs are exactly within [0, 1] with both
    endpoints attained whenever the input spans the window.
    """
    require_units(v, Units.HU)
    lo, up = window_bounds_f32(w)
    if normalization.mode == MINMAX_SAMPLED:
        den = float(np.float32(up) - np.float32(lo))
        out = kernels.clip_affine(v.voxels, lo, up, lo, den)
        return v.with_voxels(out, units=Units.NORM01)
    if normalization.mode == FIXED_BASE:
        blo, bup = window_bounds_f32(normalization.base)
        den = float(np.float32(bup) - np.float32(blo))
        out = kernels.clip_affine(v.voxels, lo, up, blo, den)
        return v.with_voxels(out, units=Units.ZSCORE)
    out = kernels.clip_affine(v.voxels, lo, up, normalization.mean, normalization.std)
    return v.with_voxels(out, units=Units.ZSCORE)


def random_windowing(v: Volume, spec: AugmentationSpec, rng: SplitMix64) -> Volume:
    """Sample a window per the spec and window the volume with it."""
    sampled = sample_window(spec, rng)
    return apply_window(v, sampled.window, spec.normalization)


def rw_shift_scale(v: Volume, spec: AugmentationSpec, rng: SplitMix64) -> Volume:
    """HU-preserving variant: clip to the sampled window, normalize with the
    fixed map, so augmentation only adds or removes context."""
    if spec.normalization.mode == MINMAX_SAMPLED:
        raise ValidationError(
            "rw_shift_scale requires fixed_base or zscore_global normalization; "
            "minmax_sampled is random_windowing"
        )
    sampled = sample_window(spec, rng)
    return apply_window(v, sampled.window, spec.normalization)
