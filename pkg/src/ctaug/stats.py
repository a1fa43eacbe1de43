"""Corpus statistics: per-case and pooled viewing-window estimates, derived
augmentation ranges, global z-score statistics, and difficulty classification.

Quantiles are nearest-rank on sorted values (rank = ceil(q*n), clamped to
[1, n]) so every estimate is deterministic and checkable against a sorted
array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .volume import LIVER, TUMOR, Mask, Units, ViewingWindow, Volume, check_same_shape, require_units

MIN_WINDOW_WIDTH_HU = 1.0


def nearest_rank_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile of an ascending array.

    rank = ceil(q*n - 1e-9), clamped to [1, n]; the epsilon absorbs float
    noise in q (e.g. (1 - 0.99)/2 != 0.005 exactly) so exactly-integral
    ranks land where real arithmetic says they should.
    """
    n = len(sorted_values)
    if n == 0:
        raise ValidationError("quantile of an empty sample")
    rank = min(max(int(np.ceil(q * n - 1e-9)), 1), n)
    return float(sorted_values[rank - 1])


def _quantile_window(values: np.ndarray, coverage: float) -> ViewingWindow:
    if not 0.0 < coverage <= 1.0:
        raise ValidationError(f"coverage must be in (0, 1], got {coverage}")
    s = np.sort(np.asarray(values, dtype=np.float64))
    alpha = (1.0 - coverage) / 2.0
    lower = nearest_rank_quantile(s, alpha)
    upper = nearest_rank_quantile(s, 1.0 - alpha)
    width = max(upper - lower, MIN_WINDOW_WIDTH_HU)
    return ViewingWindow(width=width, level=(upper + lower) / 2.0)


@dataclass(frozen=True)
class CaseWindowEstimate:
    """Viewing window covering ``coverage`` of one case's labeled voxels."""

    case_id: str
    window: ViewingWindow
    coverage: float
    label: int
    voxel_count: int

    def to_json(self) -> dict:
        return {
            "case_id": self.case_id,
            "width": self.window.width,
            "level": self.window.level,
            "coverage": self.coverage,
            "label": self.label,
            "voxel_count": self.voxel_count,
        }


def case_window(
    v: Volume, m: Mask, label: int = TUMOR, coverage: float = 0.99, case_id: str = ""
) -> CaseWindowEstimate:
    """Symmetric quantile window over one case's labeled HU values.

    The window [q_{(1-c)/2}, q_{1-(1-c)/2}] contains at least
    ceil(coverage * n) of the labeled voxels; degenerate windows are floored
    to 1 HU wide.
    """
    require_units(v, Units.HU)
    check_same_shape(v.voxels, m.labels)
    values = v.voxels[m.labels == label]
    if values.size == 0:
        raise ValidationError(f"mask has no voxels with label {label}")
    return CaseWindowEstimate(
        case_id=case_id,
        window=_quantile_window(values, coverage),
        coverage=coverage,
        label=label,
        voxel_count=int(values.size),
    )


def pooled_window(pooled_values: np.ndarray, coverage: float = 0.99) -> ViewingWindow:
    """Quantile window over labeled voxels pooled across the corpus.

    The pool is the concatenation of every case's labeled HU values; this is
    deliberately not a mean of per-case windows.
    """
    pooled = np.asarray(pooled_values)
    if pooled.size == 0:
        raise ValidationError("pooled window over an empty corpus")
    return _quantile_window(pooled, coverage)


def derive_aug_ranges(
    per_case: list[CaseWindowEstimate],
    method: str = "quantile-span",
    alpha: float = 0.01,
    base: ViewingWindow | None = None,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Level/width sampling ranges from the spread of per-case windows.

    quantile-span: [q_alpha, q_{1-alpha}] over per-case levels and widths.
    When ``base`` is given, the ranges are minimally expanded to contain its
    level and width so they always form a valid augmentation spec with the
    pooled base window.
    """
    if method != "quantile-span":
        raise ValidationError(f"unknown range derivation method {method!r}")
    if len(per_case) < 2:
        raise ValidationError("range derivation requires at least 2 cases")
    levels = np.sort(np.array([c.window.level for c in per_case]))
    widths = np.sort(np.array([c.window.width for c in per_case]))
    level_range = [
        nearest_rank_quantile(levels, alpha),
        nearest_rank_quantile(levels, 1.0 - alpha),
    ]
    width_range = [
        nearest_rank_quantile(widths, alpha),
        nearest_rank_quantile(widths, 1.0 - alpha),
    ]
    if base is not None:
        level_range = [min(level_range[0], base.level), max(level_range[1], base.level)]
        width_range = [min(width_range[0], base.width), max(width_range[1], base.width)]
    return (level_range[0], level_range[1]), (width_range[0], width_range[1])


@dataclass(frozen=True)
class DifficultyThresholds:
    contrast_hu: float = 20.0
    ce_low_hu: float = 89.0
    ce_high_hu: float = 137.0


@dataclass(frozen=True)
class DifficultyFlags:
    """Per-case difficulty: low liver-tumor HU contrast, poor CE timing."""

    low_hu_contrast: bool
    mean_tissue_difference: float
    poor_ce_timing: bool
    median_liver_hu: float
    tumor_present: bool = True

    def to_json(self) -> dict:
        return {
            "low_hu_contrast": self.low_hu_contrast,
            "mean_tissue_difference": self.mean_tissue_difference,
            "poor_ce_timing": self.poor_ce_timing,
            "median_liver_hu": self.median_liver_hu,
            "tumor_present": self.tumor_present,
        }


def classify_difficulty(
    v: Volume, m: Mask, thresholds: DifficultyThresholds = DifficultyThresholds()
) -> DifficultyFlags:
    """Flag a case by tissue contrast and liver median HU.

    Liver statistics use parenchyma only (liver label excluding tumor
    voxels, which carry their own label).  Low contrast iff
    |mean tumor - mean liver| < contrast threshold; poor CE timing iff the
    liver median falls strictly outside [ce_low, ce_high].  Without tumor
    voxels the contrast flag is False and ``tumor_present`` marks it
    undefined.
    """
    require_units(v, Units.HU)
    check_same_shape(v.voxels, m.labels)
    liver_values = v.voxels[m.labels == LIVER]
    if liver_values.size == 0:
        raise ValidationError("mask has no liver voxels")
    tumor_values = v.voxels[m.labels == TUMOR]
    median_liver = float(np.median(liver_values))
    poor_ce = median_liver < thresholds.ce_low_hu or median_liver > thresholds.ce_high_hu
    if tumor_values.size == 0:
        return DifficultyFlags(
            low_hu_contrast=False,
            mean_tissue_difference=float("nan"),
            poor_ce_timing=poor_ce,
            median_liver_hu=median_liver,
            tumor_present=False,
        )
    diff = abs(
        float(tumor_values.mean(dtype=np.float64)) - float(liver_values.mean(dtype=np.float64))
    )
    return DifficultyFlags(
        low_hu_contrast=diff < thresholds.contrast_hu,
        mean_tissue_difference=diff,
        poor_ce_timing=poor_ce,
        median_liver_hu=median_liver,
        tumor_present=True,
    )


def percentile_ce_flags(
    medians: dict[str, float], tail_fraction: float = 0.10
) -> dict[str, bool]:
    """Corpus-level CE-timing flags: bottom and top floor(f*N) liver medians.

    Exactly floor(f*N) cases are flagged at each tail, ties broken by case_id
    order.
    """
    if not 0.0 <= tail_fraction <= 0.5:
        raise ValidationError(f"tail fraction must be in [0, 0.5], got {tail_fraction}")
    k = int(np.floor(tail_fraction * len(medians)))
    low = sorted(medians, key=lambda cid: (medians[cid], cid))[:k]
    high = sorted(medians, key=lambda cid: (-medians[cid], cid))[:k]
    flagged = set(low) | set(high)
    return {cid: cid in flagged for cid in medians}


def batch_moments(values: np.ndarray) -> tuple[int, float, float]:
    """(count, mean, sum of squared deviations) of one batch."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        return 0, 0.0, 0.0
    mean = float(values.mean())
    return int(values.size), mean, float(((values - mean) ** 2).sum())


class ForegroundStats:
    """Streaming mean/std (population) over foreground voxel batches.

    Batches reduce to (count, mean, m2) triples, so a corpus pass never has
    to hold more than one case's voxels.
    """

    def __init__(self):
        self.count = 0
        self._mean = 0.0
        self._m2 = 0.0

    def update(self, values: np.ndarray) -> None:
        self.merge(*batch_moments(values))

    def merge(self, count: int, mean: float, m2: float) -> None:
        if count == 0:
            return
        n_a = self.count
        delta = mean - self._mean
        total = n_a + count
        self._mean += delta * count / total
        self._m2 += m2 + delta * delta * n_a * count / total
        self.count = total

    @property
    def mean(self) -> float:
        if self.count == 0:
            raise ValidationError("no foreground voxels accumulated")
        return self._mean

    @property
    def std(self) -> float:
        if self.count == 0:
            raise ValidationError("no foreground voxels accumulated")
        return float(np.sqrt(self._m2 / self.count))
