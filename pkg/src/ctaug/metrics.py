"""Segmentation evaluation: Dice, connected-component lesion instance
metrics, and the Wilcoxon signed-rank test used for significance."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import erfc, sqrt

import numpy as np

from . import kernels
from .errors import ShapeMismatchError, ValidationError

DEFAULT_OVERLAP_THRESHOLD = 0.10


def _as_binary(a) -> np.ndarray:
    return np.asarray(a) != 0


def dice(pred, gt) -> float:
    """2|P&G| / (|P|+|G|); two empty masks agree perfectly (1.0)."""
    p = _as_binary(pred)
    g = _as_binary(gt)
    if p.shape != g.shape:
        raise ShapeMismatchError(f"shape mismatch: {p.shape} vs {g.shape}")
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(p & g)) / denom


def connected_components(mask, connectivity: int | None = None) -> tuple[np.ndarray, int]:
    """Deterministic component labeling (numbered by first-voxel scan order).

    3D arrays take connectivity 6, 18, or 26 (default 26); 2D arrays take 4
    or 8 (default 8) and are handled as single-slice volumes.
    """
    m = _as_binary(mask).astype(np.uint8)
    squeeze = False
    if m.ndim == 2:
        conn_3d = {None: 26, 8: 26, 4: 6}.get(connectivity)
        if conn_3d is None:
            raise ValidationError(f"2D connectivity must be 4 or 8, got {connectivity}")
        m = m[None, :, :]
        squeeze = True
    elif m.ndim == 3:
        conn_3d = 26 if connectivity is None else connectivity
        if conn_3d not in (6, 18, 26):
            raise ValidationError(f"3D connectivity must be 6, 18, or 26, got {connectivity}")
    else:
        raise ValidationError(f"mask must be 2D or 3D, got {m.ndim}D")
    labels, count = kernels.label_components(np.ascontiguousarray(m), conn_3d)
    if squeeze:
        labels = labels[0]
    return labels, count


@dataclass(frozen=True)
class InstanceMatchResult:
    """Lesion-instance counts plus per-GT-lesion overlap fractions."""

    true_positives: int
    false_positives: int
    false_negatives: int
    predicted_components: int
    overlap_fractions: list[float] = field(default_factory=list)

    @property
    def recall(self) -> float:
        denom = self.true_positives + self.false_negatives
        return self.true_positives / denom if denom else 1.0

    @property
    def precision(self) -> float:
        if self.predicted_components == 0:
            return 1.0
        return (self.predicted_components - self.false_positives) / self.predicted_components

    @property
    def f1(self) -> float:
        denom = 2 * self.true_positives + self.false_positives + self.false_negatives
        return 2 * self.true_positives / denom if denom else 1.0

    def to_json(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "predicted_components": self.predicted_components,
            "overlap_fractions": self.overlap_fractions,
            "f1": self.f1,
            "recall": self.recall,
            "precision": self.precision,
        }


def lesion_instance_metrics(
    pred,
    gt,
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
    connectivity: int | None = None,
    matching: str = "union",
) -> InstanceMatchResult:
    """Instance-wise lesion detection via connected components.

    A GT lesion counts as detected iff the fraction of its voxels covered by
    the prediction strictly exceeds ``overlap_threshold`` (exactly 10% of a
    10-voxel lesion is NOT detected).  A predicted component counts as
    correct iff the fraction of its voxels covering GT strictly exceeds the
    threshold.  ``matching="union"`` measures coverage against the whole
    opposing foreground; ``"pairwise"`` against the single best opposing
    component.  F1 = 2TP/(2TP+FP+FN) with TP = detected GT lesions.
    """
    p = _as_binary(pred)
    g = _as_binary(gt)
    if p.shape != g.shape:
        raise ShapeMismatchError(f"shape mismatch: {p.shape} vs {g.shape}")
    if matching not in ("union", "pairwise"):
        raise ValidationError(f"matching must be union or pairwise, got {matching!r}")
    gt_labels, n_gt = connected_components(g, connectivity)
    pred_labels, n_pred = connected_components(p, connectivity)

    overlaps: list[float] = []
    tp = 0
    for k in range(1, n_gt + 1):
        lesion = gt_labels == k
        size = int(np.count_nonzero(lesion))
        if matching == "union":
            covered = int(np.count_nonzero(p & lesion))
        else:
            inside = pred_labels[lesion]
            inside = inside[inside != 0]
            covered = int(np.bincount(inside).max()) if inside.size else 0
        fraction = covered / size
        overlaps.append(fraction)
        if fraction > overlap_threshold:
            tp += 1

    fp = 0
    for k in range(1, n_pred + 1):
        comp = pred_labels == k
        size = int(np.count_nonzero(comp))
        if matching == "union":
            covering = int(np.count_nonzero(g & comp))
        else:
            inside = gt_labels[comp]
            inside = inside[inside != 0]
            covering = int(np.bincount(inside).max()) if inside.size else 0
        if not covering / size > overlap_threshold:
            fp += 1

    return InstanceMatchResult(
        true_positives=tp,
        false_positives=fp,
        false_negatives=n_gt - tp,
        predicted_components=n_pred,
        overlap_fractions=overlaps,
    )


class SignificanceMethod(Enum):
    EXACT_ENUMERATION = "exact_enumeration"
    NORMAL_APPROXIMATION = "normal_approximation"


EXACT_LIMIT = 25


@dataclass(frozen=True)
class SignificanceResult:
    statistic: float
    p_value: float
    n_effective: int
    method: SignificanceMethod

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n_effective": self.n_effective,
            "method": self.method.value,
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing the mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(paired_a, paired_b) -> SignificanceResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; tied |differences| share average ranks.
    The statistic is W+ (rank sum of positive differences).  For
    n_effective <= 25 the p-value is exact: the tie-aware null distribution
    of W+ is computed over all 2^n sign assignments (as an integer
    convolution, so ranks in halves stay exact) and the two-sided tail is
    P(|W+ - mu| >= |w - mu|) with mu the null mean.  Larger samples use the
    normal approximation with Var(W+) = sum(ranks^2)/4 and a 0.5 continuity
    correction.
    """
    a = np.asarray(paired_a, dtype=np.float64)
    b = np.asarray(paired_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatchError("paired samples must be equal-length 1D sequences")
    if a.size == 0:
        raise ValidationError("empty samples")
    d = a - b
    d = d[d != 0.0]
    n = int(d.size)
    if n == 0:
        return SignificanceResult(0.0, 1.0, 0, SignificanceMethod.EXACT_ENUMERATION)
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_LIMIT:
        p = _exact_two_sided_p(ranks, w_plus)
        return SignificanceResult(w_plus, p, n, SignificanceMethod.EXACT_ENUMERATION)
    mu = ranks.sum() / 2.0
    sigma = sqrt(float((ranks**2).sum()) / 4.0)
    z = (abs(w_plus - mu) - 0.5) / sigma
    p = min(1.0, erfc(max(z, 0.0) / sqrt(2.0)))
    return SignificanceResult(w_plus, p, n, SignificanceMethod.NORMAL_APPROXIMATION)


def _exact_two_sided_p(ranks: np.ndarray, w_plus: float) -> float:
    # double the ranks so tied (half-integer) ranks become exact integers
    r2 = [int(round(2 * r)) for r in ranks]
    total2 = sum(r2)
    # counts[s] = number of sign assignments with doubled rank sum s
    counts = [0] * (total2 + 1)
    counts[0] = 1
    top = 0
    for r in r2:
        top += r
        for s in range(top, r - 1, -1):
            counts[s] += counts[s - r]
    # two-sided tail in doubled units: |2*W - total| >= |2*w_plus - total|
    w2 = int(round(2 * w_plus))
    threshold = abs(2 * w2 - total2)
    tail = sum(c for s, c in enumerate(counts) if abs(2 * s - total2) >= threshold)
    return tail / (1 << len(r2))
