"""Clipping-artifact detection and distribution-shape analysis.

An intensity transform applied to already-clipped values creates an artifact
when the boundary-pinned mass leaves the interval endpoints: inward movement
(t(x_min) > x_min or t(x_max) < x_max) empties the edge regions, outward
movement produces values a windowed image cannot contain.  The report keeps
the inward conditions as the lower/upper booleans and exposes ``artifactual``
covering both directions; window-based augmentation never fires either,
because its output extremes coincide exactly with its own interval endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .volume import Volume, check_same_shape

DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ArtifactReport:
    """Boundary displacement of a voxelwise transform.

    ``lower_artifact``/``upper_artifact`` are the inward conditions;
    ``displaced_lower``/``displaced_upper`` are signed displacements of the
    extreme-attaining voxels (positive = moved up);
    ``fraction_boundary_voxels_moved`` is the share of extreme-attaining
    voxels whose value changed beyond tolerance in either direction.
    """

    lower_artifact: bool
    upper_artifact: bool
    displaced_lower: float
    displaced_upper: float
    fraction_boundary_voxels_moved: float

    @property
    def artifactual(self) -> bool:
        return (
            self.lower_artifact
            or self.upper_artifact
            or self.fraction_boundary_voxels_moved > 0.0
        )

    def to_json(self) -> dict:
        return {
            "lower_artifact": self.lower_artifact,
            "upper_artifact": self.upper_artifact,
            "displaced_lower": self.displaced_lower,
            "displaced_upper": self.displaced_upper,
            "fraction_boundary_voxels_moved": self.fraction_boundary_voxels_moved,
            "artifactual": self.artifactual,
        }


def detect_artifact(
    before: Volume, after: Volume, tolerance: float = DEFAULT_TOLERANCE
) -> ArtifactReport:
    """Compare a clipped volume with its voxelwise transform.

    Displacements are evaluated on the voxels attaining the extremes of
    ``before``: the transform moved the minimum inside iff even the smallest
    after-value over the argmin set exceeds the minimum by more than
    ``tolerance`` (symmetrically for the maximum).
    """
    check_same_shape(before.voxels, after.voxels)
    b = before.voxels
    a = after.voxels
    b_min = float(b.min())
    b_max = float(b.max())
    at_min = b == b_min
    at_max = b == b_max
    displaced_lower = float(a[at_min].min()) - b_min
    displaced_upper = float(a[at_max].max()) - b_max
    boundary = at_min | at_max
    moved = np.abs(a[boundary] - b[boundary]) > tolerance
    return ArtifactReport(
        lower_artifact=displaced_lower > tolerance,
        upper_artifact=displaced_upper < -tolerance,
        displaced_lower=displaced_lower,
        displaced_upper=displaced_upper,
        fraction_boundary_voxels_moved=float(np.count_nonzero(moved) / moved.size),
    )


def detect_artifact_vs_bounds(
    after: Volume, lower: float, upper: float, tolerance: float = DEFAULT_TOLERANCE
) -> ArtifactReport:
    """Check a volume against the interval its values are declared to span.

    Artifact-free output of a windowing transform attains both endpoints
    exactly (given input mass beyond the window on both sides); any departure
    of the extremes from the endpoints, inward or outward, is an artifact.
    """
    a = after.voxels
    a_min = float(a.min())
    a_max = float(a.max())
    displaced_lower = a_min - lower
    displaced_upper = a_max - upper
    moved = int(abs(displaced_lower) > tolerance) + int(abs(displaced_upper) > tolerance)
    return ArtifactReport(
        lower_artifact=displaced_lower > tolerance,
        upper_artifact=displaced_upper < -tolerance,
        displaced_lower=displaced_lower,
        displaced_upper=displaced_upper,
        fraction_boundary_voxels_moved=moved / 2.0,
    )


@dataclass(frozen=True)
class Histogram:
    """Fixed-width histogram with explicit under/overflow.

    ``total`` is the voxel count: sum(counts) + underflow + overflow.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    total: int

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def to_json(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "underflow": self.underflow,
            "overflow": self.overflow,
            "total": self.total,
        }

    def to_csv_rows(self) -> list[tuple[float, float, int]]:
        return [
            (float(self.bin_edges[i]), float(self.bin_edges[i + 1]), int(self.counts[i]))
            for i in range(len(self.counts))
        ]


def histogram(v: Volume | np.ndarray, bins: int, value_range: tuple[float, float]) -> Histogram:
    """Histogram voxel intensities with closed-open bins (last bin closed)."""
    lo, hi = float(value_range[0]), float(value_range[1])
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    if not lo < hi:
        raise ValidationError(f"histogram range must satisfy lo < hi, got {value_range}")
    x = v.voxels if isinstance(v, Volume) else np.asarray(v, dtype=np.float32)
    counts, under, over = kernels.histogram_fixed(x.ravel(), lo, hi, bins)
    edges = lo + np.arange(bins + 1, dtype=np.float64) * ((hi - lo) / bins)
    return Histogram(
        bin_edges=edges,
        counts=counts,
        underflow=under,
        overflow=over,
        total=int(x.size),
    )


def shape_distance(a: Histogram, b: Histogram) -> float:
    """Translation-invariant L1 distance between count-normalized histograms.

    Minimizes over integer bin shifts within +/-(bins-1); 0 iff one histogram
    is a pure translation of the other at bin resolution.  Requires equal bin
    widths; alignment is by bin index.
    """
    if not np.isclose(a.bin_width, b.bin_width, rtol=1e-9, atol=0.0):
        raise ValidationError(f"bin widths differ: {a.bin_width} vs {b.bin_width}")
    pa = _normalized(a)
    pb = _normalized(b)
    max_shift = max(len(pa), len(pb)) - 1
    best = 2.0
    for shift in range(-max_shift, max_shift + 1):
        lo = min(shift, 0)
        hi = max(shift + len(pa), len(pb))
        ea = np.zeros(hi - lo)
        eb = np.zeros(hi - lo)
        ea[shift - lo : shift - lo + len(pa)] = pa
        eb[-lo : -lo + len(pb)] = pb
        best = min(best, float(np.abs(ea - eb).sum()))
    return best


def _normalized(h: Histogram) -> np.ndarray:
    s = int(h.counts.sum())
    if s == 0:
        raise ValidationError("cannot normalize an empty histogram")
    return h.counts.astype(np.float64) / s
