"""ctaug: volumetric CT windowing, window-based augmentation, and evaluation.

The library is organized around immutable :class:`Volume`/:class:`Mask`
values and pure functions; hot voxel kernels run on a compiled core with a
numpy fallback (see :mod:`ctaug.kernels`).
"""

from .errors import ShapeMismatchError, UnitsError, ValidationError
from .kernels import BACKEND as KERNEL_BACKEND
from .volume import (
    BACKGROUND,
    LIVER,
    TUMOR,
    Mask,
    Units,
    ViewingWindow,
    Volume,
    hu_from_attenuation,
    resample_mask_nearest,
    resample_trilinear,
)
from .ctv import read_mask, read_volume, write_mask, write_volume
from .rng import SplitMix64, derive_stream_seed
from .windowing import (
    AugmentationSpec,
    Normalization,
    SampledWindow,
    apply_window,
    output_interval,
    random_windowing,
    rw_shift_scale,
    sample_window,
    window_bounds_f32,
)
from .baseline import (
    IntensityTransform,
    Pipeline,
    brightness_add,
    brightness_mult,
    contrast,
    equal_strength_intensity_ranges,
    gamma,
    preset_nnunet,
    preset_unetr,
    run_pipeline,
)
from .artifacts import (
    ArtifactReport,
    Histogram,
    detect_artifact,
    detect_artifact_vs_bounds,
    histogram,
    shape_distance,
)
from .stats import (
    CaseWindowEstimate,
    DifficultyFlags,
    DifficultyThresholds,
    ForegroundStats,
    case_window,
    classify_difficulty,
    derive_aug_ranges,
    percentile_ce_flags,
    pooled_window,
)
from .metrics import (
    InstanceMatchResult,
    SignificanceMethod,
    SignificanceResult,
    connected_components,
    dice,
    lesion_instance_metrics,
    wilcoxon_signed_rank,
)
from .phantom import PhantomSpec, generate as generate_phantom

__version__ = "0.1.0"
