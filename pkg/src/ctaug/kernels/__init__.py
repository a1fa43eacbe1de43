"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy implementation
is the fallback.  ``CTAUG_KERNEL_BACKEND`` overrides: "compiled" (fail if
unavailable), "numpy", or "auto" (default).  Both backends are bit-identical;
``BACKEND`` names the active one.
"""

import os

_requested = os.environ.get("CTAUG_KERNEL_BACKEND", "auto")
if _requested not in ("auto", "compiled", "numpy"):
    raise ImportError(f"CTAUG_KERNEL_BACKEND must be auto|compiled|numpy, got {_requested!r}")

if _requested == "numpy":
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _numpy as _impl  # type: ignore[no-redef]

        BACKEND = "numpy"

clip_affine = _impl.clip_affine
resample_trilinear = _impl.resample_trilinear
resample_nearest = _impl.resample_nearest
label_components = _impl.label_components
histogram_fixed = _impl.histogram_fixed

__all__ = [
    "BACKEND",
    "clip_affine",
    "resample_trilinear",
    "resample_nearest",
    "label_components",
    "histogram_fixed",
]
