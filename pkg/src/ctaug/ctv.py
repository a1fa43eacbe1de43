"""CTV container format: a JSON header plus a sibling raw voxel file.

Header (``<name>.ctv``)::

    {"schema": "ctv/1", "shape": [z, y, x], "spacing_mm": [z, y, x],
     "dtype": "i16"|"f32", "byte_order": "le", "units": "hu"|"norm01"|"zscore"}

Voxels live in ``<name>.raw`` next to the header: little-endian, z-major,
x-fastest.  Masks use dtype "u8" and carry a ``labels`` map instead of
``units``.  Round-trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .volume import Mask, Units, Volume

SCHEMA = "ctv/1"

_DTYPES = {"i16": np.dtype("<i2"), "f32": np.dtype("<f4"), "u8": np.dtype("<u1")}


def raw_path_for(header_path: str | Path) -> Path:
    return Path(header_path).with_suffix(".raw")


def _read_header(path: Path) -> dict:
    try:
        header = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON header: {exc}") from exc
    if header.get("schema") != SCHEMA:
        raise ValidationError(f"{path}: unsupported schema {header.get('schema')!r}")
    if header.get("byte_order") != "le":
        raise ValidationError(f"{path}: unsupported byte order {header.get('byte_order')!r}")
    if header.get("dtype") not in _DTYPES:
        raise ValidationError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    shape = header.get("shape")
    if not (isinstance(shape, list) and len(shape) == 3 and all(int(n) > 0 for n in shape)):
        raise ValidationError(f"{path}: bad shape {shape!r}")
    return header


def _read_raw(header_path: Path, header: dict) -> np.ndarray:
    raw = raw_path_for(header_path)
    shape = tuple(int(n) for n in header["shape"])
    dtype = _DTYPES[header["dtype"]]
    expected = int(np.prod(shape)) * dtype.itemsize
    data = raw.read_bytes()
    if len(data) != expected:
        raise ValidationError(f"{raw}: expected {expected} bytes for shape {shape}, got {len(data)}")
    return np.frombuffer(data, dtype=dtype).reshape(shape)


def read_volume(path: str | Path) -> Volume:
    path = Path(path)
    header = _read_header(path)
    units_tag = header.get("units")
    try:
        units = Units(units_tag)
    except ValueError:
        raise ValidationError(f"{path}: bad units tag {units_tag!r}") from None
    if header["dtype"] == "u8":
        raise ValidationError(f"{path}: u8 is a mask dtype; use read_mask")
    voxels = _read_raw(path, header)
    return Volume(voxels=voxels, spacing=header["spacing_mm"], units=units)


def write_volume(path: str | Path, volume: Volume, dtype: str = "f32") -> Path:
    """Write a volume; returns the header path.  ``dtype`` may be "i16" to
    store integral HU compactly (values must fit int16 exactly)."""
    if dtype not in ("f32", "i16"):
        raise ValidationError(f"volume dtype must be f32 or i16, got {dtype!r}")
    path = Path(path)
    voxels = volume.voxels
    if dtype == "i16":
        as_int = voxels.astype(np.int16)
        if not np.array_equal(as_int.astype(np.float32), voxels):
            raise ValidationError("voxels are not int16-representable; write as f32")
        payload = as_int.astype(_DTYPES["i16"])
    else:
        payload = voxels.astype(_DTYPES["f32"])
    header = {
        "schema": SCHEMA,
        "shape": list(volume.shape),
        "spacing_mm": list(volume.spacing),
        "dtype": dtype,
        "byte_order": "le",
        "units": volume.units.value,
    }
    path.write_text(json.dumps(header, indent=2) + "\n")
    raw_path_for(path).write_bytes(payload.tobytes())
    return path


def read_mask(path: str | Path) -> Mask:
    path = Path(path)
    header = _read_header(path)
    if header["dtype"] != "u8" or "labels" not in header:
        raise ValidationError(f"{path}: not a mask header (need dtype u8 + labels map)")
    labels = _read_raw(path, header)
    names = {int(k): str(v) for k, v in header["labels"].items()}
    return Mask(labels=labels, spacing=header["spacing_mm"], label_names=names)


def write_mask(path: str | Path, mask: Mask) -> Path:
    path = Path(path)
    header = {
        "schema": SCHEMA,
        "shape": list(mask.shape),
        "spacing_mm": list(mask.spacing),
        "dtype": "u8",
        "byte_order": "le",
        "labels": {str(k): v for k, v in sorted(mask.label_names.items())},
    }
    path.write_text(json.dumps(header, indent=2) + "\n")
    raw_path_for(path).write_bytes(mask.labels.astype(_DTYPES["u8"]).tobytes())
    return path
