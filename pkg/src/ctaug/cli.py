"""Batch command-line frontend.

Every subcommand is a thin composition of library calls, writes a run
manifest next to its primary output, and reports failures with distinct exit
codes: 2 validation, 3 I/O, 4 internal.  ``--json-errors`` emits a
machine-readable error object on stderr.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__, baseline, ctv, stats as dstats, windowing
from .artifacts import detect_artifact, detect_artifact_vs_bounds, histogram
from .errors import ValidationError
from .manifest import RunManifest
from .metrics import dice, lesion_instance_metrics, wilcoxon_signed_rank
from .phantom import PhantomSpec, generate as generate_phantom
from .rng import SplitMix64
from .volume import ViewingWindow
from .windowing import AugmentationSpec, Normalization, apply_window, output_interval, sample_window

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

RW_METHODS = ("random-window", "rw-shift-scale")
PIPELINE_METHODS = ("nnunet", "unetr")
SINGLE_METHODS = {
    "contrast": (baseline.CONTRAST, (0.75, 1.25)),
    "brightness-mult": (baseline.BRIGHTNESS_MULT, (0.75, 1.25)),
    "brightness-add": (baseline.BRIGHTNESS_ADD, (-0.1, 0.1)),
    "gamma": (baseline.GAMMA, (0.7, 1.5)),
    "gamma-inverse": (baseline.GAMMA_INVERSE, (0.7, 1.5)),
}
ALL_METHODS = RW_METHODS + PIPELINE_METHODS + tuple(SINGLE_METHODS)


def _fail(ctx_obj, exc: BaseException, code: int):
    if ctx_obj and ctx_obj.get("json_errors"):
        doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        print(json.dumps(doc), file=sys.stderr)
    else:
        print(f"ctaug: error: {exc}", file=sys.stderr)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    @click.pass_context
    def wrapper(ctx, *args, **kwargs):
        try:
            return ctx.invoke(fn, *args, **kwargs)
        except ValidationError as exc:
            _fail(ctx.obj, exc, EXIT_VALIDATION)
        except OSError as exc:
            _fail(ctx.obj, exc, EXIT_IO)
        except click.ClickException:
            raise
        except Exception as exc:  # anything else is an internal error
            _fail(ctx.obj, exc, EXIT_INTERNAL)

    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="ctaug")
@click.option("--json-errors", is_flag=True, help="Machine-readable error JSON on stderr.")
@click.pass_context
def main(ctx, json_errors):
    """Volumetric CT windowing, augmentation, and evaluation toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _default_manifest(out: Path) -> Path:
    return out.parent / (out.name + ".manifest.json")


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc


def _case_files(directory: str, suffix: str = ".ctv") -> dict[str, Path]:
    d = Path(directory)
    if not d.is_dir():
        raise ValidationError(f"not a directory: {directory}")
    return {p.stem: p for p in sorted(d.glob(f"*{suffix}"))}


def _matched_cases(a_dir: str, b_dir: str, what: str) -> list[tuple[str, Path, Path]]:
    a, b = _case_files(a_dir), _case_files(b_dir)
    missing = sorted(set(a) ^ set(b))
    if missing:
        raise ValidationError(f"{what}: unmatched case ids {missing}")
    if not a:
        raise ValidationError(f"{what}: no .ctv cases found")
    return [(cid, a[cid], b[cid]) for cid in sorted(a)]


def _map_cases(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _parse_pair(text: str, name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"{name} must be 'lo,hi', got {text!r}") from exc
    return lo, hi


# ---------------------------------------------------------------- phantom


@main.command("phantom")
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="PhantomSpec JSON.")
@click.option("--out-prefix", required=True, type=click.Path(), help="Writes PREFIX.ctv and PREFIX.mask.ctv.")
@click.option("--seed", type=int, default=None)
@click.option("--shape", default=None, help="z,y,x override.")
@click.option("--ce-offset", type=float, default=None)
@click.option("--noise-sigma", type=float, default=None)
@click.option("--liver-hu", type=float, default=None)
@click.option("--tumor-offsets", default=None, help="Comma-separated HU offsets.")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def phantom_cmd(spec_path, out_prefix, seed, shape, ce_offset, noise_sigma, liver_hu,
                tumor_offsets, manifest_path):
    """Generate a synthetic CTV volume/mask pair."""
    doc = _load_json(spec_path) if spec_path else {}
    if seed is not None:
        doc["seed"] = seed
    if shape is not None:
        doc["shape"] = [int(n) for n in shape.split(",")]
    if ce_offset is not None:
        doc["ce_offset"] = ce_offset
    if noise_sigma is not None:
        doc["noise_sigma"] = noise_sigma
    if liver_hu is not None:
        doc["liver_hu"] = liver_hu
    if tumor_offsets is not None:
        doc["tumor_hu_offsets"] = [float(o) for o in tumor_offsets.split(",")]
    spec = PhantomSpec.from_json(doc)
    manifest = RunManifest("phantom", seed=spec.seed)
    if spec_path:
        manifest.add_input(spec_path)
    manifest.set_spec(spec.to_json())
    volume, mask = generate_phantom(spec)
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    vol_path = ctv.write_volume(prefix.with_suffix(".ctv"), volume)
    mask_path = ctv.write_mask(prefix.parent / (prefix.name + ".mask.ctv"), mask)
    manifest.add_output(vol_path)
    manifest.add_output(mask_path)
    manifest.write(manifest_path or _default_manifest(vol_path))
    click.echo(f"wrote {vol_path} and {mask_path}")


# ---------------------------------------------------------------- window


@main.command("window")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--width", type=float, required=True)
@click.option("--level", type=float, required=True)
@click.option("--normalization", type=click.Choice(["minmax", "zscore"]), default="minmax")
@click.option("--mean", type=float, default=None, help="Global mean for zscore.")
@click.option("--std", type=float, default=None, help="Global std for zscore.")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def window_cmd(input_path, output_path, width, level, normalization, mean, std, manifest_path):
    """Static windowing preprocessing of an HU volume."""
    manifest = RunManifest("window")
    manifest.add_input(input_path)
    w = ViewingWindow(width=width, level=level)
    if normalization == "zscore":
        if mean is None or std is None:
            raise ValidationError("zscore normalization requires --mean and --std")
        norm = Normalization.zscore(mean, std)
    else:
        norm = Normalization.minmax()
    manifest.set_spec({"window": w.to_json(), "normalization": norm.to_json()})
    volume = ctv.read_volume(input_path)
    out = apply_window(volume, w, norm)
    out_path = ctv.write_volume(Path(output_path), out)
    manifest.add_output(out_path)
    manifest.write(manifest_path or _default_manifest(out_path))
    click.echo(f"wrote {out_path}")


# ---------------------------------------------------------------- augment


def _augment_spec_from_flags(spec_path, width, level, level_range, width_range,
                             p_level, p_width, seed) -> AugmentationSpec:
    doc = _load_json(spec_path) if spec_path else {}
    if width is not None or level is not None:
        base = dict(doc.get("base", {}))
        if width is not None:
            base["width"] = width
        if level is not None:
            base["level"] = level
        doc["base"] = base
    if level_range is not None:
        doc["level_range"] = list(_parse_pair(level_range, "--level-range"))
    if width_range is not None:
        doc["width_range"] = list(_parse_pair(width_range, "--width-range"))
    if p_level is not None:
        doc["p_level"] = p_level
    if p_width is not None:
        doc["p_width"] = p_width
    if seed is not None:
        doc["seed"] = seed
    if "base" not in doc:
        raise ValidationError("random-window methods need --spec or --width/--level")
    doc.setdefault("level_range", [doc["base"]["level"], doc["base"]["level"]])
    doc.setdefault("width_range", [doc["base"]["width"], doc["base"]["width"]])
    return AugmentationSpec.from_json(doc)


def _pipeline_for(method: str, spec_path, probability, param_range, seed) -> baseline.Pipeline:
    if spec_path:
        doc = _load_json(spec_path)
        pipe = baseline.Pipeline.from_json(doc)
    elif method == "nnunet":
        pipe = baseline.preset_nnunet()
    elif method == "unetr":
        pipe = baseline.preset_unetr()
    else:
        kind, default_range = SINGLE_METHODS[method]
        rng_pair = _parse_pair(param_range, "--param-range") if param_range else default_range
        pipe = baseline.Pipeline(
            transforms=(
                baseline.IntensityTransform(
                    kind,
                    rng_pair,
                    probability=1.0 if probability is None else probability,
                    preserve_range=kind == baseline.CONTRAST,
                ),
            )
        )
    if seed is not None:
        pipe = baseline.Pipeline(transforms=pipe.transforms, seed=seed)
    return pipe


@main.command("augment")
@click.option("--input", "inputs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(ALL_METHODS), required=True)
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Overrides the spec seed.")
@click.option("--count", type=int, default=1, show_default=True, help="Samples per input.")
@click.option("--outdir", required=True, type=click.Path())
@click.option("--width", type=float, default=None, help="Base window width.")
@click.option("--level", type=float, default=None, help="Base window level.")
@click.option("--level-range", default=None, help="lo,hi")
@click.option("--width-range", default=None, help="lo,hi")
@click.option("--p-level", type=float, default=None)
@click.option("--p-width", type=float, default=None)
@click.option("--probability", type=float, default=None, help="Single-transform gate probability.")
@click.option("--param-range", default=None, help="Single-transform parameter range lo,hi.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def augment_cmd(inputs, method, spec_path, seed, count, outdir, width, level, level_range,
                width_range, p_level, p_width, probability, param_range, jobs, manifest_path):
    """Write N augmented samples per input volume under a named method.

    random-window / rw-shift-scale expect raw HU inputs; intensity methods
    expect clipped inputs unless --width/--level is given to window first.
    Sample k of case c uses the RNG substream "c/k" of the seed, so batch
    order and --jobs never change outputs.
    """
    if count < 1:
        raise ValidationError("--count must be >= 1")
    outdir_path = Path(outdir)
    outdir_path.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("augment")
    for path in inputs:
        manifest.add_input(path)

    if method in RW_METHODS:
        aug_spec = _augment_spec_from_flags(
            spec_path, width, level, level_range, width_range, p_level, p_width, seed
        )
        if method == "rw-shift-scale" and aug_spec.normalization.mode == windowing.MINMAX_SAMPLED:
            aug_spec = AugmentationSpec.from_json(
                {**aug_spec.to_json(), "normalization": {"mode": windowing.FIXED_BASE}}
            )
        effective = {"method": method, **aug_spec.to_json()}
        run_seed = aug_spec.seed

        def run_case(item):
            case_id, path = item
            volume = ctv.read_volume(path)
            written = []
            for k in range(count):
                rng = SplitMix64(run_seed).substream(f"{case_id}/{k}")
                if method == "random-window":
                    out = windowing.random_windowing(volume, aug_spec, rng)
                else:
                    out = windowing.rw_shift_scale(volume, aug_spec, rng)
                out_path = outdir_path / f"{case_id}.aug{k:03d}.ctv"
                ctv.write_volume(out_path, out)
                written.append(out_path)
            return written

    else:
        pipe = _pipeline_for(method, spec_path, probability, param_range, seed)
        pre_window = None
        if width is not None and level is not None:
            pre_window = ViewingWindow(width=width, level=level)
        effective = {"method": method, **pipe.to_json()}
        if pre_window:
            effective["pre_window"] = pre_window.to_json()
        run_seed = pipe.seed

        def run_case(item):
            case_id, path = item
            volume = ctv.read_volume(path)
            if pre_window is not None:
                volume = apply_window(volume, pre_window)
            written = []
            for k in range(count):
                rng = SplitMix64(run_seed).substream(f"{case_id}/{k}")
                out = baseline.run_pipeline(volume, pipe, rng)
                out_path = outdir_path / f"{case_id}.aug{k:03d}.ctv"
                ctv.write_volume(out_path, out)
                written.append(out_path)
            return written

    manifest.doc["seed"] = run_seed
    manifest.set_spec(effective)
    items = [(Path(p).stem, Path(p)) for p in inputs]
    for written in _map_cases(run_case, items, jobs):
        for path in written:
            manifest.add_output(path)
    manifest.write(manifest_path or outdir_path / "manifest.json")
    click.echo(f"wrote {count * len(items)} volumes to {outdir_path}")


# ---------------------------------------------------------------- stats


@main.command("stats")
@click.option("--volumes-dir", required=True, type=click.Path(exists=True))
@click.option("--masks-dir", required=True, type=click.Path(exists=True))
@click.option("--label", type=int, default=2, show_default=True, help="Foreground label for windows.")
@click.option("--coverage", type=float, default=0.99, show_default=True)
@click.option("--alpha", type=float, default=0.01, show_default=True, help="Range-derivation quantile.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Per-case (W, L) table.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def stats_cmd(volumes_dir, masks_dir, label, coverage, alpha, out_path, csv_path, jobs,
              manifest_path):
    """Corpus report: per-case windows, pooled window, derived augmentation
    ranges, global z-score stats, and difficulty flags."""
    cases = _matched_cases(volumes_dir, masks_dir, "stats")
    manifest = RunManifest("stats")
    manifest.set_spec({"label": label, "coverage": coverage, "alpha": alpha})

    def run_case(item):
        case_id, vol_path, mask_path = item
        volume = ctv.read_volume(vol_path)
        mask = ctv.read_mask(mask_path)
        estimate = dstats.case_window(volume, mask, label=label, coverage=coverage, case_id=case_id)
        flags = dstats.classify_difficulty(volume, mask)
        labeled = volume.voxels[mask.labels == label]
        fg_moments = dstats.batch_moments(volume.voxels[mask.labels > 0])
        return estimate, flags, labeled, fg_moments

    results = _map_cases(run_case, cases, jobs)
    for (case_id, vol_path, mask_path), _ in zip(cases, results):
        manifest.add_input(vol_path)
        manifest.add_input(mask_path)

    estimates = [r[0] for r in results]
    pooled_values = np.concatenate([r[2] for r in results])
    fg_stats = dstats.ForegroundStats()
    for r in results:
        fg_stats.merge(*r[3])
    pooled = dstats.pooled_window(pooled_values, coverage)
    level_range, width_range = dstats.derive_aug_ranges(estimates, alpha=alpha, base=pooled)
    ce_percentile = dstats.percentile_ce_flags(
        {e.case_id: r[1].median_liver_hu for e, r in zip(estimates, results)}
    )
    report = {
        "cases": [
            {**e.to_json(), "difficulty": r[1].to_json(),
             "ce_timing_percentile_flag": ce_percentile[e.case_id]}
            for e, r in zip(estimates, results)
        ],
        "pooled_window": pooled.to_json(),
        "level_range": list(level_range),
        "width_range": list(width_range),
        "global_mean": fg_stats.mean,
        "global_std": fg_stats.std,
        "coverage": coverage,
        "label": label,
    }
    out = Path(out_path)
    _write_json(out, report)
    manifest.add_output(out)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["case_id", "width", "level"])
            for e in estimates:
                writer.writerow([e.case_id, e.window.width, e.window.level])
        manifest.add_output(csv_path)
    manifest.write(manifest_path or _default_manifest(out))
    click.echo(f"wrote {out}")


# ---------------------------------------------------------------- classify


@main.command("classify")
@click.option("--volumes-dir", required=True, type=click.Path(exists=True))
@click.option("--masks-dir", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["fixed", "percentile"]), default="fixed", show_default=True)
@click.option("--contrast-hu", type=float, default=20.0, show_default=True)
@click.option("--ce-low", type=float, default=89.0, show_default=True)
@click.option("--ce-high", type=float, default=137.0, show_default=True)
@click.option("--tail-fraction", type=float, default=0.10, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def classify_cmd(volumes_dir, masks_dir, mode, contrast_hu, ce_low, ce_high, tail_fraction,
                 out_path, jobs, manifest_path):
    """Difficulty flags per case (fixed thresholds or percentile CE tails)."""
    cases = _matched_cases(volumes_dir, masks_dir, "classify")
    thresholds = dstats.DifficultyThresholds(
        contrast_hu=contrast_hu, ce_low_hu=ce_low, ce_high_hu=ce_high
    )
    manifest = RunManifest("classify")
    manifest.set_spec({
        "mode": mode, "contrast_hu": contrast_hu, "ce_low": ce_low, "ce_high": ce_high,
        "tail_fraction": tail_fraction,
    })

    def run_case(item):
        case_id, vol_path, mask_path = item
        volume = ctv.read_volume(vol_path)
        mask = ctv.read_mask(mask_path)
        return case_id, dstats.classify_difficulty(volume, mask, thresholds)

    results = _map_cases(run_case, cases, jobs)
    for case_id, vol_path, mask_path in cases:
        manifest.add_input(vol_path)
        manifest.add_input(mask_path)
    flags = {case_id: f.to_json() for case_id, f in results}
    if mode == "percentile":
        ce = dstats.percentile_ce_flags(
            {cid: f["median_liver_hu"] for cid, f in flags.items()}, tail_fraction
        )
        for cid in flags:
            flags[cid]["poor_ce_timing"] = ce[cid]
    report = {"mode": mode, "cases": flags}
    out = Path(out_path)
    _write_json(out, report)
    manifest.add_output(out)
    manifest.write(manifest_path or _default_manifest(out))
    click.echo(f"wrote {out}")


# ---------------------------------------------------------------- evaluate


def _subset_aggregate(rows: list[dict], member: list[bool]) -> dict:
    chosen = [r for r, keep in zip(rows, member) if keep]
    out = {"n": len(chosen)}
    for key in ("dice", "f1", "recall", "precision"):
        values = np.array([r[key] for r in chosen])
        out[f"{key}_mean"] = float(values.mean()) if len(chosen) else None
        out[f"{key}_std"] = float(values.std(ddof=1)) if len(chosen) > 1 else 0.0 if chosen else None
    return out


@main.command("evaluate")
@click.option("--pred-dir", required=True, type=click.Path(exists=True))
@click.option("--gt-dir", required=True, type=click.Path(exists=True))
@click.option("--label", type=int, default=2, show_default=True, help="Lesion label to evaluate.")
@click.option("--classify", "classify_path", type=click.Path(exists=True), default=None,
              help="classify report for difficulty subsets.")
@click.option("--compare-pred-dir", type=click.Path(exists=True), default=None,
              help="Second prediction set; adds a paired Wilcoxon test on DSC.")
@click.option("--overlap-threshold", type=float, default=0.10, show_default=True)
@click.option("--connectivity", type=int, default=26, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def evaluate_cmd(pred_dir, gt_dir, label, classify_path, compare_pred_dir, overlap_threshold,
                 connectivity, out_path, csv_path, jobs, manifest_path):
    """Segmentation metrics per case, aggregated over difficulty subsets."""
    cases = _matched_cases(pred_dir, gt_dir, "evaluate")
    manifest = RunManifest("evaluate")
    manifest.set_spec({
        "label": label, "overlap_threshold": overlap_threshold, "connectivity": connectivity,
    })

    def run_case(item):
        case_id, pred_path, gt_path = item
        pred = ctv.read_mask(pred_path).binary(label)
        gt = ctv.read_mask(gt_path).binary(label)
        instance = lesion_instance_metrics(
            pred, gt, overlap_threshold=overlap_threshold, connectivity=connectivity
        )
        return {
            "case_id": case_id,
            "dice": dice(pred, gt),
            "f1": instance.f1,
            "recall": instance.recall,
            "precision": instance.precision,
            "true_positives": instance.true_positives,
            "false_positives": instance.false_positives,
            "false_negatives": instance.false_negatives,
        }

    rows = _map_cases(run_case, cases, jobs)
    for case_id, pred_path, gt_path in cases:
        manifest.add_input(pred_path)
        manifest.add_input(gt_path)

    subsets = {"all": [True] * len(rows)}
    if classify_path:
        manifest.add_input(classify_path)
        flag_doc = _load_json(classify_path)["cases"]
        missing = [r["case_id"] for r in rows if r["case_id"] not in flag_doc]
        if missing:
            raise ValidationError(f"classify report is missing cases {missing}")
        subsets["low_hu_contrast"] = [flag_doc[r["case_id"]]["low_hu_contrast"] for r in rows]
        subsets["poor_ce_timing"] = [flag_doc[r["case_id"]]["poor_ce_timing"] for r in rows]
    report = {
        "cases": rows,
        "aggregates": {name: _subset_aggregate(rows, member) for name, member in subsets.items()},
    }

    if compare_pred_dir:
        other_cases = _matched_cases(compare_pred_dir, gt_dir, "evaluate --compare-pred-dir")
        other_rows = _map_cases(run_case, other_cases, jobs)
        for case_id, pred_path, _ in other_cases:
            manifest.add_input(pred_path)
        paired_a = [r["dice"] for r in rows]
        paired_b = [r["dice"] for r in other_rows]
        result = wilcoxon_signed_rank(paired_a, paired_b)
        report["comparison"] = {
            "compare_pred_dir": str(compare_pred_dir),
            "dice_mean_other": float(np.mean(paired_b)),
            "wilcoxon": result.to_json(),
        }

    out = Path(out_path)
    _write_json(out, report)
    manifest.add_output(out)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        manifest.add_output(csv_path)
    manifest.write(manifest_path or _default_manifest(out))
    click.echo(f"wrote {out}")


# ---------------------------------------------------------------- artifact-check


@main.command("artifact-check")
@click.option("--before", "before_path", type=click.Path(exists=True), default=None)
@click.option("--after", "after_path", type=click.Path(exists=True), default=None)
@click.option("--input", "input_path", type=click.Path(exists=True), default=None,
              help="Raw HU volume for simulation mode.")
@click.option("--method", type=click.Choice(ALL_METHODS), default=None)
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None)
@click.option("--width", type=float, default=None, help="Base window width (simulation).")
@click.option("--level", type=float, default=None, help="Base window level (simulation).")
@click.option("--level-range", default=None, help="lo,hi")
@click.option("--width-range", default=None, help="lo,hi")
@click.option("--p-level", type=float, default=None)
@click.option("--p-width", type=float, default=None)
@click.option("--probability", type=float, default=None)
@click.option("--param-range", default=None, help="Single-transform parameter range lo,hi.")
@click.option("--draws", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--tolerance", type=float, default=1e-6, show_default=True)
@click.option("--bounds", default=None, help="lo,hi interval for a (before, after) pair check.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def artifact_check_cmd(before_path, after_path, input_path, method, spec_path, width, level,
                       level_range, width_range, p_level, p_width, probability, param_range,
                       draws, seed, tolerance, bounds, out_path, manifest_path):
    """Detect clipping artifacts for a (before, after) pair or by simulating a
    (method, spec) across seeded draws."""
    manifest = RunManifest("artifact-check", seed=seed)
    if before_path and after_path:
        manifest.add_input(before_path)
        manifest.add_input(after_path)
        before = ctv.read_volume(before_path)
        after = ctv.read_volume(after_path)
        report = detect_artifact(before, after, tolerance).to_json()
        if bounds:
            lo, hi = _parse_pair(bounds, "--bounds")
            report["vs_bounds"] = detect_artifact_vs_bounds(after, lo, hi, tolerance).to_json()
        doc = {"mode": "pair", "tolerance": tolerance, "report": report}
    elif input_path and method:
        manifest.add_input(input_path)
        volume = ctv.read_volume(input_path)
        doc = _simulate_artifacts(
            volume, method, spec_path, width, level,
            (level_range, width_range, p_level, p_width, probability, param_range),
            draws, seed, tolerance, manifest,
        )
    else:
        raise ValidationError("need --before/--after or --input/--method")
    out = Path(out_path)
    _write_json(out, doc)
    manifest.add_output(out)
    manifest.write(manifest_path or _default_manifest(out))
    click.echo(json.dumps(doc["summary"] if "summary" in doc else doc["report"]))


def _simulate_artifacts(volume, method, spec_path, width, level, extra_flags, draws, seed,
                        tolerance, manifest) -> dict:
    if draws < 1:
        raise ValidationError("--draws must be >= 1")
    level_range, width_range, p_level, p_width, probability, param_range = extra_flags
    run_seed = 0 if seed is None else seed
    reports = []
    if method in RW_METHODS:
        aug_spec = _augment_spec_from_flags(
            spec_path, width, level, level_range, width_range, p_level, p_width, seed
        )
        if method == "rw-shift-scale" and aug_spec.normalization.mode == windowing.MINMAX_SAMPLED:
            aug_spec = AugmentationSpec.from_json(
                {**aug_spec.to_json(), "normalization": {"mode": windowing.FIXED_BASE}}
            )
        manifest.set_spec({"method": method, **aug_spec.to_json()})
        rng = SplitMix64(aug_spec.seed)
        for _ in range(draws):
            sampled = sample_window(aug_spec, rng)
            out = apply_window(volume, sampled.window, aug_spec.normalization)
            lo, hi = output_interval(sampled.window, aug_spec.normalization)
            reports.append(detect_artifact_vs_bounds(out, lo, hi, tolerance))
    else:
        if width is None or level is None:
            raise ValidationError("simulation of intensity methods needs --width/--level")
        pipe = _pipeline_for(method, spec_path, probability, param_range, seed)
        manifest.set_spec({"method": method, **pipe.to_json(),
                           "pre_window": {"width": width, "level": level}})
        before = apply_window(volume, ViewingWindow(width=width, level=level))
        rng = SplitMix64(pipe.seed if seed is None else seed)
        for _ in range(draws):
            after = baseline.run_pipeline(before, pipe, rng)
            reports.append(detect_artifact(before, after, tolerance))
    artifact_draws = sum(1 for r in reports if r.artifactual)
    summary = {
        "draws": draws,
        "artifact_draws": artifact_draws,
        "any_artifact": artifact_draws > 0,
        "max_displaced_lower": max(r.displaced_lower for r in reports),
        "min_displaced_upper": min(r.displaced_upper for r in reports),
    }
    return {
        "mode": "simulation",
        "method": method,
        "tolerance": tolerance,
        "seed": run_seed,
        "summary": summary,
        "reports": [r.to_json() for r in reports],
    }


# ---------------------------------------------------------------- histogram


@main.command("histogram")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--bins", type=int, default=64, show_default=True)
@click.option("--range", "range_text", required=True, help="lo,hi")
@click.option("--method", type=click.Choice(ALL_METHODS), default=None,
              help="Also histogram the transformed volume.")
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None)
@click.option("--width", type=float, default=None)
@click.option("--level", type=float, default=None)
@click.option("--level-range", default=None, help="lo,hi")
@click.option("--width-range", default=None, help="lo,hi")
@click.option("--p-level", type=float, default=None)
@click.option("--p-width", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@handle_errors
def histogram_cmd(input_path, bins, range_text, method, spec_path, width, level,
                  level_range, width_range, p_level, p_width, seed,
                  out_path, csv_path, manifest_path):
    """Intensity histograms before (and optionally after) a transform."""
    lo, hi = _parse_pair(range_text, "--range")
    manifest = RunManifest("histogram", seed=seed)
    manifest.add_input(input_path)
    volume = ctv.read_volume(input_path)
    before = histogram(volume, bins, (lo, hi))
    doc = {"bins": bins, "range": [lo, hi], "before": before.to_json()}
    after_hist = None
    if method:
        if method in RW_METHODS:
            aug_spec = _augment_spec_from_flags(
                spec_path, width, level, level_range, width_range, p_level, p_width, seed
            )
            rng = SplitMix64(aug_spec.seed)
            transformed = (
                windowing.random_windowing(volume, aug_spec, rng)
                if method == "random-window"
                else windowing.rw_shift_scale(volume, aug_spec, rng)
            )
            manifest.set_spec({"method": method, **aug_spec.to_json()})
        else:
            pipe = _pipeline_for(method, spec_path, None, None, seed)
            source = volume
            if width is not None and level is not None:
                source = apply_window(volume, ViewingWindow(width=width, level=level))
            rng = SplitMix64(pipe.seed)
            transformed = baseline.run_pipeline(source, pipe, rng)
            manifest.set_spec({"method": method, **pipe.to_json()})
        after_hist = histogram(transformed, bins, (lo, hi))
        doc["after"] = after_hist.to_json()
    out = Path(out_path)
    _write_json(out, doc)
    manifest.add_output(out)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["bin_lo", "bin_hi", "count"] + (["count_after"] if after_hist else [])
            writer.writerow(header)
            for i, (b_lo, b_hi, count) in enumerate(before.to_csv_rows()):
                row = [b_lo, b_hi, count]
                if after_hist:
                    row.append(int(after_hist.counts[i]))
                writer.writerow(row)
        manifest.add_output(csv_path)
    manifest.write(manifest_path or _default_manifest(out))
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
