/**
 * In-memory transform bindings.
 *
 * Every callable marshals through the toolkit's external interfaces: the
 * array is written to a temporary CTV pair, one CLI subcommand runs, and the
 * result is read back.  Outputs are therefore bit-identical to direct CLI
 * use with the same seed and case id.
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { runCli } from "./cli";
import { ArrayView, MaskView, readMask, readVolume, writeMask, writeVolume } from "./ctv";
import { ValidationError } from "./errors";

export type TransformName =
  | "random-window"
  | "rw-shift-scale"
  | "nnunet"
  | "unetr"
  | "contrast"
  | "brightness-mult"
  | "brightness-add"
  | "gamma"
  | "gamma-inverse";

export interface BindOptions {
  /** Stream id for the RNG substream; sample k of case c uses "c/k". */
  caseId?: string;
  /** Number of augmented samples drawn per call (the callable returns the first). */
  count?: number;
}

export type BoundTransform = (input: ArrayView, options?: BindOptions) => ArrayView;

export interface BoundSamples {
  (input: ArrayView, options?: BindOptions): ArrayView[];
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "ctaug-bind-"));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Bind a named transform with a JSON spec document and a seed.
 *
 * The spec document uses the same schema the CLI consumes via --spec
 * (base/level_range/width_range/p_level/p_width/normalization for the
 * window methods, {"pipeline": [...]} for intensity pipelines); schema
 * violations surface as ValidationError with the toolkit's messages.
 */
export function bind(name: TransformName, spec: object | null, seed: number): BoundTransform {
  const samples = bindSamples(name, spec, seed);
  return (input, options) => samples(input, { ...options, count: options?.count ?? 1 })[0];
}

/** Like bind() but returns all --count samples. */
export function bindSamples(name: TransformName, spec: object | null, seed: number): BoundSamples {
  return (input, options) =>
    withTempDir((dir) => {
      const caseId = options?.caseId ?? "case";
      const count = options?.count ?? 1;
      const inputPath = path.join(dir, `${caseId}.ctv`);
      writeVolume(inputPath, input);
      const outDir = path.join(dir, "out");
      const args = [
        "augment",
        "--input", inputPath,
        "--method", name,
        "--seed", String(seed),
        "--count", String(count),
        "--outdir", outDir,
      ];
      if (spec) {
        const specPath = path.join(dir, "spec.json");
        fs.writeFileSync(specPath, JSON.stringify(spec));
        args.push("--spec", specPath);
      }
      runCli(args);
      const outputs: ArrayView[] = [];
      for (let k = 0; k < count; k += 1) {
        const padded = String(k).padStart(3, "0");
        outputs.push(readVolume(path.join(outDir, `${caseId}.aug${padded}.ctv`)));
      }
      return outputs;
    });
}

export interface WindowOptions {
  width: number;
  level: number;
  normalization?: "minmax" | "zscore";
  mean?: number;
  std?: number;
}

/** Static windowing: clip to (width, level) and normalize. */
export function applyWindow(input: ArrayView, options: WindowOptions): ArrayView {
  return withTempDir((dir) => {
    const inputPath = path.join(dir, "in.ctv");
    const outputPath = path.join(dir, "out.ctv");
    writeVolume(inputPath, input);
    const args = [
      "window",
      "--input", inputPath,
      "--output", outputPath,
      "--width", String(options.width),
      "--level", String(options.level),
    ];
    if (options.normalization === "zscore") {
      if (options.mean === undefined || options.std === undefined) {
        throw new ValidationError("zscore windowing requires mean and std");
      }
      args.push("--normalization", "zscore", "--mean", String(options.mean),
                "--std", String(options.std));
    }
    runCli(args);
    return readVolume(outputPath);
  });
}

export interface PhantomOptions {
  seed?: number;
  shape?: [number, number, number];
  ceOffset?: number;
  noiseSigma?: number;
  liverHu?: number;
  tumorOffsets?: number[];
}

/** Generate a synthetic phantom volume/mask pair. */
export function generatePhantom(options: PhantomOptions = {}): { volume: ArrayView; mask: MaskView } {
  return withTempDir((dir) => {
    const prefix = path.join(dir, "phantom");
    const args = ["phantom", "--out-prefix", prefix];
    if (options.seed !== undefined) args.push("--seed", String(options.seed));
    if (options.shape) args.push("--shape", options.shape.join(","));
    if (options.ceOffset !== undefined) args.push("--ce-offset", String(options.ceOffset));
    if (options.noiseSigma !== undefined) args.push("--noise-sigma", String(options.noiseSigma));
    if (options.liverHu !== undefined) args.push("--liver-hu", String(options.liverHu));
    if (options.tumorOffsets) args.push("--tumor-offsets", options.tumorOffsets.join(","));
    runCli(args);
    return {
      volume: readVolume(`${prefix}.ctv`),
      mask: readMask(`${prefix}.mask.ctv`),
    };
  });
}

export interface EvaluationResult {
  dice: number;
  f1: number;
  recall: number;
  precision: number;
  truePositives: number;
  falsePositives: number;
  falseNegatives: number;
}

/** Segmentation metrics for one prediction/ground-truth mask pair. */
export function evaluatePair(pred: MaskView, gt: MaskView, label = 2): EvaluationResult {
  return withTempDir((dir) => {
    const predDir = path.join(dir, "pred");
    const gtDir = path.join(dir, "gt");
    fs.mkdirSync(predDir);
    fs.mkdirSync(gtDir);
    writeMask(path.join(predDir, "case.ctv"), pred);
    writeMask(path.join(gtDir, "case.ctv"), gt);
    const outPath = path.join(dir, "eval.json");
    runCli([
      "evaluate",
      "--pred-dir", predDir,
      "--gt-dir", gtDir,
      "--label", String(label),
      "--out", outPath,
    ]);
    const report = JSON.parse(fs.readFileSync(outPath, "utf-8"));
    const row = report.cases[0];
    return {
      dice: row.dice,
      f1: row.f1,
      recall: row.recall,
      precision: row.precision,
      truePositives: row.true_positives,
      falsePositives: row.false_positives,
      falseNegatives: row.false_negatives,
    };
  });
}

/** Dice similarity coefficient of two label masks. */
export function diceScore(pred: MaskView, gt: MaskView, label = 2): number {
  return evaluatePair(pred, gt, label).dice;
}
