/**
 * CTV container format: JSON header (<name>.ctv) plus a sibling raw voxel
 * file (<name>.raw), little-endian, z-major x-fastest.  Round-trips are
 * bit-exact.
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { ValidationError } from "./errors";

export type Units = "hu" | "norm01" | "zscore";
export type Shape3 = [number, number, number];

/** Contiguous in-memory volume view; the boundary type for all bindings. */
export interface ArrayView {
  data: Float32Array;
  shape: Shape3;
  spacingMm: Shape3;
  units: Units;
}

export interface MaskView {
  data: Uint8Array;
  shape: Shape3;
  spacingMm: Shape3;
  labels: Record<string, string>;
}

interface Header {
  schema: string;
  shape: number[];
  spacing_mm: number[];
  dtype: string;
  byte_order: string;
  units?: string;
  labels?: Record<string, string>;
}

export function rawPathFor(headerPath: string): string {
  const parsed = path.parse(headerPath);
  return path.join(parsed.dir, `${parsed.name}.raw`);
}

function voxelCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function readHeader(headerPath: string): Header {
  let header: Header;
  try {
    header = JSON.parse(fs.readFileSync(headerPath, "utf-8"));
  } catch (err) {
    throw new ValidationError(`${headerPath}: invalid JSON header: ${err}`);
  }
  if (header.schema !== "ctv/1") {
    throw new ValidationError(`${headerPath}: unsupported schema ${header.schema}`);
  }
  if (header.byte_order !== "le") {
    throw new ValidationError(`${headerPath}: unsupported byte order ${header.byte_order}`);
  }
  if (!Array.isArray(header.shape) || header.shape.length !== 3) {
    throw new ValidationError(`${headerPath}: bad shape ${JSON.stringify(header.shape)}`);
  }
  return header;
}

function readRaw(headerPath: string, header: Header, bytesPerVoxel: number): ArrayBuffer {
  const rawPath = rawPathFor(headerPath);
  const raw = fs.readFileSync(rawPath);
  const expected = voxelCount(header.shape) * bytesPerVoxel;
  if (raw.byteLength !== expected) {
    throw new ValidationError(`${rawPath}: expected ${expected} bytes, got ${raw.byteLength}`);
  }
  // slice() copies into a fresh, aligned ArrayBuffer
  return raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength);
}

function assertLittleEndianHost(): void {
  if (os.endianness() !== "LE") {
    throw new ValidationError("CTV raw I/O requires a little-endian host");
  }
}

export function readVolume(headerPath: string): ArrayView {
  assertLittleEndianHost();
  const header = readHeader(headerPath);
  if (header.dtype === "u8" || header.labels) {
    throw new ValidationError(`${headerPath}: u8 is a mask dtype; use readMask`);
  }
  let data: Float32Array;
  if (header.dtype === "f32") {
    data = new Float32Array(readRaw(headerPath, header, 4));
  } else if (header.dtype === "i16") {
    data = Float32Array.from(new Int16Array(readRaw(headerPath, header, 2)));
  } else {
    throw new ValidationError(`${headerPath}: unsupported dtype ${header.dtype}`);
  }
  return {
    data,
    shape: header.shape as Shape3,
    spacingMm: header.spacing_mm as Shape3,
    units: (header.units ?? "hu") as Units,
  };
}

export function writeVolume(headerPath: string, view: ArrayView): string {
  assertLittleEndianHost();
  if (view.data.length !== voxelCount(view.shape)) {
    throw new ValidationError(
      `data length ${view.data.length} does not match shape ${JSON.stringify(view.shape)}`
    );
  }
  const header: Header = {
    schema: "ctv/1",
    shape: [...view.shape],
    spacing_mm: [...view.spacingMm],
    dtype: "f32",
    byte_order: "le",
    units: view.units,
  };
  fs.writeFileSync(headerPath, JSON.stringify(header, null, 2) + "\n");
  fs.writeFileSync(
    rawPathFor(headerPath),
    Buffer.from(view.data.buffer, view.data.byteOffset, view.data.byteLength)
  );
  return headerPath;
}

export function readMask(headerPath: string): MaskView {
  assertLittleEndianHost();
  const header = readHeader(headerPath);
  if (header.dtype !== "u8" || !header.labels) {
    throw new ValidationError(`${headerPath}: not a mask header (need dtype u8 + labels)`);
  }
  return {
    data: new Uint8Array(readRaw(headerPath, header, 1)),
    shape: header.shape as Shape3,
    spacingMm: header.spacing_mm as Shape3,
    labels: header.labels,
  };
}

export function writeMask(headerPath: string, view: MaskView): string {
  assertLittleEndianHost();
  if (view.data.length !== voxelCount(view.shape)) {
    throw new ValidationError(
      `data length ${view.data.length} does not match shape ${JSON.stringify(view.shape)}`
    );
  }
  const header: Header = {
    schema: "ctv/1",
    shape: [...view.shape],
    spacing_mm: [...view.spacingMm],
    dtype: "u8",
    byte_order: "le",
    labels: view.labels,
  };
  fs.writeFileSync(headerPath, JSON.stringify(header, null, 2) + "\n");
  fs.writeFileSync(
    rawPathFor(headerPath),
    Buffer.from(view.data.buffer, view.data.byteOffset, view.data.byteLength)
  );
  return headerPath;
}
