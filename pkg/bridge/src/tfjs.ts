/**
 * TF.js-style checkpoint I/O: a model.json whose `weightsManifest` lists
 * weight groups, each group holding an ordered list of weight specs
 * ({name, shape, dtype}) and the shard files (`paths`) whose concatenated
 * bytes contain those weights back to back.
 *
 * The reader keeps every weight as raw bytes plus its spec, so non-float
 * tensors pass through untouched. The writer emits a single group sharded
 * at a configurable byte size, which preserves names, shapes, dtypes, and
 * bytes — the grouping itself is not a stable property of the format.
 *
 * Binary weight data is little-endian, as written by TF.js itself; like
 * TF.js, this module assumes a little-endian host.
 */

import { readFileSync, writeFileSync, mkdirSync, statSync } from 'fs';
import { join, dirname, basename } from 'path';

export class CheckpointFormatError extends Error {}

export interface WeightSpec {
  name: string;
  shape: number[];
  dtype: string;
}

export interface WeightEntry extends WeightSpec {
  /** Raw little-endian bytes of this weight, sliced out of its shard run. */
  bytes: Uint8Array;
}

export interface Checkpoint {
  /** Parsed model.json with `weightsManifest` removed. */
  meta: Record<string, unknown>;
  /** All weights across all groups, in manifest order. */
  entries: WeightEntry[];
}

export const DTYPE_BYTES: Record<string, number> = {
  float32: 4,
  float64: 8,
  int32: 4,
  int64: 8,
  uint8: 1,
  uint16: 2,
  bool: 1,
};

export function isFloatDtype(dtype: string): boolean {
  return dtype === 'float32' || dtype === 'float64';
}

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function byteLengthOf(spec: WeightSpec): number {
  const itemSize = DTYPE_BYTES[spec.dtype];
  if (itemSize === undefined) {
    throw new CheckpointFormatError(
      `weight '${spec.name}' has unsupported dtype '${spec.dtype}'`,
    );
  }
  return elementCount(spec.shape) * itemSize;
}

/** Accepts either the model.json path or a directory containing one. */
export function resolveModelJson(input: string): string {
  const st = statSync(input);
  if (st.isDirectory()) {
    return join(input, 'model.json');
  }
  return input;
}

function checkSpec(raw: unknown, where: string): WeightSpec {
  if (typeof raw !== 'object' || raw === null) {
    throw new CheckpointFormatError(`${where}: weight spec must be an object`);
  }
  const { name, shape, dtype, quantization } = raw as Record<string, unknown>;
  if (typeof name !== 'string' || !name) {
    throw new CheckpointFormatError(`${where}: weight spec without a name`);
  }
  if (
    !Array.isArray(shape) ||
    shape.some((d) => typeof d !== 'number' || !Number.isInteger(d) || d < 0)
  ) {
    throw new CheckpointFormatError(`weight '${name}': bad shape`);
  }
  if (typeof dtype !== 'string' || !(dtype in DTYPE_BYTES)) {
    throw new CheckpointFormatError(
      `weight '${name}' has unsupported dtype '${String(dtype)}'`,
    );
  }
  if (quantization !== undefined) {
    throw new CheckpointFormatError(
      `weight '${name}' is quantized; quantized checkpoints are not supported`,
    );
  }
  return { name, shape: shape as number[], dtype };
}

export function readCheckpoint(input: string): Checkpoint {
  const modelJsonPath = resolveModelJson(input);
  const dir = dirname(modelJsonPath);
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(modelJsonPath, 'utf-8'));
  } catch (err) {
    throw new CheckpointFormatError(
      `cannot read ${modelJsonPath}: ${(err as Error).message}`,
    );
  }
  if (typeof parsed !== 'object' || parsed === null || Array.isArray(parsed)) {
    throw new CheckpointFormatError(`${basename(modelJsonPath)} must hold a JSON object`);
  }
  const { weightsManifest, ...meta } = parsed as Record<string, unknown>;
  if (!Array.isArray(weightsManifest) || weightsManifest.length === 0) {
    throw new CheckpointFormatError('model.json has no weightsManifest groups');
  }

  const entries: WeightEntry[] = [];
  weightsManifest.forEach((group, gi) => {
    if (typeof group !== 'object' || group === null) {
      throw new CheckpointFormatError(`weightsManifest[${gi}] must be an object`);
    }
    const { paths, weights } = group as Record<string, unknown>;
    if (!Array.isArray(paths) || paths.some((p) => typeof p !== 'string')) {
      throw new CheckpointFormatError(`weightsManifest[${gi}]: bad shard paths`);
    }
    if (!Array.isArray(weights)) {
      throw new CheckpointFormatError(`weightsManifest[${gi}]: bad weights list`);
    }
    const specs = weights.map((w, wi) =>
      checkSpec(w, `weightsManifest[${gi}].weights[${wi}]`),
    );

    const shards = (paths as string[]).map((p) => readFileSync(join(dir, p)));
    const blob = Buffer.concat(shards);
    const expected = specs.reduce((sum, s) => sum + byteLengthOf(s), 0);
    if (blob.length !== expected) {
      throw new CheckpointFormatError(
        `weightsManifest[${gi}]: shards hold ${blob.length} bytes, ` +
          `weights need ${expected}`,
      );
    }

    let pos = 0;
    for (const spec of specs) {
      const len = byteLengthOf(spec);
      entries.push({
        ...spec,
        bytes: Uint8Array.prototype.slice.call(blob.subarray(pos, pos + len)),
      });
      pos += len;
    }
  });

  const seen = new Set<string>();
  for (const e of entries) {
    if (seen.has(e.name)) {
      throw new CheckpointFormatError(`duplicate weight name '${e.name}'`);
    }
    seen.add(e.name);
  }
  return { meta: meta as Record<string, unknown>, entries };
}

export interface WriteOptions {
  /** Maximum bytes per shard file (default 4 MiB, the TF.js convention). */
  shardBytes?: number;
}

export function writeCheckpoint(
  outDir: string,
  meta: Record<string, unknown>,
  entries: WeightEntry[],
  options: WriteOptions = {},
): string {
  const shardBytes = options.shardBytes ?? 4 * 1024 * 1024;
  if (shardBytes < 1) {
    throw new CheckpointFormatError('shardBytes must be positive');
  }
  mkdirSync(outDir, { recursive: true });

  for (const e of entries) {
    if (e.bytes.length !== byteLengthOf(e)) {
      throw new CheckpointFormatError(
        `weight '${e.name}': ${e.bytes.length} bytes do not match ` +
          `${e.dtype} x [${e.shape.join(', ')}]`,
      );
    }
  }

  const blob = Buffer.concat(entries.map((e) => Buffer.from(e.bytes)));
  const shardCount = Math.max(1, Math.ceil(blob.length / shardBytes));
  const paths: string[] = [];
  for (let i = 0; i < shardCount; i++) {
    const name = `group1-shard${i + 1}of${shardCount}.bin`;
    writeFileSync(join(outDir, name), blob.subarray(i * shardBytes, (i + 1) * shardBytes));
    paths.push(name);
  }

  const modelJson = {
    ...meta,
    weightsManifest: [
      {
        paths,
        weights: entries.map(({ name, shape, dtype }) => ({ name, shape, dtype })),
      },
    ],
  };
  const modelJsonPath = join(outDir, 'model.json');
  writeFileSync(modelJsonPath, JSON.stringify(modelJson));
  return modelJsonPath;
}
