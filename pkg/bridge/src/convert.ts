/**
 * The two conversion directions.
 *
 * toContainer: TF.js-style checkpoint -> .tsr container + BridgeManifest.
 * Float weights are exported with names and shapes preserved; everything
 * else is recorded as skipped and stays (unprotected) in the source
 * checkpoint.
 *
 * fromContainer: .tsr container + BridgeManifest -> rebuilt checkpoint.
 * Container tensors re-enter under their original names in the original
 * manifest order; skipped tensors are copied byte-for-byte from the source
 * checkpoint. Marking promotes weights to float64, so on the return path a
 * source-float32 tensor may come back as float64 — a behavioral change the
 * rebuilt manifest documents in its conversion notes. (Stock TF.js loaders
 * stop at float32; the float64 artifact is for verification pipelines, and
 * demoting it is outside this converter's contract.)
 */

import { resolve } from 'path';

import {
  ContainerTensor,
  readContainer,
  writeContainer,
} from './container.js';
import {
  Checkpoint,
  CheckpointFormatError,
  WeightEntry,
  isFloatDtype,
  readCheckpoint,
  resolveModelJson,
  writeCheckpoint,
} from './tfjs.js';
import { BridgeManifest, saveManifest } from './manifest.js';

export const SOURCE_FORMAT = 'tfjs-weights-manifest';

export interface ToContainerResult {
  manifest: BridgeManifest;
  /** Total exported (float) parameter count. */
  paramCount: number;
}

function floatTensorOf(entry: WeightEntry): ContainerTensor {
  const buf = entry.bytes.buffer as ArrayBuffer;
  if (entry.dtype === 'float32') {
    return {
      dtype: 'F32',
      shape: entry.shape,
      data: new Float32Array(buf, entry.bytes.byteOffset, entry.bytes.length / 4),
    };
  }
  return {
    dtype: 'F64',
    shape: entry.shape,
    data: new Float64Array(buf, entry.bytes.byteOffset, entry.bytes.length / 8),
  };
}

export function toContainer(
  checkpointPath: string,
  containerPath: string,
  manifestPath: string,
): ToContainerResult {
  const sourcePath = resolve(resolveModelJson(checkpointPath));
  const ckpt = readCheckpoint(sourcePath);

  const tensors = new Map<string, ContainerTensor>();
  const exported: string[] = [];
  const skipped: string[] = [];
  const dtypes: Record<string, string> = {};
  const shapes: Record<string, number[]> = {};
  let paramCount = 0;

  for (const entry of ckpt.entries) {
    dtypes[entry.name] = entry.dtype;
    shapes[entry.name] = entry.shape;
    if (isFloatDtype(entry.dtype)) {
      const t = floatTensorOf(entry);
      tensors.set(entry.name, t);
      exported.push(entry.name);
      paramCount += t.data.length;
    } else {
      skipped.push(entry.name);
    }
  }
  if (exported.length === 0) {
    throw new CheckpointFormatError('checkpoint has no float weights to export');
  }

  const notes = [
    'Float weights exported to the container with names and shapes preserved.',
    'Skipped (non-float) tensors remain only in the source checkpoint and are not covered by marking.',
    'On the return path, marked weights re-enter as float64 regardless of source dtype.',
  ];
  const manifest: BridgeManifest = {
    sourceFormat: SOURCE_FORMAT,
    sourcePath,
    tensorNames: ckpt.entries.map((e) => e.name),
    dtypes,
    shapes,
    exported,
    skipped,
    conversionNotes: notes,
  };

  writeContainer(containerPath, tensors);
  saveManifest(manifestPath, manifest);
  return { manifest, paramCount };
}

export interface FromContainerResult {
  modelJsonPath: string;
  manifest: BridgeManifest;
  /** Count of tensors whose dtype changed relative to the source. */
  promotedCount: number;
}

function shapesEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((d, i) => d === b[i]);
}

export function fromContainer(
  containerPath: string,
  manifest: BridgeManifest,
  outDir: string,
  manifestOutPath?: string,
): FromContainerResult {
  const tensors = readContainer(containerPath);

  const containerNames = new Set(tensors.keys());
  for (const name of manifest.exported) {
    if (!containerNames.has(name)) {
      throw new CheckpointFormatError(
        `name mismatch: manifest exports '${name}' but the container lacks it`,
      );
    }
  }
  for (const name of containerNames) {
    if (!manifest.exported.includes(name)) {
      throw new CheckpointFormatError(
        `name mismatch: container holds '${name}' which the manifest does not export`,
      );
    }
  }

  // Skipped tensors come back from the source checkpoint, byte for byte.
  let source: Checkpoint | null = null;
  if (manifest.skipped.length > 0) {
    try {
      source = readCheckpoint(manifest.sourcePath);
    } catch (err) {
      throw new CheckpointFormatError(
        `skipped tensor '${manifest.skipped[0]}' needs the source checkpoint ` +
          `at ${manifest.sourcePath}: ${(err as Error).message}`,
      );
    }
  } else {
    try {
      source = readCheckpoint(manifest.sourcePath);
    } catch {
      source = null; // metadata-less rebuild is still well-formed
    }
  }
  const sourceByName = new Map<string, WeightEntry>(
    source ? source.entries.map((e) => [e.name, e]) : [],
  );

  const notes = [...manifest.conversionNotes];
  let promotedCount = 0;
  const entries: WeightEntry[] = manifest.tensorNames.map((name) => {
    const srcDtype = manifest.dtypes[name]!;
    const srcShape = manifest.shapes[name]!;
    if (manifest.skipped.includes(name)) {
      const src = sourceByName.get(name);
      if (!src) {
        throw new CheckpointFormatError(
          `skipped tensor '${name}' is missing from the source checkpoint`,
        );
      }
      if (src.dtype !== srcDtype || !shapesEqual(src.shape, srcShape)) {
        throw new CheckpointFormatError(
          `skipped tensor '${name}' changed in the source checkpoint`,
        );
      }
      return src;
    }

    const t = tensors.get(name)!;
    if (!shapesEqual(t.shape, srcShape)) {
      throw new CheckpointFormatError(
        `tensor '${name}': container shape [${t.shape.join(', ')}] != ` +
          `source shape [${srcShape.join(', ')}]`,
      );
    }
    const dtype = t.dtype === 'F32' ? 'float32' : 'float64';
    if (dtype !== srcDtype) {
      promotedCount += 1;
      notes.push(
        `tensor '${name}' returned as ${dtype} (source was ${srcDtype}).`,
      );
    }
    return {
      name,
      shape: t.shape,
      dtype,
      bytes: new Uint8Array(t.data.buffer, t.data.byteOffset, t.data.byteLength),
    };
  });
  if (promotedCount > 0) {
    notes.push(
      `${promotedCount} tensor(s) promoted to float64; stock TF.js loaders ` +
        'read at most float32, so this artifact is for verification pipelines.',
    );
  }

  const meta = source ? source.meta : {};
  const modelJsonPath = writeCheckpoint(outDir, meta, entries);

  const rebuilt: BridgeManifest = {
    ...manifest,
    dtypes: Object.fromEntries(entries.map((e) => [e.name, e.dtype])),
    conversionNotes: notes,
  };
  if (manifestOutPath) {
    saveManifest(manifestOutPath, rebuilt);
  }
  return { modelJsonPath, manifest: rebuilt, promotedCount };
}
