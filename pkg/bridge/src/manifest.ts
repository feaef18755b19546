/**
 * The conversion record that travels with a converted checkpoint. It lists
 * every source tensor exactly once, remembers which were exported into the
 * container and which were skipped (non-float), and accumulates notes about
 * behavioral changes on the way back (e.g. float32 weights re-entering as
 * float64 after marking).
 */

import { readFileSync, writeFileSync } from 'fs';

export class ManifestError extends Error {}

export interface BridgeManifest {
  sourceFormat: string;
  /** Path of the source model.json, used to copy skipped tensors back. */
  sourcePath: string;
  /** Every source tensor name exactly once, in source manifest order. */
  tensorNames: string[];
  dtypes: Record<string, string>;
  shapes: Record<string, number[]>;
  /** Float tensors written into the container. */
  exported: string[];
  /** Non-float tensors carried outside the container, unprotected. */
  skipped: string[];
  conversionNotes: string[];
}

export function validateManifest(m: BridgeManifest): void {
  const names = new Set(m.tensorNames);
  if (names.size !== m.tensorNames.length) {
    throw new ManifestError('manifest lists a tensor name more than once');
  }
  const covered = new Set([...m.exported, ...m.skipped]);
  if (covered.size !== m.exported.length + m.skipped.length) {
    throw new ManifestError('a tensor appears in both exported and skipped');
  }
  for (const name of m.tensorNames) {
    if (!covered.has(name)) {
      throw new ManifestError(`tensor '${name}' is neither exported nor skipped`);
    }
    if (!(name in m.dtypes) || !(name in m.shapes)) {
      throw new ManifestError(`tensor '${name}' is missing dtype or shape`);
    }
  }
  for (const name of covered) {
    if (!names.has(name)) {
      throw new ManifestError(`manifest does not list tensor '${name}'`);
    }
  }
}

export function saveManifest(path: string, m: BridgeManifest): void {
  validateManifest(m);
  writeFileSync(path, JSON.stringify(m, null, 2) + '\n');
}

export function loadManifest(path: string): BridgeManifest {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, 'utf-8'));
  } catch (err) {
    throw new ManifestError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  const m = parsed as BridgeManifest;
  if (
    typeof m !== 'object' ||
    m === null ||
    typeof m.sourceFormat !== 'string' ||
    typeof m.sourcePath !== 'string' ||
    !Array.isArray(m.tensorNames) ||
    !Array.isArray(m.exported) ||
    !Array.isArray(m.skipped) ||
    !Array.isArray(m.conversionNotes) ||
    typeof m.dtypes !== 'object' ||
    typeof m.shapes !== 'object'
  ) {
    throw new ManifestError(`manifest ${path} is missing required fields`);
  }
  validateManifest(m);
  return m;
}
