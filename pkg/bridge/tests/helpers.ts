/**
 * Test fixtures: a seeded PRNG and a generator for realistic TF.js-style
 * checkpoints. The generator writes model.json and shards with its own
 * code (multiple weight groups, small shards) so the bridge's reader is
 * exercised against independently constructed artifacts.
 */

import { mkdirSync, writeFileSync } from 'fs';
import { join } from 'path';

import type { WeightSpec } from '../src/tfjs.js';

/** Deterministic 32-bit PRNG (mulberry32), uniform in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard normal sampler (Box-Muller) over a uniform source. */
export function gaussian(rand: () => number): () => number {
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const v = spare;
      spare = null;
      return v;
    }
    let u = 0;
    while (u === 0) u = rand();
    const r = Math.sqrt(-2 * Math.log(u));
    const theta = 2 * Math.PI * rand();
    spare = r * Math.sin(theta);
    return r * Math.cos(theta);
  };
}

export interface FixtureWeight extends WeightSpec {
  bytes: Uint8Array;
}

export interface FixtureCheckpoint {
  dir: string;
  modelJsonPath: string;
  weights: FixtureWeight[];
  floatNames: string[];
  skippedNames: string[];
  floatParamCount: number;
}

function f32Weight(
  name: string,
  shape: number[],
  next: () => number,
  scale = 0.1,
): FixtureWeight {
  const count = shape.reduce((a, b) => a * b, 1);
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = next() * scale;
  return { name, shape, dtype: 'float32', bytes: new Uint8Array(data.buffer) };
}

function int32Weight(name: string, values: number[]): FixtureWeight {
  const data = new Int32Array(values);
  return {
    name,
    shape: values.length === 1 ? [] : [values.length],
    dtype: 'int32',
    bytes: new Uint8Array(data.buffer),
  };
}

function boolWeight(name: string, values: number[]): FixtureWeight {
  return {
    name,
    shape: [values.length],
    dtype: 'bool',
    bytes: Uint8Array.from(values),
  };
}

function writeGroup(
  dir: string,
  groupIndex: number,
  weights: FixtureWeight[],
  shardBytes: number,
): { paths: string[]; weights: WeightSpec[] } {
  const blob = Buffer.concat(weights.map((w) => Buffer.from(w.bytes)));
  const shardCount = Math.max(1, Math.ceil(blob.length / shardBytes));
  const paths: string[] = [];
  for (let i = 0; i < shardCount; i++) {
    const name = `group${groupIndex}-shard${i + 1}of${shardCount}.bin`;
    writeFileSync(join(dir, name), blob.subarray(i * shardBytes, (i + 1) * shardBytes));
    paths.push(name);
  }
  return {
    paths,
    weights: weights.map(({ name, shape, dtype }) => ({ name, shape, dtype })),
  };
}

/**
 * Write a checkpoint shaped like a small trained image model: conv stem,
 * one big dense block sized to hit `targetParams` float parameters, an
 * int32 step counter and vocabulary, and a bool mask. Two weight groups,
 * 64 KiB shards.
 */
export function makeCheckpoint(
  dir: string,
  opts: { seed: number; targetParams: number },
): FixtureCheckpoint {
  mkdirSync(dir, { recursive: true });
  const next = gaussian(mulberry32(opts.seed));

  const stem = [
    f32Weight('conv1/kernel', [3, 3, 3, 16], next),
    f32Weight('conv1/bias', [16], next),
    f32Weight('block1/depthwise_kernel', [3, 3, 16, 1], next),
  ];
  const head = [
    f32Weight('head/kernel', [256, 10], next),
    f32Weight('head/bias', [10], next),
  ];
  const fixed =
    stem.reduce((s, w) => s + w.bytes.length / 4, 0) +
    head.reduce((s, w) => s + w.bytes.length / 4, 0) +
    256;
  const denseRows = Math.max(1, Math.floor((opts.targetParams - fixed) / 256));
  const dense = [
    f32Weight('dense1/kernel', [denseRows, 256], next),
    f32Weight('dense1/bias', [256], next),
  ];

  const group1 = [...stem, int32Weight('global_step', [4217])];
  const group2 = [
    ...dense,
    ...head,
    int32Weight('vocab/ids', Array.from({ length: 50 }, (_, i) => i * 3)),
    boolWeight('metrics/valid_mask', Array.from({ length: 33 }, (_, i) => i % 2)),
  ];

  const manifest = [
    writeGroup(dir, 1, group1, 64 * 1024),
    writeGroup(dir, 2, group2, 64 * 1024),
  ];
  const modelJson = {
    format: 'layers-model',
    generatedBy: 'keras v2.15.0',
    convertedBy: 'TensorFlow.js Converter v4.17.0',
    modelTopology: {
      keras_version: '2.15.0',
      backend: 'tensorflow',
      model_config: { class_name: 'Sequential', config: { name: 'fixture' } },
    },
    weightsManifest: manifest,
  };
  const modelJsonPath = join(dir, 'model.json');
  writeFileSync(modelJsonPath, JSON.stringify(modelJson));

  const weights = [...group1, ...group2];
  const floatNames = weights
    .filter((w) => w.dtype === 'float32')
    .map((w) => w.name);
  const skippedNames = weights
    .filter((w) => w.dtype !== 'float32')
    .map((w) => w.name);
  return {
    dir,
    modelJsonPath,
    weights,
    floatNames,
    skippedNames,
    floatParamCount: weights
      .filter((w) => w.dtype === 'float32')
      .reduce((s, w) => s + w.bytes.length / 4, 0),
  };
}
