/**
 * Reader/writer for the .tsr tensor container.
 *
 * File layout: an unsigned 64-bit little-endian header length, a compact
 * UTF-8 JSON header mapping tensor name -> {"data_offsets", "dtype",
 * "shape"}, then the raw little-endian tensor data. Only "F32" and "F64"
 * dtypes exist; data_offsets are byte ranges [begin, end) into the data
 * section and must tile it exactly.
 *
 * Writing is byte-deterministic and matches the Python side: names are
 * serialized sorted, the JSON is compact with sorted keys, and data chunks
 * are laid out in sorted-name order.
 */

import { readFileSync, writeFileSync } from 'fs';

export type DtypeTag = 'F32' | 'F64';

export interface ContainerTensor {
  dtype: DtypeTag;
  shape: number[];
  /** Row-major values; length must equal the product of `shape`. */
  data: Float32Array | Float64Array;
}

export class ContainerFormatError extends Error {}

const HEADER_LEN_CAP = 1 << 30;
const ITEM_SIZE: Record<DtypeTag, number> = { F32: 4, F64: 8 };

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function checkTensor(name: string, t: ContainerTensor): void {
  if (!name) {
    throw new ContainerFormatError('tensor names must be non-empty');
  }
  const want = t.dtype === 'F32' ? Float32Array : Float64Array;
  if (!(t.data instanceof want)) {
    throw new ContainerFormatError(
      `tensor '${name}': dtype ${t.dtype} does not match its typed array`,
    );
  }
  if (t.data.length !== elementCount(t.shape)) {
    throw new ContainerFormatError(
      `tensor '${name}': ${t.data.length} values do not fill shape ` +
        `[${t.shape.join(', ')}]`,
    );
  }
}

/**
 * Serialize the header exactly like a compact sorted-keys JSON dump.
 * Built by hand because JS objects reorder integer-like keys, which would
 * break byte determinism for tensor names such as "0".
 */
function serializeHeader(
  entries: Array<[string, { begin: number; end: number; t: ContainerTensor }]>,
): Buffer {
  const parts = entries.map(([name, e]) => {
    const offsets = `"data_offsets":[${e.begin},${e.end}]`;
    const dtype = `"dtype":"${e.t.dtype}"`;
    const shape = `"shape":[${e.t.shape.join(',')}]`;
    return `${JSON.stringify(name)}:{${offsets},${dtype},${shape}}`;
  });
  return Buffer.from(`{${parts.join(',')}}`, 'utf-8');
}

export function writeContainer(
  path: string,
  tensors: Map<string, ContainerTensor>,
): void {
  const names = [...tensors.keys()].sort();
  const entries: Array<
    [string, { begin: number; end: number; t: ContainerTensor }]
  > = [];
  const chunks: Buffer[] = [];
  let pos = 0;
  for (const name of names) {
    const t = tensors.get(name)!;
    checkTensor(name, t);
    const raw = Buffer.from(t.data.buffer, t.data.byteOffset, t.data.byteLength);
    entries.push([name, { begin: pos, end: pos + raw.length, t }]);
    chunks.push(raw);
    pos += raw.length;
  }
  const header = serializeHeader(entries);
  const lenField = Buffer.alloc(8);
  lenField.writeBigUInt64LE(BigInt(header.length));
  writeFileSync(path, Buffer.concat([lenField, header, ...chunks]));
}

function parseHeader(data: Buffer): { header: unknown; body: Buffer } {
  if (data.length < 8) {
    throw new ContainerFormatError('file too short for header length');
  }
  const hlen = Number(data.readBigUInt64LE(0));
  if (hlen > HEADER_LEN_CAP || 8 + hlen > data.length) {
    throw new ContainerFormatError('header length exceeds file size');
  }
  let header: unknown;
  try {
    header = JSON.parse(data.subarray(8, 8 + hlen).toString('utf-8'));
  } catch (err) {
    throw new ContainerFormatError(`bad container header: ${(err as Error).message}`);
  }
  return { header, body: data.subarray(8 + hlen) };
}

export function readContainer(path: string): Map<string, ContainerTensor> {
  const { header, body } = parseHeader(readFileSync(path));
  if (typeof header !== 'object' || header === null || Array.isArray(header)) {
    throw new ContainerFormatError('container header must be a JSON object');
  }

  const out = new Map<string, ContainerTensor>();
  const spans: Array<[number, number]> = [];
  for (const name of Object.keys(header).sort()) {
    const entry = (header as Record<string, unknown>)[name];
    if (typeof entry !== 'object' || entry === null || Array.isArray(entry)) {
      throw new ContainerFormatError(`entry for '${name}' must be an object`);
    }
    const { dtype, shape, data_offsets: offs } = entry as Record<string, unknown>;
    if (dtype !== 'F32' && dtype !== 'F64') {
      throw new ContainerFormatError(`tensor '${name}': unknown dtype ${JSON.stringify(dtype)}`);
    }
    if (
      !Array.isArray(shape) ||
      shape.some((d) => typeof d !== 'number' || !Number.isInteger(d) || d < 0)
    ) {
      throw new ContainerFormatError(`tensor '${name}': bad shape ${JSON.stringify(shape)}`);
    }
    if (
      !Array.isArray(offs) ||
      offs.length !== 2 ||
      offs.some((o) => typeof o !== 'number' || !Number.isInteger(o))
    ) {
      throw new ContainerFormatError(
        `tensor '${name}': bad data_offsets ${JSON.stringify(offs)}`,
      );
    }
    const [begin, end] = offs as [number, number];
    const count = elementCount(shape as number[]);
    if (begin < 0 || end > body.length || begin > end) {
      throw new ContainerFormatError(`tensor '${name}': offsets out of range`);
    }
    if (end - begin !== count * ITEM_SIZE[dtype]) {
      throw new ContainerFormatError(
        `tensor '${name}': byte span ${end - begin} != ${count} x ${ITEM_SIZE[dtype]}`,
      );
    }
    // Copy into a fresh buffer so the typed-array view is always aligned.
    const raw = Uint8Array.prototype.slice.call(body.subarray(begin, end));
    const data =
      dtype === 'F32'
        ? new Float32Array(raw.buffer, 0, count)
        : new Float64Array(raw.buffer, 0, count);
    out.set(name, { dtype, shape: shape as number[], data });
    spans.push([begin, end]);
  }

  spans.sort((a, b) => a[0] - b[0]);
  let pos = 0;
  for (const [begin, end] of spans) {
    if (begin !== pos) {
      throw new ContainerFormatError('data ranges must tile the buffer exactly');
    }
    pos = end;
  }
  if (pos !== body.length) {
    throw new ContainerFormatError('trailing bytes after last tensor');
  }
  return out;
}
