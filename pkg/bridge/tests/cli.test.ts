import { execFileSync } from 'child_process';
import { existsSync, mkdtempSync } from 'fs';
import { tmpdir } from 'os';
import { dirname, join } from 'path';
import { fileURLToPath } from 'url';

import { describe, expect, test } from 'vitest';

import { makeCheckpoint } from './helpers.js';

const ROOT = join(dirname(fileURLToPath(import.meta.url)), '..');
const CKPT2TSR = join(ROOT, 'dist', 'bin', 'ckpt2tsr.js');
const TSR2CKPT = join(ROOT, 'dist', 'bin', 'tsr2ckpt.js');

interface RunResult {
  status: number;
  stdout: string;
  stderr: string;
}

function runBin(bin: string, args: string[]): RunResult {
  try {
    const stdout = execFileSync('node', [bin, ...args], { encoding: 'utf-8' });
    return { status: 0, stdout, stderr: '' };
  } catch (err) {
    const e = err as { status?: number; stdout?: string; stderr?: string };
    return {
      status: e.status ?? -1,
      stdout: e.stdout ?? '',
      stderr: e.stderr ?? '',
    };
  }
}

function tmp(): string {
  return mkdtempSync(join(tmpdir(), 'bridge-cli-'));
}

describe('command-line converters', () => {
  test('ckpt2tsr then tsr2ckpt round-trips a checkpoint', () => {
    const dir = tmp();
    const fixture = makeCheckpoint(join(dir, 'src'), { seed: 30, targetParams: 20_000 });

    const forward = runBin(CKPT2TSR, [
      fixture.modelJsonPath,
      join(dir, 'model.tsr'),
      '--manifest',
      join(dir, 'manifest.json'),
    ]);
    expect(forward.status).toBe(0);
    expect(forward.stdout).toContain(`${fixture.floatParamCount} parameters`);
    expect(forward.stdout).toContain('skipped (non-float): global_step');
    expect(existsSync(join(dir, 'model.tsr'))).toBe(true);
    expect(existsSync(join(dir, 'manifest.json'))).toBe(true);

    const backward = runBin(TSR2CKPT, [
      join(dir, 'model.tsr'),
      join(dir, 'rebuilt'),
      '--manifest',
      join(dir, 'manifest.json'),
    ]);
    expect(backward.status).toBe(0);
    expect(existsSync(join(dir, 'rebuilt', 'model.json'))).toBe(true);
    expect(existsSync(join(dir, 'rebuilt', 'bridge-manifest.json'))).toBe(true);
  });

  test('--help exits 0 and prints usage', () => {
    for (const bin of [CKPT2TSR, TSR2CKPT]) {
      const r = runBin(bin, ['--help']);
      expect(r.status).toBe(0);
      expect(r.stdout).toContain('--manifest');
    }
  });

  test('usage errors exit 2', () => {
    const dir = tmp();
    const missingManifest = runBin(CKPT2TSR, ['a', 'b']);
    expect(missingManifest.status).toBe(2);
    expect(missingManifest.stderr).toContain('--manifest is required');

    const extraPositional = runBin(TSR2CKPT, [
      'a',
      'b',
      'c',
      '--manifest',
      join(dir, 'm.json'),
    ]);
    expect(extraPositional.status).toBe(2);

    const unknownFlag = runBin(CKPT2TSR, ['a', 'b', '--manifest', 'm', '--frobnicate']);
    expect(unknownFlag.status).toBe(2);
    expect(unknownFlag.stderr).toContain("unknown option '--frobnicate'");
  });

  test('conversion failures exit 1 with the reason', () => {
    const dir = tmp();
    const r = runBin(CKPT2TSR, [
      join(dir, 'does-not-exist'),
      join(dir, 'out.tsr'),
      '--manifest',
      join(dir, 'm.json'),
    ]);
    expect(r.status).toBe(1);
    expect(r.stderr).toContain('ckpt2tsr:');
  });
});
