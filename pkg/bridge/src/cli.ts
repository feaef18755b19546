/**
 * Command-line front ends:
 *
 *   ckpt2tsr IN OUT --manifest M.json   checkpoint -> container
 *   tsr2ckpt IN OUT --manifest M.json   container  -> checkpoint directory
 *
 * Exit codes: 0 success, 1 conversion/data error, 2 usage error.
 */

import { fromContainer, toContainer } from './convert.js';
import { loadManifest } from './manifest.js';

export type Command = 'ckpt2tsr' | 'tsr2ckpt';

interface ParsedArgs {
  input: string;
  output: string;
  manifest: string;
  help: boolean;
}

const USAGE: Record<Command, string> = {
  ckpt2tsr: `usage: ckpt2tsr IN OUT --manifest M.json

Convert a TF.js-style checkpoint (model.json + weight shards) into a .tsr
tensor container, writing the conversion manifest alongside.

arguments:
  IN              model.json path, or a directory containing model.json
  OUT             container file to write (.tsr)
  --manifest M    conversion manifest to write (JSON)
  -h, --help      show this help`,
  tsr2ckpt: `usage: tsr2ckpt IN OUT --manifest M.json

Rebuild a TF.js-style checkpoint from a .tsr tensor container and the
manifest written by ckpt2tsr. Skipped tensors are copied from the original
checkpoint; marked weights re-enter as float64 (recorded in OUT's
bridge-manifest.json).

arguments:
  IN              container file (.tsr)
  OUT             checkpoint directory to create
  --manifest M    conversion manifest written by ckpt2tsr
  -h, --help      show this help`,
};

function parseArgs(command: Command, argv: string[]): ParsedArgs {
  const parsed: ParsedArgs = { input: '', output: '', manifest: '', help: false };
  const positional: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    switch (arg) {
      case '-h':
      case '--help':
        parsed.help = true;
        break;
      case '--manifest': {
        const value = argv[++i];
        if (!value) {
          throw new UsageError(command, '--manifest needs a path');
        }
        parsed.manifest = value;
        break;
      }
      default:
        if (arg.startsWith('-')) {
          throw new UsageError(command, `unknown option '${arg}'`);
        }
        positional.push(arg);
        break;
    }
  }
  if (parsed.help) {
    return parsed;
  }
  if (positional.length !== 2) {
    throw new UsageError(command, 'expected exactly IN and OUT');
  }
  if (!parsed.manifest) {
    throw new UsageError(command, '--manifest is required');
  }
  [parsed.input, parsed.output] = positional as [string, string];
  return parsed;
}

class UsageError extends Error {
  constructor(
    public command: Command,
    message: string,
  ) {
    super(message);
  }
}

export function run(command: Command, argv: string[]): number {
  let args: ParsedArgs;
  try {
    args = parseArgs(command, argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`${command}: ${err.message}`);
      console.error(USAGE[command]);
      return 2;
    }
    throw err;
  }
  if (args.help) {
    console.log(USAGE[command]);
    return 0;
  }

  try {
    if (command === 'ckpt2tsr') {
      const { manifest, paramCount } = toContainer(
        args.input,
        args.output,
        args.manifest,
      );
      console.log(
        `exported ${manifest.exported.length} float tensor(s), ` +
          `${paramCount} parameters -> ${args.output}`,
      );
      if (manifest.skipped.length > 0) {
        console.log(`skipped (non-float): ${manifest.skipped.join(', ')}`);
      }
      console.log(`manifest -> ${args.manifest}`);
    } else {
      const manifest = loadManifest(args.manifest);
      const result = fromContainer(
        args.input,
        manifest,
        args.output,
        `${args.output}/bridge-manifest.json`,
      );
      console.log(`rebuilt checkpoint -> ${result.modelJsonPath}`);
      if (result.promotedCount > 0) {
        console.log(
          `${result.promotedCount} tensor(s) promoted to float64 ` +
            `(see ${args.output}/bridge-manifest.json)`,
        );
      }
    }
  } catch (err) {
    console.error(`${command}: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}
