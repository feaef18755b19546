#!/usr/bin/env node
import { run } from '../cli.js';

process.exit(run('tsr2ckpt', process.argv.slice(2)));
