#!/usr/bin/env node
import { run } from '../cli.js';

process.exit(run('ckpt2tsr', process.argv.slice(2)));
