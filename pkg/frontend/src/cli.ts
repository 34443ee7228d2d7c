#!/usr/bin/env node
/**
 * plotkit <kind> --run-dir <dir> --out <file> [--subtask NAME]
 *                [--channel NAME] [--plane xy|xz|yz]
 *
 * Renders one figure from a completed run directory to an SVG file.
 * Exits 2 on bad usage or unreadable/incompatible artifacts.
 */

import { writeFileSync } from 'node:fs';
import { parseArgs } from 'node:util';
import { ArtifactError } from './artifacts.js';
import { render, PLOT_KINDS } from './render.js';

const USAGE = `usage: plotkit <kind> --run-dir <dir> --out <file> [--subtask NAME] [--channel NAME] [--plane xy|xz|yz]
kinds: ${PLOT_KINDS.join(', ')}`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        'run-dir': { type: 'string' },
        out: { type: 'string' },
        subtask: { type: 'string' },
        channel: { type: 'string' },
        plane: { type: 'string' },
      },
    });
  } catch (err) {
    console.error(`plotkit: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  const kind = parsed.positionals[0];
  const runDir = parsed.values['run-dir'];
  const out = parsed.values.out;
  if (!kind || !runDir || !out || parsed.positionals.length !== 1) {
    console.error(USAGE);
    return 2;
  }
  try {
    const svg = render(kind, runDir, {
      subtask: parsed.values.subtask,
      channel: parsed.values.channel,
      plane: parsed.values.plane,
    });
    writeFileSync(out, svg);
  } catch (err) {
    if (err instanceof ArtifactError) {
      console.error(`plotkit: ${err.message}`);
      return 2;
    }
    throw err;
  }
  console.error(`wrote ${out}`);
  return 0;
}

if (process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href) {
  process.exit(main(process.argv.slice(2)));
}
