/**
 * Single entry point that maps a plot-kind name to its renderer and
 * fills in sensible defaults from the run directory itself.
 */

import { listSubtasks, loadReport, ArtifactError } from './artifacts.js';
import { parseBounds } from './constraint.js';
import {
  btTimeline,
  channelVsTime,
  objectiveHistory,
  trajectory2d,
  trajectory3d,
} from './plots.js';

export const PLOT_KINDS = [
  'trajectory2d',
  'trajectory3d',
  'channel-vs-time',
  'objective-history',
  'bt-timeline',
] as const;

export type PlotKind = (typeof PLOT_KINDS)[number];

export interface RenderOptions {
  /** Subtask to draw; defaults to the first subtask in task order. */
  subtask?: string;
  /** Channel for channel-vs-time; defaults to the first bounded channel. */
  channel?: string;
  /** Projection plane for trajectory2d (xy, xz, or yz). */
  plane?: string;
}

/** Renders one figure from a run directory and returns the SVG text. */
export function render(kind: string, runDir: string, options: RenderOptions = {}): string {
  if (!(PLOT_KINDS as readonly string[]).includes(kind)) {
    throw new ArtifactError(
      `unknown plot kind '${kind}'; choose one of: ${PLOT_KINDS.join(', ')}`,
    );
  }
  if (kind === 'bt-timeline') {
    return btTimeline(runDir);
  }
  const subtask =
    options.subtask ??
    (kind === 'objective-history'
      ? firstOptimizedSubtask(runDir)
      : listSubtasks(runDir)[0]!);
  switch (kind as PlotKind) {
    case 'trajectory2d':
      return trajectory2d(runDir, subtask, options.plane ?? 'xy');
    case 'trajectory3d':
      return trajectory3d(runDir, subtask);
    case 'channel-vs-time':
      return channelVsTime(runDir, subtask, options.channel ?? defaultChannel(runDir, subtask));
    case 'objective-history':
      return objectiveHistory(runDir, subtask);
    default:
      throw new ArtifactError(`unhandled plot kind '${kind}'`);
  }
}

function firstOptimizedSubtask(runDir: string): string {
  const names = listSubtasks(runDir);
  for (const name of names) {
    const report = loadReport(runDir, name);
    if (Array.isArray(report.objective_history) && report.objective_history.length > 0) {
      return name;
    }
  }
  throw new ArtifactError(`${runDir}: no subtask has an objective history to plot`);
}

function defaultChannel(runDir: string, subtask: string): string {
  const report = loadReport(runDir, subtask);
  const bounds = parseBounds(report.constraint);
  return bounds.length > 0 ? bounds[0]!.channel : 'y.z';
}
