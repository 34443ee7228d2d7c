/**
 * The five figure renderers.
 *
 * Each function reads artifacts from a completed run directory and
 * returns a standalone SVG document as a string.  Renderers never write
 * files and never mutate the run directory.
 */

import {
  loadExecution,
  loadJson,
  loadPlanTrace,
  loadReport,
  numericColumn,
  stringColumn,
  ArtifactError,
  EVALUATION_SCHEMA,
} from './artifacts.js';
import { parseBounds, parseSpheres, parseWindow } from './constraint.js';
import {
  axes,
  document,
  el,
  linearScale,
  plotArea,
  polylinePoints,
  px,
  DEFAULT_FRAME,
} from './svg.js';
import { join } from 'node:path';

const PATH_STYLE = { fill: 'none', stroke: '#1f6fb2', 'stroke-width': 1.6 };
const AXIS_PAIRS: Record<string, [string, string]> = {
  xy: ['y.x', 'y.y'],
  xz: ['y.x', 'y.z'],
  yz: ['y.y', 'y.z'],
};

/** Planar view of a planned trajectory with constraint geometry. */
export function trajectory2d(runDir: string, subtask: string, plane = 'xy'): string {
  const pair = AXIS_PAIRS[plane];
  if (!pair) {
    throw new ArtifactError(`unknown plane '${plane}'; use xy, xz, or yz`);
  }
  const trace = loadPlanTrace(runDir, subtask);
  const report = loadReport(runDir, subtask);
  const xs = numericColumn(trace, pair[0]);
  const ys = numericColumn(trace, pair[1]);
  const spheres = parseSpheres(report.constraint);
  const axisIndex = (channel: string): number => 'xyz'.indexOf(channel.slice(-1));
  const ai = axisIndex(pair[0]);
  const bi = axisIndex(pair[1]);

  const xsAll = [...xs];
  const ysAll = [...ys];
  for (const sphere of spheres) {
    xsAll.push(sphere.center[ai]! - sphere.radius, sphere.center[ai]! + sphere.radius);
    ysAll.push(sphere.center[bi]! - sphere.radius, sphere.center[bi]! + sphere.radius);
  }
  const frame = DEFAULT_FRAME;
  const area = plotArea(frame);
  const [xScale, yScale] = equalAspectScales(
    extent(xsAll),
    extent(ysAll),
    [area.x0, area.x1],
    [area.y1, area.y0],
  );

  const parts: string[] = [];
  for (const sphere of spheres) {
    const r = Math.abs(xScale(sphere.center[ai]! + sphere.radius) - xScale(sphere.center[ai]!));
    parts.push(
      el('circle', {
        cx: px(xScale(sphere.center[ai]!)),
        cy: px(yScale(sphere.center[bi]!)),
        fill: sphere.keepOut ? '#fbe4e4' : '#e4f5e6',
        r: px(r),
        stroke: sphere.keepOut ? '#c0392b' : '#27851f',
        'stroke-dasharray': '4 3',
        'stroke-width': 1.2,
      }),
    );
  }
  parts.push(el('polyline', { ...PATH_STYLE, points: polylinePoints(xs.map(xScale), ys.map(yScale)) }));
  parts.push(marker(xScale(xs[0]!), yScale(ys[0]!), 'start'));
  parts.push(marker(xScale(report.y_goal[ai]!), yScale(report.y_goal[bi]!), 'goal'));
  parts.push(
    axes(frame, xScale, yScale, {
      title: `${subtask}: planned path (${plane} plane)`,
      x: `${pair[0]} [m]`,
      y: `${pair[1]} [m]`,
    }),
  );
  return document(frame, parts.join(''));
}

/** Isometric view of a planned trajectory with its ground shadow. */
export function trajectory3d(runDir: string, subtask: string): string {
  const trace = loadPlanTrace(runDir, subtask);
  const report = loadReport(runDir, subtask);
  const xs = numericColumn(trace, 'y.x');
  const ys = numericColumn(trace, 'y.y');
  const zs = numericColumn(trace, 'y.z');
  const floor = Math.min(...zs, report.y_goal[2]!);

  const project = (x: number, y: number, z: number): [number, number] => [
    (x - y) * Math.cos(Math.PI / 6),
    (x + y) * Math.sin(Math.PI / 6) - z,
  ];
  const path: [number, number][] = xs.map((x, i) => project(x, ys[i]!, zs[i]!));
  const shadow: [number, number][] = xs.map((x, i) => project(x, ys[i]!, floor));
  const goal = project(report.y_goal[0]!, report.y_goal[1]!, report.y_goal[2]!);

  const us = [...path, ...shadow, goal].map((p) => p[0]);
  const vs = [...path, ...shadow, goal].map((p) => p[1]);
  const frame = DEFAULT_FRAME;
  const area = plotArea(frame);
  const [uScale, vScale] = equalAspectScales(
    extent(us),
    extent(vs),
    [area.x0, area.x1],
    [area.y1, area.y0],
  );

  const parts: string[] = [];
  parts.push(
    el('polyline', {
      fill: 'none',
      points: polylinePoints(shadow.map((p) => uScale(p[0])), shadow.map((p) => vScale(p[1]))),
      stroke: '#bbbbbb',
      'stroke-width': 1,
    }),
  );
  for (let i = 0; i < path.length; i += Math.max(1, Math.floor(path.length / 12))) {
    parts.push(
      el('line', {
        stroke: '#dddddd',
        'stroke-width': 0.8,
        x1: px(uScale(path[i]![0])),
        x2: px(uScale(shadow[i]![0])),
        y1: px(vScale(path[i]![1])),
        y2: px(vScale(shadow[i]![1])),
      }),
    );
  }
  parts.push(
    el('polyline', {
      ...PATH_STYLE,
      points: polylinePoints(path.map((p) => uScale(p[0])), path.map((p) => vScale(p[1]))),
    }),
  );
  parts.push(marker(uScale(path[0]![0]), vScale(path[0]![1]), 'start'));
  parts.push(marker(uScale(goal[0]), vScale(goal[1]), 'goal'));
  parts.push(
    el(
      'text',
      {
        fill: '#111',
        'font-family': 'monospace',
        'font-size': 14,
        'text-anchor': 'middle',
        x: px((area.x0 + area.x1) / 2),
        y: px(area.y0 - 14),
      },
      `${subtask}: planned path (isometric)`,
    ),
  );
  return document(frame, parts.join(''));
}

/** One trace channel over time with its constraint window and bounds. */
export function channelVsTime(runDir: string, subtask: string, channel: string): string {
  const trace = loadPlanTrace(runDir, subtask);
  const report = loadReport(runDir, subtask);
  const times = numericColumn(trace, 't');
  const values = numericColumn(trace, channel);
  const window = parseWindow(report.constraint);
  const bounds = parseBounds(report.constraint).filter((b) => b.channel === channel);

  const frame = DEFAULT_FRAME;
  const area = plotArea(frame);
  const xScale = linearScale(extent(times), [area.x0, area.x1]);
  const yValues = [...values, ...bounds.map((b) => b.value)];
  const yScale = linearScale(pad(extent(yValues)), [area.y1, area.y0]);

  const parts: string[] = [];
  if (window) {
    const last = times.length - 1;
    const t0 = times[Math.min(Math.max(Math.round(window.start), 0), last)]!;
    const t1 = times[Math.min(Math.max(Math.round(window.end), 0), last)]!;
    parts.push(
      el('rect', {
        fill: '#f2ecdc',
        height: px(area.y1 - area.y0),
        width: px(xScale(t1) - xScale(t0)),
        x: px(xScale(t0)),
        y: px(area.y0),
      }),
    );
  }
  for (const bound of bounds) {
    const y = yScale(bound.value);
    parts.push(
      el('line', {
        stroke: '#c0392b',
        'stroke-dasharray': '6 4',
        'stroke-width': 1.2,
        x1: px(area.x0),
        x2: px(area.x1),
        y1: px(y),
        y2: px(y),
      }),
      el(
        'text',
        {
          fill: '#c0392b',
          'font-family': 'monospace',
          'font-size': 11,
          'text-anchor': 'end',
          x: px(area.x1 - 4),
          y: px(y - 5),
        },
        `${bound.lower ? '>' : '<'} ${bound.value}`,
      ),
    );
  }
  parts.push(
    el('polyline', {
      ...PATH_STYLE,
      points: polylinePoints(times.map(xScale), values.map(yScale)),
    }),
  );
  parts.push(
    axes(frame, xScale, yScale, {
      title: `${subtask}: ${channel} vs time`,
      x: 't [s]',
      y: channel,
    }),
  );
  return document(frame, parts.join(''));
}

/** Optimizer objective value per iteration for one subtask. */
export function objectiveHistory(runDir: string, subtask: string): string {
  const report = loadReport(runDir, subtask);
  const history = report.objective_history;
  if (!Array.isArray(history) || history.length === 0) {
    throw new ArtifactError(`${subtask}: report has no objective history to plot`);
  }
  const iterations = history.map((_, i) => i);
  const frame = DEFAULT_FRAME;
  const area = plotArea(frame);
  const xScale = linearScale([0, Math.max(iterations.length - 1, 1)], [area.x0, area.x1]);
  const yScale = linearScale(pad(extent(history)), [area.y1, area.y0]);

  const parts: string[] = [];
  parts.push(
    el('polyline', {
      ...PATH_STYLE,
      points: polylinePoints(iterations.map(xScale), history.map(yScale)),
    }),
  );
  parts.push(
    axes(frame, xScale, yScale, {
      title: `${subtask}: objective (${report.status}, rho=${report.robustness_exact.toPrecision(3)})`,
      x: 'iteration',
      y: 'objective',
    }),
  );
  return document(frame, parts.join(''));
}

/** Executed subtask index over time: the behavior-tree timeline. */
export function btTimeline(runDir: string): string {
  const execution = loadExecution(runDir);
  const evaluation = loadJson(join(runDir, 'run', 'evaluation.json'), EVALUATION_SCHEMA);
  const times = numericColumn(execution, 'time');
  const epsilonRaw = stringColumn(execution, 'epsilon');

  // Contiguous runs of ticks with a defined subtask index.  Empty cells
  // mark re-planning ticks and break the staircase.
  const segments: { t: number[]; e: number[] }[] = [];
  let current: { t: number[]; e: number[] } | null = null;
  const gaps: [number, number][] = [];
  let gapStart: number | null = null;
  for (let i = 0; i < times.length; i += 1) {
    const cell = epsilonRaw[i]!;
    if (cell === '') {
      if (gapStart === null) {
        gapStart = times[i]!;
      }
      current = null;
      continue;
    }
    if (gapStart !== null) {
      gaps.push([gapStart, times[i]!]);
      gapStart = null;
    }
    if (current === null) {
      current = { t: [], e: [] };
      segments.push(current);
    }
    current.t.push(times[i]!);
    current.e.push(Number(cell));
  }
  const allEps = segments.flatMap((s) => s.e);
  if (allEps.length === 0) {
    throw new ArtifactError(`${runDir}: execution log has no subtask indices`);
  }

  const frame = DEFAULT_FRAME;
  const area = plotArea(frame);
  const xScale = linearScale(extent(times), [area.x0, area.x1]);
  const yScale = linearScale([0, Math.max(...allEps) + 1], [area.y1, area.y0]);

  const parts: string[] = [];
  for (const [g0, g1] of gaps) {
    parts.push(
      el('rect', {
        fill: '#fdebd0',
        height: px(area.y1 - area.y0),
        width: px(xScale(g1) - xScale(g0)),
        x: px(xScale(g0)),
        y: px(area.y0),
      }),
    );
  }
  for (const segment of segments) {
    // step-after staircase: hold each index until the next change
    const sx: number[] = [];
    const sy: number[] = [];
    for (let i = 0; i < segment.t.length; i += 1) {
      if (i > 0 && segment.e[i] !== segment.e[i - 1]) {
        sx.push(segment.t[i]!);
        sy.push(segment.e[i - 1]!);
      }
      sx.push(segment.t[i]!);
      sy.push(segment.e[i]!);
    }
    parts.push(
      el('polyline', {
        ...PATH_STYLE,
        points: polylinePoints(sx.map(xScale), sy.map(yScale)),
      }),
    );
  }
  parts.push(
    axes(frame, xScale, yScale, {
      title: `task timeline (outcome: ${String(evaluation['outcome'])})`,
      x: 't [s]',
      y: 'active subtask index',
    }),
  );
  return document(frame, parts.join(''));
}

function marker(x: number, y: number, kind: 'start' | 'goal'): string {
  const shape =
    kind === 'start'
      ? el('circle', { cx: px(x), cy: px(y), fill: '#1f6fb2', r: 4 })
      : el('rect', {
          fill: 'none',
          height: 8,
          stroke: '#27851f',
          'stroke-width': 1.6,
          width: 8,
          x: px(x - 4),
          y: px(y - 4),
        });
  const label = el(
    'text',
    {
      fill: '#444',
      'font-family': 'monospace',
      'font-size': 10,
      x: px(x + 7),
      y: px(y - 6),
    },
    kind,
  );
  return shape + label;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const value of values) {
    if (value < lo) lo = value;
    if (value > hi) hi = value;
  }
  return [lo, hi];
}

function pad(domain: [number, number]): [number, number] {
  const span = domain[1] - domain[0] || 1;
  return [domain[0] - 0.08 * span, domain[1] + 0.08 * span];
}

function equalAspectScales(
  xDomain: [number, number],
  yDomain: [number, number],
  xRange: [number, number],
  yRange: [number, number],
): [ReturnType<typeof linearScale>, ReturnType<typeof linearScale>] {
  const padded = (d: [number, number]): [number, number] => {
    const span = d[1] - d[0] || 1;
    return [d[0] - 0.08 * span, d[1] + 0.08 * span];
  };
  let [x0, x1] = padded(xDomain);
  let [y0, y1] = padded(yDomain);
  const pxPerX = Math.abs(xRange[1] - xRange[0]) / (x1 - x0);
  const pxPerY = Math.abs(yRange[1] - yRange[0]) / (y1 - y0);
  // widen the looser axis so one meter maps to the same pixel length on both
  if (pxPerX > pxPerY) {
    const extra = (Math.abs(xRange[1] - xRange[0]) / pxPerY - (x1 - x0)) / 2;
    x0 -= extra;
    x1 += extra;
  } else {
    const extra = (Math.abs(yRange[1] - yRange[0]) / pxPerX - (y1 - y0)) / 2;
    y0 -= extra;
    y1 += extra;
  }
  return [linearScale([x0, x1], xRange), linearScale([y0, y1], yRange)];
}
