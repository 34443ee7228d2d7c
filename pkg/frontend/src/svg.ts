/**
 * Minimal deterministic SVG construction.
 *
 * Nothing here depends on fonts, the clock, randomness, or platform
 * rendering: every figure is a pure string function of its inputs, so
 * rendering the same run directory twice yields byte-identical files.
 */

/** Maps a data interval onto a pixel interval. */
export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

/** Rounds pixel coordinates to 1/100 px so output strings are stable. */
export function px(value: number): string {
  return String(Math.round(value * 100) / 100);
}

/** Builds a linear scale; a degenerate domain is padded to unit width. */
export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const [r0, r1] = range;
  const scale = ((value: number) => r0 + ((value - d0) / (d1 - d0)) * (r1 - r0)) as Scale;
  scale.domain = [d0, d1];
  scale.range = [r0, r1];
  return scale;
}

/** Returns ~`count` round tick values covering the scale's domain. */
export function ticks(scale: Scale, count = 5): number[] {
  const [d0, d1] = scale.domain;
  const span = d1 - d0;
  const rawStep = span / Math.max(count, 1);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3]!;
  const start = Math.ceil(d0 / step) * step;
  const values: number[] = [];
  for (let v = start; v <= d1 + step * 1e-9; v += step) {
    values.push(Math.round(v / step) * step);
  }
  return values;
}

/** Formats a tick label without float noise. */
export function tickLabel(value: number): string {
  const rounded = Math.round(value * 1e6) / 1e6;
  return String(rounded);
}

/** Renders one SVG element with sorted attributes. */
export function el(
  tag: string,
  attrs: Record<string, string | number>,
  body = '',
): string {
  const parts = Object.keys(attrs)
    .sort()
    .map((key) => ` ${key}="${String(attrs[key])}"`)
    .join('');
  return body === '' ? `<${tag}${parts}/>` : `<${tag}${parts}>${body}</${tag}>`;
}

/** Joins (x, y) pairs into a polyline/polygon `points` attribute. */
export function polylinePoints(xs: number[], ys: number[]): string {
  const pairs: string[] = [];
  for (let i = 0; i < xs.length; i += 1) {
    pairs.push(`${px(xs[i]!)},${px(ys[i]!)}`);
  }
  return pairs.join(' ');
}

/** Geometry shared by all figures. */
export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 640,
  height: 420,
  margin: { top: 36, right: 20, bottom: 44, left: 56 },
};

/** Inner plotting area of a frame. */
export function plotArea(frame: Frame): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: frame.margin.left,
    x1: frame.width - frame.margin.right,
    y0: frame.margin.top,
    y1: frame.height - frame.margin.bottom,
  };
}

/** Draws axis lines, ticks, labels, and the figure title. */
export function axes(
  frame: Frame,
  xScale: Scale,
  yScale: Scale,
  labels: { title: string; x: string; y: string },
): string {
  const area = plotArea(frame);
  const parts: string[] = [];
  parts.push(
    el('line', {
      stroke: '#444',
      'stroke-width': 1,
      x1: px(area.x0),
      x2: px(area.x1),
      y1: px(area.y1),
      y2: px(area.y1),
    }),
    el('line', {
      stroke: '#444',
      'stroke-width': 1,
      x1: px(area.x0),
      x2: px(area.x0),
      y1: px(area.y0),
      y2: px(area.y1),
    }),
  );
  for (const value of ticks(xScale)) {
    const x = xScale(value);
    parts.push(
      el('line', {
        stroke: '#444',
        x1: px(x),
        x2: px(x),
        y1: px(area.y1),
        y2: px(area.y1 + 5),
      }),
      el(
        'text',
        {
          fill: '#444',
          'font-family': 'monospace',
          'font-size': 11,
          'text-anchor': 'middle',
          x: px(x),
          y: px(area.y1 + 18),
        },
        tickLabel(value),
      ),
    );
  }
  for (const value of ticks(yScale)) {
    const y = yScale(value);
    parts.push(
      el('line', {
        stroke: '#444',
        x1: px(area.x0 - 5),
        x2: px(area.x0),
        y1: px(y),
        y2: px(y),
      }),
      el(
        'text',
        {
          fill: '#444',
          'font-family': 'monospace',
          'font-size': 11,
          'text-anchor': 'end',
          x: px(area.x0 - 8),
          y: px(y + 4),
        },
        tickLabel(value),
      ),
    );
  }
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
      labels.title,
    ),
    el(
      'text',
      {
        fill: '#444',
        'font-family': 'monospace',
        'font-size': 12,
        'text-anchor': 'middle',
        x: px((area.x0 + area.x1) / 2),
        y: px(frame.height - 8),
      },
      labels.x,
    ),
    el(
      'text',
      {
        fill: '#444',
        'font-family': 'monospace',
        'font-size': 12,
        'text-anchor': 'middle',
        transform: `rotate(-90 14 ${px((area.y0 + area.y1) / 2)})`,
        x: 14,
        y: px((area.y0 + area.y1) / 2),
      },
      labels.y,
    ),
  );
  return parts.join('');
}

/** Wraps figure content in a complete SVG document. */
export function document(frame: Frame, body: string): string {
  const attrs = {
    height: frame.height,
    viewBox: `0 0 ${frame.width} ${frame.height}`,
    width: frame.width,
    xmlns: 'http://www.w3.org/2000/svg',
  };
  const background = el('rect', {
    fill: '#ffffff',
    height: frame.height,
    width: frame.width,
    x: 0,
    y: 0,
  });
  return `${el('svg', attrs, background + body)}\n`;
}
