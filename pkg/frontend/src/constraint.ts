/**
 * Lightweight extraction of drawable geometry from constraint strings.
 *
 * Reports store the constraint each subtask was optimized against, with
 * all symbols resolved to literals, e.g.
 *
 *   G[0.0,59.0](norm2(y - [0.4,0.25,0.0]) > 0.08)
 *   G[5.0,55.0](vel.z > -0.3)
 *
 * This module does not evaluate the logic; it only pulls out the pieces
 * a plot can show: the temporal window, keep-out / reach spheres, and
 * per-channel bound lines.
 */

/** Inclusive sample window of the outermost temporal operator. */
export interface TimeWindow {
  start: number;
  end: number;
}

/** A spherical region compared against the end-effector position. */
export interface SphereOverlay {
  center: [number, number, number];
  radius: number;
  /** True for `> r` (stay outside), false for `< r` (reach inside). */
  keepOut: boolean;
}

/** A scalar bound on a single trace channel. */
export interface ChannelBound {
  channel: string;
  /** True for `> value` (lower bound), false for `< value` (upper bound). */
  lower: boolean;
  value: number;
}

const NUM = String.raw`-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?`;

/** Returns the window of the first temporal operator, if any. */
export function parseWindow(constraint: string): TimeWindow | null {
  const match = new RegExp(String.raw`[FG]\[(${NUM}),(${NUM})\]`).exec(constraint);
  if (!match) {
    return null;
  }
  return { start: Number(match[1]), end: Number(match[2]) };
}

/** Returns every spherical position comparison in the constraint. */
export function parseSpheres(constraint: string): SphereOverlay[] {
  const pattern = new RegExp(
    String.raw`norm2\(y - \[(${NUM}),(${NUM}),(${NUM})\]\)\s*([<>])\s*(${NUM})`,
    'g',
  );
  const spheres: SphereOverlay[] = [];
  for (const match of constraint.matchAll(pattern)) {
    const radius = Number(match[5]);
    if (radius <= 0) {
      continue; // degenerate, nothing to draw
    }
    spheres.push({
      center: [Number(match[1]), Number(match[2]), Number(match[3])],
      radius,
      keepOut: match[4] === '>',
    });
  }
  return spheres;
}

/** Returns every scalar channel bound in the constraint. */
export function parseBounds(constraint: string): ChannelBound[] {
  const pattern = new RegExp(
    String.raw`\b((?:y|vel|q)\.[wxyz])\s*([<>])\s*(${NUM})`,
    'g',
  );
  const bounds: ChannelBound[] = [];
  for (const match of constraint.matchAll(pattern)) {
    bounds.push({
      channel: match[1]!,
      lower: match[2] === '>',
      value: Number(match[3]),
    });
  }
  return bounds;
}
