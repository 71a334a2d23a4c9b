/**
 * Chart geometry as pure data: SVG path strings, rectangle lists, scatter
 * layouts.  The DOM layer turns these into elements; keeping the math here
 * makes it unit-testable without a browser.
 */

export interface Box {
  width: number;
  height: number;
  pad: number;
}

export interface Domain {
  min: number;
  max: number;
}

export function domainOf(values: number[], padFrac = 0.05): Domain {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  if (!Number.isFinite(min)) return { min: 0, max: 1 };
  if (min === max) return { min: min - 1, max: max + 1 };
  const pad = (max - min) * padFrac;
  return { min: min - pad, max: max + pad };
}

export function scale(v: number, d: Domain, lo: number, hi: number): number {
  return lo + ((v - d.min) / (d.max - d.min)) * (hi - lo);
}

export function linePath(xs: number[], ys: number[], box: Box,
                         xd: Domain, yd: Domain): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    const x = scale(xs[i], xd, box.pad, box.width - box.pad);
    const y = scale(ys[i], yd, box.height - box.pad, box.pad); // y grows downward
    parts.push(`${i === 0 ? "M" : "L"}${round2(x)},${round2(y)}`);
  }
  return parts.join(" ");
}

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** Density band: bar heights proportional to counts, anchored to the floor. */
export function densityBars(edges: number[], counts: number[], box: Box,
                            xd: Domain, maxBandFrac = 0.25): Rect[] {
  const top = Math.max(...counts, 1);
  const bars: Rect[] = [];
  for (let i = 0; i < counts.length; i++) {
    const x0 = scale(edges[i], xd, box.pad, box.width - box.pad);
    const x1 = scale(edges[i + 1], xd, box.pad, box.width - box.pad);
    const h = (counts[i] / top) * maxBandFrac * (box.height - 2 * box.pad);
    bars.push({
      x: round2(x0),
      y: round2(box.height - box.pad - h),
      width: round2(Math.max(x1 - x0, 0.5)),
      height: round2(h),
    });
  }
  return bars;
}

/** Diverging blue-white-red for signed values, saturated at |v| = vmax. */
export function divergingColor(v: number, vmax: number): string {
  if (!Number.isFinite(v) || vmax <= 0) return "rgb(255,255,255)";
  const t = Math.max(-1, Math.min(1, v / vmax));
  const other = Math.round(255 * (1 - Math.abs(t)));
  return t >= 0
    ? `rgb(255,${other},${other})`
    : `rgb(${other},${other},255)`;
}

export interface HeatCell extends Rect {
  fill: string;
}

export function heatCells(grid: number[][], box: Box): HeatCell[] {
  const rows = grid.length;
  const cols = grid[0]?.length ?? 0;
  if (rows === 0 || cols === 0) return [];
  let vmax = 0;
  for (const row of grid) for (const v of row) vmax = Math.max(vmax, Math.abs(v));
  const w = (box.width - 2 * box.pad) / cols;
  const h = (box.height - 2 * box.pad) / rows;
  const cells: HeatCell[] = [];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      cells.push({
        x: round2(box.pad + c * w),
        // row 0 = smallest knot at the bottom
        y: round2(box.height - box.pad - (r + 1) * h),
        width: round2(w),
        height: round2(h),
        fill: divergingColor(grid[r][c], vmax),
      });
    }
  }
  return cells;
}

export interface ScatterPoint {
  cx: number;
  cy: number;
  r: number;
  fill: string;
  index: number;
}

/**
 * Tradeoff-explorer layout: x = TF, y = OF, radius encodes economic value,
 * color the group treat-rate skew (rate0 - rate1, blue vs red).
 */
export function manifoldScatter(
  points: Array<{ tf: number | null; of: number | null; econ: number | null;
                  rate0: number; rate1: number }>,
  box: Box,
): ScatterPoint[] {
  const defined = points.filter((p) => p.tf !== null && p.of !== null);
  const econs = defined.map((p) => p.econ ?? 0);
  const econDom = domainOf(econs.length ? econs : [0, 1], 0);
  const out: ScatterPoint[] = [];
  const xd: Domain = { min: 0, max: 100 };
  const yd: Domain = { min: 0, max: 100 };
  points.forEach((p, index) => {
    if (p.tf === null || p.of === null) return;
    const rel = econDom.max > econDom.min
      ? (Number(p.econ ?? econDom.min) - econDom.min) / (econDom.max - econDom.min)
      : 0.5;
    out.push({
      cx: round2(scale(p.tf, xd, box.pad, box.width - box.pad)),
      cy: round2(scale(p.of, yd, box.height - box.pad, box.pad)),
      r: round2(2 + 4 * rel),
      fill: divergingColor(p.rate0 - p.rate1, 0.5),
      index,
    });
  });
  return out;
}

/** College mode: x = graduates, y = minority admits, shaded by one metric. */
export function collegeScatter(
  policies: Array<{ graduates: number; minority_admits: number;
                    on_frontier: boolean }>,
  metricValues: Array<number | null>,
  vmax: number,
  box: Box,
): ScatterPoint[] {
  const xd = domainOf(policies.map((p) => p.graduates));
  const yd = domainOf(policies.map((p) => p.minority_admits));
  return policies.map((p, index) => ({
    cx: round2(scale(p.graduates, xd, box.pad, box.width - box.pad)),
    cy: round2(scale(p.minority_admits, yd, box.height - box.pad, box.pad)),
    r: p.on_frontier ? 4 : 2.5,
    fill: p.on_frontier
      ? "rgb(0,0,0)"
      : metricValues[index] === null
        ? "rgb(230,230,230)"
        : divergingColor(metricValues[index] as number, vmax),
    index,
  }));
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
