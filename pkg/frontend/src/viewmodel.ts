/**
 * View-model builders.  The console computes no metric of its own: every
 * number in the metric strip is the verbatim token from a service response,
 * and a missing/undefined metric becomes an explicit badge, never 0 or 100.
 */

import { rawToken, tokenNumber } from "./rawjson.js";

export interface MetricCell {
  key: string;
  label: string;
  /** Verbatim characters from the service response, or null when undefined. */
  text: string | null;
  badge: "undefined" | null;
}

const STRIP: Array<[string, string]> = [
  ["tf", "treatment fairness"],
  ["of", "outcome fairness"],
  ["nwo", "no-worse-off"],
];

export function metricStrip(reportText: string): MetricCell[] {
  const cells: MetricCell[] = STRIP.map(([key, label]) => {
    const token = rawToken(reportText, key);
    const missing = token === null || token === "null";
    return { key, label, text: missing ? null : token, badge: missing ? "undefined" : null };
  });

  const mean = rawToken(reportText, "econ_mean");
  if (mean === null || mean === "null") {
    cells.push({ key: "econ", label: "economic value", text: null, badge: "undefined" });
  } else {
    const ci = rawToken(reportText, "econ_ci95");
    cells.push({
      key: "econ", label: "economic value",
      text: ci && ci !== "null" ? `${mean} (95% CI ${ci})` : mean,
      badge: null,
    });
  }
  return cells;
}

export interface ShapePanel {
  title: string;
  kind: "curve" | "heatmap";
  knots: number[];
  studentValues?: number[];
  auditValues?: number[];
  knotsJ?: number[];
  studentGrid?: number[][];
  auditGrid?: number[][];
  densityEdges?: number[];
  densityCounts?: number[];
  varianceShare: number | null;
}

/** Panels for the shape inspector from a /surrogates/{id} response body. */
export function shapePanels(surrogate: any): ShapePanel[] {
  const comparison = surrogate.comparison;
  const shares1 = surrogate.variance_shares?.shapes1 ?? {};
  const shares2 = surrogate.variance_shares?.shapes2 ?? {};
  const density = new Map<number, any>(
    (comparison.density ?? []).map((h: any) => [h.feature, h]));
  const panels: ShapePanel[] = [];
  for (const s of comparison.shapes1) {
    const h = density.get(s.feature);
    panels.push({
      title: s.name,
      kind: "curve",
      knots: s.knots,
      studentValues: s.student_values,
      auditValues: s.audit_values,
      densityEdges: h?.edges,
      densityCounts: h?.counts,
      varianceShare: shares1[String(s.feature)] ?? null,
    });
  }
  for (const s of comparison.shapes2) {
    panels.push({
      title: `${s.names[0]} x ${s.names[1]}`,
      kind: "heatmap",
      knots: s.knots_i,
      knotsJ: s.knots_j,
      studentGrid: s.student_grid,
      auditGrid: s.audit_grid,
      varianceShare: shares2[`${s.features[0]},${s.features[1]}`] ?? null,
    });
  }
  // largest variance share first so the inspector leads with what matters
  panels.sort((a, b) => (b.varianceShare ?? 0) - (a.varianceShare ?? 0));
  return panels;
}

export function shareLabel(share: number | null): string {
  if (share === null) return "";
  return `${(share * 100).toFixed(1)}% of variance`;
}

export interface ManifoldPoint {
  tf: number | null;
  of: number | null;
  econ: number | null;
  threshold0: number;
  threshold1: number;
  rate0: number;
  rate1: number;
  flags: string[];
}

export function manifoldPoints(manifold: any): ManifoldPoint[] {
  return manifold.entries.map((e: any) => ({
    tf: e.tf ?? null,
    of: e.of ?? null,
    econ: e.econ_mean ?? null,
    threshold0: e.threshold_0,
    threshold1: e.threshold_1,
    rate0: e.treat_rate_0,
    rate1: e.treat_rate_1,
    flags: e.flags ?? [],
  }));
}

export { tokenNumber };
