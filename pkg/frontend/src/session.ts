/**
 * Shareable session state: everything the console shows is reconstructible
 * from this descriptor plus the service, so an audit session can be exported,
 * attached to a report, and replayed later.
 */

export interface Adjustment {
  target: number | [number, number];
  alpha: number;
  replacement: "zero" | "audit";
}

export interface SessionDescriptor {
  datasetId: string;
  modelId: string;
  surrogateId: string | null;
  thresholds: { 0: number; 1: number };
  adjustments: Adjustment[];
  valueModel: Record<string, number> | null;
  seed: number;
}

export interface HistoryEntry {
  index: number;
  descriptor: SessionDescriptor;
  reportText: string;   // verbatim service response
  label: string;
}

export function cloneDescriptor(d: SessionDescriptor): SessionDescriptor {
  return JSON.parse(JSON.stringify(d));
}

export function descriptorLabel(d: SessionDescriptor): string {
  const adj = d.adjustments
    .map((a) => {
      const t = Array.isArray(a.target) ? `(${a.target[0]},${a.target[1]})` : `${a.target}`;
      return `${t}:${a.alpha}${a.replacement === "audit" ? "a" : "z"}`;
    })
    .join(" ");
  return `t0=${fmt(d.thresholds[0])} t1=${fmt(d.thresholds[1])}${adj ? " | " + adj : ""}`;
}

function fmt(v: number): string {
  return Math.abs(v) >= 100 ? v.toFixed(0) : v.toPrecision(3);
}

export class HistoryTrail {
  private entries: HistoryEntry[] = [];
  private counter = 0;

  push(descriptor: SessionDescriptor, reportText: string): HistoryEntry {
    const entry: HistoryEntry = {
      index: this.counter++,
      descriptor: cloneDescriptor(descriptor),
      reportText,
      label: descriptorLabel(descriptor),
    };
    this.entries.push(entry);
    return entry;
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }

  get(index: number): HistoryEntry | undefined {
    return this.entries.find((e) => e.index === index);
  }
}

/** Downloadable session export: descriptor plus the verbatim latest report. */
export function exportText(descriptor: SessionDescriptor, reportText: string | null): string {
  return JSON.stringify(
    { version: 1, descriptor, report: reportText === null ? null : JSON.parse(reportText),
      report_text: reportText },
    null, 2);
}
