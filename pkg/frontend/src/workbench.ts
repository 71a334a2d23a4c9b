/**
 * Improvement-workbench controller: slider changes become /adjust +
 * /evaluate calls, responses update the metric strip and the history trail.
 * Pure of DOM concerns so the request/replay behavior is unit-testable.
 */

import { ApiClient } from "./api.js";
import { RequestGuard } from "./guard.js";
import {
  Adjustment,
  HistoryEntry,
  HistoryTrail,
  SessionDescriptor,
  cloneDescriptor,
} from "./session.js";
import { MetricCell, metricStrip } from "./viewmodel.js";

export interface StripUpdate {
  cells: MetricCell[];
  reportText: string;
  entry: HistoryEntry;
}

export class Workbench {
  readonly history = new HistoryTrail();
  private guards = new Map<string, RequestGuard>();
  private scoreId: string | null = null;
  private adjustmentsKey = "";

  constructor(
    private api: ApiClient,
    public descriptor: SessionDescriptor,
    private onStrip: (update: StripUpdate) => void,
    private onError: (err: unknown) => void = () => {},
    private debounceMs = 150,
  ) {}

  private guard(control: string): RequestGuard {
    let g = this.guards.get(control);
    if (!g) {
      g = new RequestGuard(this.debounceMs);
      this.guards.set(control, g);
    }
    return g;
  }

  setThreshold(group: 0 | 1, value: number): void {
    this.descriptor.thresholds[group] = value;
    this.schedule(`threshold-${group}`);
  }

  setAdjustment(target: number | [number, number], alpha: number,
                replacement: "zero" | "audit"): void {
    const key = JSON.stringify(target);
    const rest = this.descriptor.adjustments.filter(
      (a) => JSON.stringify(a.target) !== key);
    const next: Adjustment[] = alpha > 0
      ? [...rest, { target, alpha, replacement }]
      : rest;
    next.sort((a, b) => JSON.stringify(a.target).localeCompare(JSON.stringify(b.target)));
    this.descriptor.adjustments = next;
    this.schedule(`shape-${key}`);
  }

  /** Issue the evaluate chain for the CURRENT descriptor, guarded per control. */
  schedule(control: string): void {
    const snapshot = cloneDescriptor(this.descriptor);
    this.guard(control).schedule(
      () => this.evaluateDescriptor(snapshot),
      (update) => this.onStrip(update),
      this.onError,
    );
  }

  /** Re-issue a history entry's exact requests; determinism makes it equal. */
  async replay(entry: HistoryEntry): Promise<StripUpdate> {
    const update = await this.evaluateDescriptor(entry.descriptor);
    this.onStrip(update);
    return update;
  }

  private async evaluateDescriptor(d: SessionDescriptor): Promise<StripUpdate> {
    const policy = {
      kind: "threshold",
      score: await this.scoreSpec(d),
      thresholds: { "0": d.thresholds[0], "1": d.thresholds[1] },
    };
    const resp = await this.api.evaluate(d.datasetId, policy, d.valueModel);
    const entry = this.history.push(d, resp.text);
    return { cells: metricStrip(resp.text), reportText: resp.text, entry };
  }

  /** Score handle for the descriptor; /adjust only when adjustments changed. */
  private async scoreSpec(d: SessionDescriptor): Promise<Record<string, unknown>> {
    if (d.surrogateId === null) {
      return { kind: "ite", model_id: d.modelId };
    }
    const key = JSON.stringify(d.adjustments);
    if (this.scoreId === null || key !== this.adjustmentsKey) {
      const resp = await this.api.adjust(d.surrogateId as string, d.adjustments.map((a) => ({
        target: a.target,
        alpha: a.alpha,
        replacement: a.replacement,
      })));
      this.scoreId = resp.body.score_id;
      this.adjustmentsKey = key;
    }
    return { kind: "adjusted", score_id: this.scoreId };
  }
}
