/**
 * Audit console: shape inspector, improvement workbench, tradeoff explorer.
 * A thin DOM layer over the testable modules; all numbers come from the
 * evaluation service verbatim.
 */

import { ApiClient } from "./api.js";
import {
  Box,
  collegeScatter,
  densityBars,
  domainOf,
  heatCells,
  linePath,
  manifoldScatter,
} from "./charts.js";
import { SessionDescriptor, exportText } from "./session.js";
import {
  ManifoldPoint,
  MetricCell,
  manifoldPoints,
  shapePanels,
  shareLabel,
} from "./viewmodel.js";
import { Workbench } from "./workbench.js";

const api = new ApiClient("");
const SVG = "http://www.w3.org/2000/svg";

interface AppState {
  descriptor: SessionDescriptor | null;
  workbench: Workbench | null;
  surrogate: any | null;
  grid: { 0: number[]; 1: number[] } | null;
  manifold: ManifoldPoint[] | null;
  lastReportText: string | null;
  collegeData: any | null;
  collegeMetric: "treatment_parity_gap" | "predictive_parity_gap" | "nwo";
}

const state: AppState = {
  descriptor: null,
  workbench: null,
  surrogate: null,
  grid: null,
  manifold: null,
  lastReportText: null,
  collegeData: null,
  collegeMetric: "treatment_parity_gap",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node as SVGElement;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function setStatus(text: string, busy = false): void {
  const strip = byId("status");
  strip.textContent = text;
  strip.className = busy ? "busy" : "";
}

// -- metric strip -------------------------------------------------------------

function renderStrip(cells: MetricCell[]): void {
  const strip = byId("metric-strip");
  strip.replaceChildren();
  for (const cell of cells) {
    const item = el("div", { class: "metric" });
    item.appendChild(el("span", { class: "metric-label" }, cell.label));
    if (cell.badge) {
      item.appendChild(el("span", { class: "badge" }, "undefined"));
    } else {
      item.appendChild(el("span", { class: "metric-value" }, cell.text ?? ""));
    }
    strip.appendChild(item);
  }
}

function renderHistory(): void {
  const wb = state.workbench;
  if (!wb) return;
  const list = byId("history");
  list.replaceChildren();
  for (const entry of [...wb.history.list()].reverse().slice(0, 30)) {
    const li = el("li", {}, `#${entry.index} ${entry.label}`);
    li.addEventListener("click", () => {
      setStatus(`replaying #${entry.index}`, true);
      wb.replay(entry).then(() => setStatus("replayed; reports are deterministic"));
    });
    list.appendChild(li);
  }
}

// -- shape inspector ------------------------------------------------------------

function renderInspector(): void {
  const host = byId("inspector");
  host.replaceChildren();
  if (!state.surrogate) {
    host.appendChild(el("p", { class: "hint" },
      "Distill a model to inspect its shapes."));
    return;
  }
  const fid = state.surrogate.fidelity;
  byId("fidelity").textContent =
    `surrogate fidelity: ${(fid * 100).toFixed(1)}% of teacher variance`;
  const panels = shapePanels(state.surrogate);
  const box: Box = { width: 220, height: 140, pad: 18 };
  for (const panel of panels.slice(0, 12)) {
    const card = el("div", { class: "panel" });
    card.appendChild(el("h4", {}, panel.title));
    card.appendChild(el("div", { class: "share" }, shareLabel(panel.varianceShare)));
    const svg = svgEl("svg", {
      viewBox: `0 0 ${box.width} ${box.height}`,
      width: box.width, height: box.height,
    });
    if (panel.kind === "curve") {
      const xd = domainOf(panel.knots);
      const yd = domainOf([...(panel.studentValues ?? []), ...(panel.auditValues ?? []), 0]);
      if (panel.densityEdges && panel.densityCounts) {
        for (const bar of densityBars(panel.densityEdges, panel.densityCounts, box, xd)) {
          svg.appendChild(svgEl("rect", { ...bar, class: "density" }));
        }
      }
      svg.appendChild(svgEl("path", {
        d: linePath(panel.knots, panel.studentValues ?? [], box, xd, yd),
        class: "curve distilled", fill: "none",
      }));
      svg.appendChild(svgEl("path", {
        d: linePath(panel.knots, panel.auditValues ?? [], box, xd, yd),
        class: "curve audit", fill: "none",
      }));
    } else {
      const half: Box = { width: box.width / 2 - 2, height: box.height, pad: 10 };
      const left = svgEl("g", {});
      for (const cell of heatCells(panel.studentGrid ?? [], half)) {
        left.appendChild(svgEl("rect", { ...cell }));
      }
      const right = svgEl("g", { transform: `translate(${box.width / 2 + 2},0)` });
      for (const cell of heatCells(panel.auditGrid ?? [], half)) {
        right.appendChild(svgEl("rect", { ...cell }));
      }
      svg.appendChild(left);
      svg.appendChild(right);
      svg.appendChild(svgEl("text", { x: box.width / 4, y: 10, class: "tag" }))
        .textContent = "distilled";
      svg.appendChild(svgEl("text", { x: (3 * box.width) / 4, y: 10, class: "tag" }))
        .textContent = "audit";
    }
    card.appendChild(svg);
    host.appendChild(card);
  }
}

// -- workbench controls -----------------------------------------------------------

function thresholdFromSlider(group: 0 | 1, position: number): number {
  const grid = state.grid;
  if (!grid) return 0;
  const values = grid[group];
  const idx = Math.max(0, Math.min(values.length - 1, position));
  return values[idx];
}

function renderWorkbenchControls(): void {
  const host = byId("controls");
  host.replaceChildren();
  const wb = state.workbench;
  if (!wb || !state.grid) {
    host.appendChild(el("p", { class: "hint" }, "Load a session to begin."));
    return;
  }
  for (const group of [0, 1] as const) {
    const row = el("div", { class: "control-row" });
    row.appendChild(el("label", {}, `group ${group} threshold`));
    const slider = el("input", {
      type: "range", min: "0", max: String(state.grid[group].length - 1),
      value: String(Math.floor(state.grid[group].length / 2)),
    }) as HTMLInputElement;
    const readout = el("span", { class: "readout" });
    readout.textContent = String(wb.descriptor.thresholds[group].toPrecision(4));
    slider.addEventListener("input", () => {
      const value = thresholdFromSlider(group, Number(slider.value));
      readout.textContent = String(value.toPrecision(4));
      setStatus("evaluating...", true);
      wb.setThreshold(group, value);
    });
    row.appendChild(slider);
    row.appendChild(readout);
    host.appendChild(row);
  }
  if (state.surrogate) {
    for (const s of state.surrogate.comparison.shapes1) {
      host.appendChild(shapeSliderRow(s.name, s.feature));
    }
    for (const s of state.surrogate.comparison.shapes2) {
      host.appendChild(shapeSliderRow(`${s.names[0]} x ${s.names[1]}`,
                                      [s.features[0], s.features[1]]));
    }
  }
}

function shapeSliderRow(label: string, target: number | [number, number]): HTMLElement {
  const wb = state.workbench as Workbench;
  const row = el("div", { class: "control-row" });
  row.appendChild(el("label", {}, `remove ${label}`));
  const slider = el("input", {
    type: "range", min: "0", max: "100", value: "0",
  }) as HTMLInputElement;
  const toggle = el("select", {});
  toggle.appendChild(el("option", { value: "zero" }, "replace with zero"));
  toggle.appendChild(el("option", { value: "audit" }, "replace with audit shape"));
  const readout = el("span", { class: "readout" }, "0%");
  const fire = () => {
    const alpha = Number(slider.value) / 100;
    readout.textContent = `${slider.value}%`;
    setStatus("evaluating...", true);
    wb.setAdjustment(target, alpha,
                     (toggle as HTMLSelectElement).value as "zero" | "audit");
  };
  slider.addEventListener("input", fire);
  toggle.addEventListener("change", fire);
  row.appendChild(slider);
  row.appendChild(toggle);
  row.appendChild(readout);
  return row;
}

// -- tradeoff explorer -------------------------------------------------------------

async function refreshManifold(): Promise<void> {
  const wb = state.workbench;
  const d = state.descriptor;
  if (!wb || !d) return;
  setStatus("sweeping thresholds...", true);
  const score = d.surrogateId
    ? await adjustedScoreSpec()
    : { kind: "ite", model_id: d.modelId };
  const resp = await api.manifold(d.datasetId, score, { resolution: 21 }, d.valueModel);
  state.manifold = manifoldPoints(resp.body);
  const t0 = [...new Set(resp.body.entries.map((e: any) => e.threshold_0))] as number[];
  const t1 = [...new Set(resp.body.entries.map((e: any) => e.threshold_1))] as number[];
  t0.sort((a, b) => a - b);
  t1.sort((a, b) => a - b);
  state.grid = { 0: t0, 1: t1 };
  renderWorkbenchControls();
  renderExplorer();
  setStatus("ready");
}

async function adjustedScoreSpec(): Promise<Record<string, unknown>> {
  const d = state.descriptor as SessionDescriptor;
  const resp = await api.adjust(d.surrogateId as string, d.adjustments);
  return { kind: "adjusted", score_id: resp.body.score_id };
}

function renderExplorer(): void {
  const host = byId("explorer");
  host.replaceChildren();
  if (state.collegeData) {
    renderCollegeExplorer(host);
    return;
  }
  if (!state.manifold) {
    host.appendChild(el("p", { class: "hint" }, "Sweep a manifold to explore tradeoffs."));
    return;
  }
  const box: Box = { width: 420, height: 300, pad: 30 };
  const svg = svgEl("svg", {
    viewBox: `0 0 ${box.width} ${box.height}`, width: box.width, height: box.height,
  });
  svg.appendChild(axisLabel(box, "treatment fairness", "outcome fairness"));
  const pts = manifoldScatter(state.manifold, box);
  for (const p of pts) {
    const dot = svgEl("circle", { cx: p.cx, cy: p.cy, r: p.r, fill: p.fill,
                                  class: "dot" });
    dot.addEventListener("click", () => {
      const entry = (state.manifold as ManifoldPoint[])[p.index];
      const wb = state.workbench;
      if (!wb) return;
      wb.descriptor.thresholds[0] = entry.threshold0;
      wb.descriptor.thresholds[1] = entry.threshold1;
      renderWorkbenchControls();
      setStatus("evaluating selected policy...", true);
      wb.schedule("explorer");
    });
    svg.appendChild(dot);
  }
  host.appendChild(svg);
  host.appendChild(el("p", { class: "hint" },
    "x: TF, y: OF; size: economic value; blue/red: which group is treated more. "
    + "Click a point to load its thresholds."));
}

function renderCollegeExplorer(host: HTMLElement): void {
  const data = state.collegeData;
  const box: Box = { width: 420, height: 300, pad: 30 };
  const svg = svgEl("svg", {
    viewBox: `0 0 ${box.width} ${box.height}`, width: box.width, height: box.height,
  });
  const metric = state.collegeMetric;
  const values = data.policies.map((p: any) =>
    p[metric] === null ? null : metric === "nwo" ? (p[metric] as number) - 100 : p[metric]);
  const finite = values.filter((v: number | null) => v !== null) as number[];
  const vmax = Math.max(...finite.map((v) => Math.abs(v)), 1e-9);
  const pts = collegeScatter(data.policies, values, vmax, box);
  for (const p of pts) {
    svg.appendChild(svgEl("circle", {
      cx: p.cx, cy: p.cy, r: p.r, fill: p.fill, class: "dot",
    }));
  }
  svg.appendChild(axisLabel(box, "graduates", "minority admits"));
  host.appendChild(svg);
  const picker = el("select", {});
  for (const m of ["treatment_parity_gap", "predictive_parity_gap", "nwo"]) {
    const opt = el("option", { value: m }, m.replace(/_/g, " "));
    if (m === metric) opt.setAttribute("selected", "selected");
    picker.appendChild(opt);
  }
  picker.addEventListener("change", () => {
    state.collegeMetric = (picker as HTMLSelectElement).value as AppState["collegeMetric"];
    renderExplorer();
  });
  host.appendChild(picker);
  host.appendChild(el("p", { class: "hint" },
    "Feasible admission policies shaded by the selected metric "
    + "(white = fair, red/blue = direction of unfairness); black = Pareto frontier."));
}

function axisLabel(box: Box, x: string, y: string): SVGElement {
  const g = svgEl("g", { class: "axis" });
  const xl = svgEl("text", { x: box.width / 2, y: box.height - 4 });
  xl.textContent = x;
  const yl = svgEl("text", {
    x: 10, y: box.height / 2, transform: `rotate(-90 10 ${box.height / 2})`,
  });
  yl.textContent = y;
  g.appendChild(xl);
  g.appendChild(yl);
  return g;
}

// -- session bootstrap ---------------------------------------------------------------

async function loadDemoSession(): Promise<void> {
  setStatus("generating dataset (50k rows)...", true);
  const n = 50_000;
  const seed = 7;
  const ds = await api.generateDataset("synthetic", { n, c: 0.5, seed },
                                       `demo-ds-${n}-${seed}`);
  setStatus("fitting the blackbox stand-in...", true);
  const fit = await api.fitModel(ds.body.dataset_id, "mlp", { epochs: 30 }, seed);
  const fitJob = await api.waitForJob(fit.body.job_id);
  setStatus("distilling the treated arm...", true);
  const dist = await api.distill(fitJob.model_id, {
    dataset_id: ds.body.dataset_id, arm: "treated", K: 5, seed,
    hyperparams: { epochs: 60 },
  });
  const distJob = await api.waitForJob(dist.body.job_id);
  const surrogate = await api.surrogate(distJob.surrogate_id);
  await startSession({
    datasetId: ds.body.dataset_id,
    modelId: fitJob.model_id,
    surrogateId: distJob.surrogate_id,
    thresholds: { 0: 0, 1: 0 },
    adjustments: [],
    valueModel: null,
    seed,
  }, surrogate.body);
}

async function startSession(descriptor: SessionDescriptor, surrogate: any): Promise<void> {
  state.descriptor = descriptor;
  state.surrogate = surrogate;
  state.collegeData = null;
  state.workbench = new Workbench(api, descriptor, (update) => {
    state.lastReportText = update.reportText;
    renderStrip(update.cells);
    renderHistory();
    setStatus("ready");
  }, (err) => setStatus(`error: ${String(err)}`));
  await refreshManifold();
  const mid = Math.floor((state.grid?.[0].length ?? 1) / 2);
  descriptor.thresholds[0] = state.grid ? state.grid[0][mid] : 0;
  descriptor.thresholds[1] = state.grid ? state.grid[1][mid] : 0;
  renderInspector();
  renderWorkbenchControls();
  state.workbench.schedule("init");
}

async function loadCollegeMode(): Promise<void> {
  setStatus("building the admission tradeoff surface...", true);
  const resp = await api.college({ n: 50_000, seed: 17 }, 41);
  state.collegeData = resp.body;
  renderExplorer();
  setStatus("ready");
}

function wireTopBar(): void {
  byId("btn-demo").addEventListener("click", () => {
    loadDemoSession().catch((err) => setStatus(`error: ${String(err)}`));
  });
  byId("btn-college").addEventListener("click", () => {
    loadCollegeMode().catch((err) => setStatus(`error: ${String(err)}`));
  });
  byId("btn-manifold").addEventListener("click", () => {
    state.collegeData = null;
    refreshManifold().catch((err) => setStatus(`error: ${String(err)}`));
  });
  byId("btn-export").addEventListener("click", () => {
    if (!state.descriptor) return;
    const text = exportText(state.descriptor, state.lastReportText);
    const blob = new Blob([text], { type: "application/json" });
    const a = el("a", {
      href: URL.createObjectURL(blob), download: "audit-session.json",
    });
    a.click();
  });
}

if (typeof document !== "undefined" && document.getElementById("metric-strip")) {
  wireTopBar();
  renderStrip([
    { key: "tf", label: "treatment fairness", text: null, badge: "undefined" },
    { key: "of", label: "outcome fairness", text: null, badge: "undefined" },
    { key: "nwo", label: "no-worse-off", text: null, badge: "undefined" },
    { key: "econ", label: "economic value", text: null, badge: "undefined" },
  ]);
  setStatus("load the demo session to begin");
}
