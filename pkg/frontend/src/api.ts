/**
 * Typed client for the evaluation service.
 *
 * Every call keeps the raw response text alongside the parsed body: the
 * console's displayed numbers are sliced verbatim from `text`, never
 * re-formatted, so what the auditor reads is what the service computed.
 */

export interface ApiResponse<T = any> {
  status: number;
  text: string;
  body: T;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: any) => Promise<{
  status: number;
  text(): Promise<string>;
}>;

export class ApiClient {
  constructor(private baseUrl: string, private fetchFn: FetchLike = fetch) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<ApiResponse<T>> {
    const init: any = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const text = await resp.text();
    let parsed: any = null;
    try {
      parsed = JSON.parse(text);
    } catch {
      parsed = null;
    }
    if (resp.status >= 400) {
      throw new ApiError(resp.status, parsed?.code ?? "error",
                         parsed?.message ?? `HTTP ${resp.status}`);
    }
    return { status: resp.status, text, body: parsed as T };
  }

  listDatasets() {
    return this.call<any[]>("GET", "/datasets");
  }

  generateDataset(kind: string, config: Record<string, unknown>, idempotencyKey?: string) {
    return this.call<{ dataset_id: string; checksum: string }>(
      "POST", "/datasets/generate",
      { kind, config, idempotency_key: idempotencyKey });
  }

  fitModel(datasetId: string, kind: string, hyperparams: Record<string, unknown>, seed: number) {
    return this.call<{ job_id: string }>("POST", "/models/fit",
      { dataset_id: datasetId, kind, hyperparams, seed });
  }

  jobStatus(jobId: string) {
    return this.call<{ status: string; model_id?: string; surrogate_id?: string; error?: string }>(
      "GET", `/jobs/${jobId}`);
  }

  async waitForJob(jobId: string, pollMs = 250, timeoutMs = 600_000): Promise<any> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const { body } = await this.jobStatus(jobId);
      if (body.status === "done") return body;
      if (body.status === "error") throw new ApiError(500, "job_failed", body.error ?? "job failed");
      if (Date.now() > deadline) throw new ApiError(408, "job_timeout", `job ${jobId} timed out`);
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  distill(modelId: string, opts: { dataset_id?: string; arm?: string; K?: number;
                                   seed?: number; hyperparams?: Record<string, unknown> } = {}) {
    return this.call<{ job_id: string }>("POST", `/models/${modelId}/distill`, opts);
  }

  surrogate(surrogateId: string) {
    return this.call<any>("GET", `/surrogates/${surrogateId}`);
  }

  adjust(surrogateId: string, adjustments: unknown[]) {
    return this.call<{ score_id: string }>("POST", "/adjust",
      { model_id: surrogateId, adjustments });
  }

  evaluate(datasetId: string, policy: unknown, valueModel?: unknown) {
    return this.call<any>("POST", "/evaluate",
      { dataset_id: datasetId, policy, value_model: valueModel ?? null });
  }

  manifold(datasetId: string, score: unknown, grid: unknown, valueModel?: unknown) {
    return this.call<any>("POST", "/manifold",
      { dataset_id: datasetId, score, grid, value_model: valueModel ?? null });
  }

  college(config: Record<string, unknown>, resolution: number) {
    return this.call<any>("POST", "/college", { config, resolution });
  }

  interactions(modelId: string, M: number, K: number, seed: number) {
    return this.call<any>("GET",
      `/models/${modelId}/interactions?M=${M}&K=${K}&seed=${seed}`);
  }
}
