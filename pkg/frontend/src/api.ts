// Typed client for the workbench HTTP API. The UI never computes metric
// values itself: every displayed number comes from `cells`, the
// server-formatted strings, verbatim.

export interface DatasetSummary {
  dataset_id: string;
  name: string;
  n_attributes: number;
  n_rows: number;
  class_labels: string[];
  attributes: { index: number; name: string; kind: "nominal" | "numeric" }[];
}

export interface ExperimentStatus {
  experiment_id: string;
  dataset_id: string;
  state: string;
  done: number;
  total: number;
  failures: number;
  elapsed_s: number;
  eta_s: number | null;
  last_error: string | null;
  output_path: string | null;
}

export interface ResultRow {
  task_index: number;
  attribute_set: number[];
  cells: Record<string, string>;
  values: Record<string, number | null>;
}

export interface ResultsPage {
  experiment_id: string;
  snapshot: number;
  total: number;
  offset: number;
  limit: number;
  columns: string[];
  rows: ResultRow[];
}

export interface AutopilotSuggestion {
  vertical_expense: number;
  horizontal_expense: number;
  generation: string;
  workers: number;
  estimated_tasks: number;
  runtime_class: string;
  notes: string[];
}

export interface LaunchSpec {
  dataset_id: string;
  partition_size?: number;
  put_number?: number;
  learner?: string | Record<string, unknown>;
  privacy_exceptions?: number[][];
  utility_exceptions?: number[][];
  vertical_expense?: number;
  horizontal_expense?: number;
  generation?: string;
  seed?: number;
  folds?: number;
  missing?: string;
  dedupe?: string;
  checkpoint_interval?: number;
  workers?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

async function parse<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({ detail: resp.statusText }));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { detail?: unknown }).detail ?? body);
  }
  return body as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async uploadDataset(
    content: string | Blob,
    opts: { format?: string; name?: string; classColumn?: string } = {},
  ): Promise<DatasetSummary> {
    const params = new URLSearchParams();
    if (opts.format) params.set("format", opts.format);
    if (opts.name) params.set("name", opts.name);
    if (opts.classColumn) params.set("class_column", opts.classColumn);
    const qs = params.toString();
    const resp = await fetch(this.url(`/api/datasets${qs ? "?" + qs : ""}`), {
      method: "POST",
      body: content,
    });
    return parse<DatasetSummary>(resp);
  }

  async listDatasets(): Promise<DatasetSummary[]> {
    return parse(await fetch(this.url("/api/datasets")));
  }

  async autopilot(req: {
    dataset_id: string;
    partition_size?: number;
    put_number?: number;
    learner?: string;
    probe?: boolean;
  }): Promise<AutopilotSuggestion> {
    const resp = await fetch(this.url("/api/autopilot"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return parse(resp);
  }

  async startExperiment(spec: LaunchSpec): Promise<string> {
    const resp = await fetch(this.url("/api/experiments"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
    const doc = await parse<{ experiment_id: string }>(resp);
    return doc.experiment_id;
  }

  async listExperiments(): Promise<ExperimentStatus[]> {
    return parse(await fetch(this.url("/api/experiments")));
  }

  async status(id: string): Promise<ExperimentStatus> {
    return parse(await fetch(this.url(`/api/experiments/${id}/status`)));
  }

  async pause(id: string): Promise<ExperimentStatus> {
    return parse(
      await fetch(this.url(`/api/experiments/${id}/pause`), { method: "POST" }),
    );
  }

  async resume(id: string): Promise<ExperimentStatus> {
    return parse(
      await fetch(this.url(`/api/experiments/${id}/resume`), { method: "POST" }),
    );
  }

  async cancel(id: string): Promise<ExperimentStatus> {
    return parse(
      await fetch(this.url(`/api/experiments/${id}/cancel`), { method: "POST" }),
    );
  }

  async results(id: string, query: string): Promise<ResultsPage> {
    const qs = query ? "?" + query : "";
    return parse(await fetch(this.url(`/api/experiments/${id}/results${qs}`)));
  }
}
