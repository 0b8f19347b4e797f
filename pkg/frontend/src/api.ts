// Typed client for the generation service. All dashboard data flows
// through these routes; the UI never touches files directly.

export type CellState = "untrained" | "ready" | "active";

export interface Cell {
  metric: string;
  batch: string;
  state: CellState;
}

export interface Grid {
  metrics: string[];
  batches: string[];
  cells: Cell[];
}

export interface Job {
  id: string;
  metric: string;
  batch: string;
  status: "pending" | "running" | "done" | "failed";
  loss_history: number[];
  stopped_epoch: number;
  error: string | null;
}

export interface RunSummary {
  id: string;
  status: string;
  count: number;
  seed: number;
  logs: string[];
  remap_failures: unknown[];
}

export interface EnvelopeBands {
  min: number[];
  q25: number[];
  median: number[];
  q75: number[];
  max: number[];
}

export interface EnvelopeView {
  run_id: string;
  metric: string;
  count: number;
  real: number[];
  real_log: string;
  real_batch: string;
  envelope: EnvelopeBands;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message = typeof (body as { error?: string }).error === "string"
      ? (body as { error: string }).error
      : `request failed with status ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export class Api {
  constructor(
    readonly base: string = "",
    private readonly fetcher: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private get<T>(path: string): Promise<T> {
    return this.fetcher(this.base + path).then((r) => parse<T>(r));
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.fetcher(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    }).then((r) => parse<T>(r));
  }

  catalog(): Promise<Grid> {
    return this.get("/api/catalog");
  }

  train(metric: string, batch: string, config?: Record<string, number>): Promise<{ job_id: string }> {
    const payload: Record<string, unknown> = { metric, batch };
    if (config) payload.config = config;
    return this.post("/api/train", payload);
  }

  job(id: string): Promise<Job> {
    return this.get(`/api/jobs/${encodeURIComponent(id)}`);
  }

  // Toggles the given cells and returns the authoritative new grid.
  toggleSelection(cells: { metric: string; batch: string }[]): Promise<Grid> {
    return this.post("/api/selection", { cells });
  }

  generate(count: number, seed: number): Promise<{ run_id: string }> {
    return this.post("/api/generate", { count, seed });
  }

  run(id: string): Promise<RunSummary> {
    return this.get(`/api/runs/${encodeURIComponent(id)}`);
  }

  envelope(runId: string, metric: string): Promise<EnvelopeView> {
    return this.get(
      `/api/runs/${encodeURIComponent(runId)}/envelope/${encodeURIComponent(metric)}`,
    );
  }

  runLogs(runId: string): Promise<{ run_id: string; logs: string[] }> {
    return this.get(`/api/runs/${encodeURIComponent(runId)}/logs`);
  }

  logUrl(runId: string, logId: string): string {
    return `${this.base}/api/runs/${encodeURIComponent(runId)}/logs/${encodeURIComponent(logId)}`;
  }
}
