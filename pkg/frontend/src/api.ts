/** Typed client for the acquisition host HTTP endpoints. */

export interface SessionSummary {
  id: string;
  state: "recording" | "stopped";
  start_utc: string;
  device_info: string;
  n_samples: number;
  n_annotations: number;
}

export interface AnnotationBody {
  label: string;
  t_start_ms: number;
  t_end_ms: number;
  expected_ph?: number | null;
}

export interface StartSessionBody {
  scenario?: Record<string, unknown>;
  device_info?: string;
  speed?: number;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function check(res: Response): Promise<Response> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep statusText
    }
    throw new ApiError(res.status, detail);
  }
  return res;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  async startSession(body: StartSessionBody): Promise<SessionSummary> {
    const res = await check(
      await this.fetchFn(`${this.baseUrl}/sessions`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
    return res.json();
  }

  async listSessions(): Promise<SessionSummary[]> {
    const res = await check(await this.fetchFn(`${this.baseUrl}/sessions`));
    return res.json();
  }

  async stopSession(id: string): Promise<SessionSummary> {
    const res = await check(
      await this.fetchFn(`${this.baseUrl}/sessions/${id}/stop`, { method: "POST" }),
    );
    return res.json();
  }

  async addAnnotation(id: string, body: AnnotationBody): Promise<AnnotationBody> {
    const res = await check(
      await this.fetchFn(`${this.baseUrl}/sessions/${id}/annotations`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
    return res.json();
  }

  exportUrl(id: string, format: "jsonl" | "csv" = "jsonl"): string {
    return `${this.baseUrl}/sessions/${id}/export?format=${format}`;
  }

  streamUrl(id: string, sinceTMs = -1): string {
    return `${this.baseUrl}/sessions/${id}/stream?since_t_ms=${sinceTMs}`;
  }
}
