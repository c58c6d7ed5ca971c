// Typed client for the coding service JSON API. Every number or count
// the UI shows comes out of these responses; nothing is computed
// client-side.

export interface ErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
    this.name = "ServiceError";
  }
}

export interface ContextRow {
  index: number;
  text: string;
  is_focus: boolean;
}

export interface QueueItem {
  done: false;
  item_id: string;
  transcript_id: string;
  focus_index: number;
  matched: string[];
  segment_count: number;
  context: ContextRow[];
  lease_seconds: number;
}

export type NextResult = QueueItem | { done: true };

export interface ItemContext {
  item_id: string;
  transcript_id: string;
  focus_index: number;
  matched: string[];
  segment_count: number;
  context: ContextRow[];
}

export interface SessionView {
  id: string;
  corpus_id: string;
  filtered_key: string;
  roster: string[];
  policy: { kind: string; overlap_percent?: number };
  context_window: number;
  status: string;
  item_count: number;
}

export interface CoderProgress {
  assigned: number;
  completed: number;
  leased: number;
}

export interface AgreementUnits {
  agreeing: number;
  disagreeing: number;
  unmatched_a: number;
  unmatched_b: number;
}

export interface AgreementReport {
  overall_percent: number;
  per_category: Record<string, number | null>;
  units: AgreementUnits;
}

export interface Progress {
  session_id: string;
  status: string;
  item_count: number;
  completed_tasks: number;
  per_coder: Record<string, CoderProgress>;
  agreement: AgreementReport | null;
}

export interface SubmitAck {
  annotation_id: string;
  status: "recorded";
  replay: boolean;
}

export interface AnnotationRow {
  annotation_id: string;
  coder_id: string;
  transcript_id: string;
  start: string;
  end: string;
  frame: string;
  appeal: string;
  decision: string;
  note: string;
}

export interface SessionExport {
  session_id: string;
  status: string;
  policy: { kind: string; overlap_percent?: number };
  annotations: AnnotationRow[];
  adjudicated: AnnotationRow[];
}

export interface Submission {
  coder: string;
  item_id: string;
  decision: "message" | "not_a_message";
  category?: string;
  span?: { start: number; end: number };
  note?: string;
}

export interface ApiOptions {
  baseUrl?: string;
  token?: string;
  fetchFn?: typeof fetch;
}

export class CodingApi {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchFn: typeof fetch;

  constructor(options: ApiOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? globalThis.fetch.bind(globalThis);
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/export`;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Auth-Token"] = this.token;
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ErrorBody;
      try {
        parsed = (await response.json()) as ErrorBody;
      } catch {
        parsed = {
          code: "BadResponse",
          message: `HTTP ${response.status}`,
          details: {},
        };
      }
      throw new ServiceError(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  addCorpus(document: unknown): Promise<{ corpus_id: string }> {
    return this.request("POST", "/corpora", { document });
  }

  addFiltered(corpusId: string, document: unknown): Promise<unknown> {
    return this.request("POST", "/filtered", {
      corpus_id: corpusId,
      document,
    });
  }

  createSession(body: {
    corpus_id: string;
    list_name: string;
    config_hash: string;
    roster: string[];
    policy?: { kind: string; overlap_percent?: number };
    context_window?: number;
  }): Promise<SessionView> {
    return this.request("POST", "/sessions", body);
  }

  session(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  nextItem(sessionId: string, coder: string): Promise<NextResult> {
    const query = new URLSearchParams({ coder });
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/next?${query}`,
    );
  }

  itemContext(
    sessionId: string,
    itemId: string,
    radius: number,
  ): Promise<ItemContext> {
    const query = new URLSearchParams({ radius: String(radius) });
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/items/${encodeURIComponent(itemId)}/context?${query}`,
    );
  }

  submit(sessionId: string, submission: Submission): Promise<SubmitAck> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/annotations`,
      submission,
    );
  }

  progress(sessionId: string): Promise<Progress> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/progress`,
    );
  }

  agreement(sessionId: string): Promise<AgreementReport> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/agreement`,
    );
  }

  exportSession(sessionId: string): Promise<SessionExport> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/export`,
    );
  }

  close(sessionId: string): Promise<SessionView> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/close`,
    );
  }
}
