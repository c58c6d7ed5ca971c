// Queue controller for one coder in one session. All state transitions
// run through the service; the controller only holds the last response
// plus the coder's in-progress span edit.

import {
  CodingApi,
  ContextRow,
  Progress,
  QueueItem,
  ServiceError,
} from "./api";
import { Category, NOT_A_MESSAGE } from "./taxonomy";

export type Decision =
  | { kind: "category"; category: Category }
  | { kind: "not_a_message" };

export interface Span {
  start: number;
  end: number;
}

export type ViewState =
  | { kind: "loading" }
  | {
      kind: "item";
      item: QueueItem;
      context: ContextRow[];
      span: Span;
      spanBlocked: string | null;
      violations: string[] | null;
      pending: boolean;
      progress: Progress | null;
    }
  | { kind: "done"; progress: Progress | null; exportUrl: string }
  | { kind: "conflict"; message: string }
  | { kind: "fault"; message: string };

const EXPAND_STEP = 2;

export class CodingSession {
  state: ViewState = { kind: "loading" };
  private listeners = new Set<(state: ViewState) => void>();

  constructor(
    private readonly api: CodingApi,
    readonly sessionId: string,
    readonly coder: string,
  ) {}

  subscribe(listener: (state: ViewState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private setState(state: ViewState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  /** Fetch the next queued item (or the completion screen). */
  async start(): Promise<void> {
    this.setState({ kind: "loading" });
    try {
      const [next, progress] = await Promise.all([
        this.api.nextItem(this.sessionId, this.coder),
        this.api.progress(this.sessionId),
      ]);
      if (next.done) {
        this.setState({
          kind: "done",
          progress,
          exportUrl: this.api.exportUrl(this.sessionId),
        });
        return;
      }
      const focus = next.focus_index;
      this.setState({
        kind: "item",
        item: next,
        context: next.context,
        span: { start: focus, end: focus },
        spanBlocked: null,
        violations: null,
        pending: false,
        progress,
      });
    } catch (error) {
      this.fail(error);
    }
  }

  /** Conflict banner affordance: drop local state and refetch. */
  refetch(): Promise<void> {
    return this.start();
  }

  /** Fault banner affordance. */
  retry(): Promise<void> {
    return this.start();
  }

  /**
   * Record a span edit. Out-of-bounds spans are blocked here, before
   * any request is made; the previous valid span is kept.
   */
  setSpan(start: number, end: number): void {
    if (this.state.kind !== "item") return;
    const limit = this.state.item.segment_count - 1;
    let blocked: string | null = null;
    if (!Number.isInteger(start) || !Number.isInteger(end)) {
      blocked = "span indexes must be whole numbers";
    } else if (start < 0 || end > limit) {
      blocked = `span must stay within segments 0..${limit}`;
    } else if (start > end) {
      blocked = "span start cannot exceed its end";
    }
    if (blocked) {
      this.setState({ ...this.state, spanBlocked: blocked });
      return;
    }
    this.setState({ ...this.state, span: { start, end }, spanBlocked: null });
  }

  /** Widen the context around the current item, from the service. */
  async expandContext(): Promise<void> {
    if (this.state.kind !== "item") return;
    const { item, context } = this.state;
    const first = context[0]?.index ?? item.focus_index;
    const last = context[context.length - 1]?.index ?? item.focus_index;
    const radius =
      Math.max(item.focus_index - first, last - item.focus_index) + EXPAND_STEP;
    try {
      const wider = await this.api.itemContext(
        this.sessionId,
        item.item_id,
        radius,
      );
      if (this.state.kind !== "item" || this.state.item.item_id !== item.item_id)
        return;
      this.setState({ ...this.state, context: wider.context });
    } catch (error) {
      this.fail(error);
    }
  }

  /** Submit the decision for the current item and advance on ack. */
  async decide(decision: Decision): Promise<void> {
    if (this.state.kind !== "item" || this.state.pending) return;
    if (this.state.spanBlocked) return;
    const { item, span } = this.state;
    this.setState({ ...this.state, pending: true, violations: null });
    try {
      await this.api.submit(this.sessionId, {
        coder: this.coder,
        item_id: item.item_id,
        decision: decision.kind === "category" ? "message" : NOT_A_MESSAGE,
        category:
          decision.kind === "category" ? decision.category.label : undefined,
        span: { start: span.start, end: span.end },
      });
      await this.start();
    } catch (error) {
      if (this.state.kind === "item") {
        this.setState({ ...this.state, pending: false });
      }
      this.fail(error);
    }
  }

  private fail(error: unknown): void {
    if (error instanceof ServiceError) {
      if (error.body.code === "LeaseLost" || error.body.code === "DuplicateSubmission") {
        this.setState({
          kind: "conflict",
          message: `${error.body.message} — refetch to continue`,
        });
        return;
      }
      if (error.body.code === "ValidationFailed" && this.state.kind === "item") {
        const raw = error.body.details["violations"];
        const violations = Array.isArray(raw) ? raw.map(String) : [error.body.message];
        this.setState({ ...this.state, violations, pending: false });
        return;
      }
      this.setState({
        kind: "fault",
        message: `${error.body.code}: ${error.body.message}`,
      });
      return;
    }
    const message = error instanceof Error ? error.message : String(error);
    this.setState({ kind: "fault", message: `network error: ${message}` });
  }
}
