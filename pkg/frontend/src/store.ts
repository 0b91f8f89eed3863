/** Client-side session state: polling, suggestion queue, event submission. */

import type { ApiClient } from "./api.js";
import type { OutboundQueue } from "./queue.js";
import type {
  LabelEvent,
  SessionDescriptor,
  Suggestion,
  VerifyItem,
} from "./types.js";

export interface SpendPoint {
  /** Labels spent when the point was recorded. */
  labeled: number;
  /** Mean confidence over all samples at that spend. */
  meanConfidence: number;
}

export interface StoreState {
  session: SessionDescriptor | null;
  /** Local annotation queue, head first. */
  suggestions: Suggestion[];
  verifyQueue: VerifyItem[];
  /** False while the service is unreachable. */
  online: boolean;
  /** Events waiting in the outbound queue. */
  queuedEvents: number;
  /** True once the service reports the unlabeled pool is empty. */
  poolExhausted: boolean;
  /** Wall time of the last observed soft label update, null before one. */
  lastPropagationAt: number | null;
  /** Label-spend vs mean-confidence curve, one point per soft update. */
  history: SpendPoint[];
  lastError: string | null;
}

export interface StoreOptions {
  /** Base polling interval. */
  pollIntervalMs?: number;
  /** Ceiling for the idle backoff. */
  maxIntervalMs?: number;
  /** Size the local suggestion queue is kept at. */
  suggestionCount?: number;
  /** Recorded on every event this client submits. */
  annotator?: string;
  now?: () => number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
}

type Listener = (state: StoreState) => void;

/**
 * Holds everything the views render. All mutation goes through the service:
 * the store submits events and re-reads state; it never computes labels or
 * scores itself (the history curve only averages served confidences).
 */
export class AnnotatorStore {
  readonly state: StoreState = {
    session: null,
    suggestions: [],
    verifyQueue: [],
    online: true,
    queuedEvents: 0,
    poolExhausted: false,
    lastPropagationAt: null,
    history: [],
    lastError: null,
  };

  private readonly pollIntervalMs: number;
  private readonly maxIntervalMs: number;
  private readonly suggestionCount: number;
  private readonly annotator: string | undefined;
  private readonly now: () => number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;
  private readonly clearTimeoutFn: (handle: unknown) => void;

  private listeners: Listener[] = [];
  private timer: unknown = null;
  private currentIntervalMs: number;
  private polling = false;

  constructor(
    private readonly client: ApiClient,
    private readonly queue: OutboundQueue,
    private readonly sessionId: string,
    options: StoreOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.maxIntervalMs = options.maxIntervalMs ?? 8000;
    this.suggestionCount = options.suggestionCount ?? 8;
    this.annotator = options.annotator;
    this.now = options.now ?? (() => Date.now());
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimeoutFn =
      options.clearTimeoutFn ?? ((handle) => clearTimeout(handle as number));
    this.currentIntervalMs = this.pollIntervalMs;
    this.state.queuedEvents = queue.eventCount;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((fn) => fn !== listener);
    };
  }

  /** Current delay between polls; grows while nothing changes. */
  get pollDelayMs(): number {
    return this.currentIntervalMs;
  }

  // -- polling ---------------------------------------------------------------

  startPolling(): void {
    if (this.polling) return;
    this.polling = true;
    const loop = async () => {
      if (!this.polling) return;
      await this.tick();
      if (!this.polling) return;
      this.timer = this.setTimeoutFn(loop, this.currentIntervalMs);
    };
    this.timer = this.setTimeoutFn(loop, 0);
  }

  stopPolling(): void {
    this.polling = false;
    if (this.timer !== null) {
      this.clearTimeoutFn(this.timer);
      this.timer = null;
    }
  }

  /**
   * One poll cycle: refresh the descriptor, retry queued events, and pull
   * fresh confidences when a propagation landed. Doubles the delay after a
   * quiet cycle, resets it when anything moved.
   */
  async tick(): Promise<void> {
    let changed = false;
    try {
      const session = await this.client.getSession(this.sessionId);
      const previous = this.state.session;
      this.state.online = true;
      changed =
        previous === null ||
        previous.version !== session.version ||
        previous.soft_version !== session.soft_version;
      const softAdvanced =
        previous !== null && session.soft_version !== previous.soft_version;
      this.state.session = session;
      if (softAdvanced || previous === null) {
        this.state.lastPropagationAt = this.now();
        await this.refreshConfidences();
      }
      if (this.queue.length > 0) {
        await this.pushQueued();
        changed = true;
      }
    } catch {
      this.state.online = false;
      changed = false;
    }
    this.currentIntervalMs = changed
      ? this.pollIntervalMs
      : Math.min(this.currentIntervalMs * 2, this.maxIntervalMs);
    this.emit();
  }

  // -- annotation queue ------------------------------------------------------

  /** Top up the local suggestion queue from the service. */
  async fillSuggestions(): Promise<void> {
    const want = this.suggestionCount - this.state.suggestions.length;
    if (want <= 0) return;
    try {
      const response = await this.client.next(this.sessionId, want);
      this.state.suggestions.push(...response.items);
      this.state.poolExhausted = response.poolExhausted;
      this.state.online = true;
    } catch (error) {
      if (isConflict(error)) {
        this.state.poolExhausted = true;
      } else {
        this.state.online = false;
      }
    }
    this.emit();
  }

  /** Head of the local queue, the sample currently on screen. */
  get current(): Suggestion | null {
    return this.state.suggestions[0] ?? null;
  }

  /** Label the current sample with an explicit class. */
  async labelCurrent(cls: number): Promise<void> {
    const sample = this.current;
    if (sample === null) return;
    this.state.suggestions.shift();
    await this.submit([{ id: sample.id, action: "label", class: cls }]);
    await this.fillSuggestions();
  }

  /** Accept the served pseudo-label for the current sample. */
  async acceptCurrent(): Promise<void> {
    const sample = this.current;
    if (sample === null) return;
    await this.labelCurrent(sample.pseudo);
  }

  /** Skip the current sample; a reject returns it to the pool. */
  async skipCurrent(): Promise<void> {
    const sample = this.current;
    if (sample === null) return;
    this.state.suggestions.shift();
    await this.submit([{ id: sample.id, action: "reject" }]);
    await this.fillSuggestions();
  }

  // -- verification queue ----------------------------------------------------

  async loadVerifyQueue(limit = 50): Promise<void> {
    try {
      const response = await this.client.verify(this.sessionId, limit);
      this.state.verifyQueue = response.items;
      this.state.online = true;
      this.state.lastError = null;
    } catch (error) {
      if (isConflict(error)) {
        this.state.verifyQueue = [];
        this.state.lastError = "nothing to verify yet";
      } else {
        this.state.online = false;
      }
    }
    this.emit();
  }

  /** Keep the given label: confirm it as verified and trusted. */
  async keep(item: VerifyItem): Promise<void> {
    this.dropFromVerifyQueue(item.id);
    await this.submit([{ id: item.id, action: "verify", class: item.given }]);
  }

  /** Fix the label; defaults to the propagated suggestion. */
  async fix(item: VerifyItem, cls?: number): Promise<void> {
    this.dropFromVerifyQueue(item.id);
    await this.submit([
      { id: item.id, action: "relabel", class: cls ?? item.pseudo },
    ]);
  }

  /** Remove the label entirely, returning the sample to the pool. */
  async unlabel(item: VerifyItem): Promise<void> {
    this.dropFromVerifyQueue(item.id);
    await this.submit([{ id: item.id, action: "reject" }]);
  }

  // -- event submission ------------------------------------------------------

  /** Queue a batch and try to send everything pending. */
  async submit(events: LabelEvent[]): Promise<void> {
    const stamped = this.annotator
      ? events.map((e) => ({ annotator: this.annotator, ...e }))
      : events;
    this.queue.enqueue(stamped);
    await this.pushQueued();
    this.currentIntervalMs = this.pollIntervalMs;
    this.emit();
  }

  /** Flush the outbound queue; failures leave it persisted for later. */
  async pushQueued(): Promise<void> {
    const report = await this.queue.flush((events) =>
      this.client.postLabels(this.sessionId, events),
    );
    if (report.blocked) {
      this.state.online = false;
    } else if (report.sent > 0 || report.rejected.length > 0) {
      this.state.online = true;
    }
    if (report.rejected.length > 0) {
      const count = report.rejected.reduce((s, b) => s + b.events.length, 0);
      this.state.lastError = `service rejected ${count} event(s)`;
    }
    this.state.queuedEvents = this.queue.eventCount;
    this.emit();
  }

  // -- internals -------------------------------------------------------------

  /** Re-read served confidences for on-screen samples and the curve. */
  private async refreshConfidences(): Promise<void> {
    const response = await this.client.pseudo(this.sessionId);
    const byId = new Map(response.results.map((row) => [row.id, row]));
    this.state.suggestions = this.state.suggestions.map((s) => {
      const row = byId.get(s.id);
      return row ? { id: s.id, pseudo: row.pseudo, confidence: row.confidence } : s;
    });
    if (response.results.length > 0) {
      const total = response.results.reduce((sum, row) => sum + row.confidence, 0);
      this.state.history.push({
        labeled: this.state.session?.labeled ?? 0,
        meanConfidence: total / response.results.length,
      });
    }
  }

  private dropFromVerifyQueue(id: string): void {
    this.state.verifyQueue = this.state.verifyQueue.filter(
      (item) => item.id !== id,
    );
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}

function isConflict(error: unknown): boolean {
  return (
    typeof error === "object" &&
    error !== null &&
    "status" in error &&
    (error as { status: number }).status === 409
  );
}
