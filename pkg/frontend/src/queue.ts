/** Persisted outbound queue for label events. */

import { ApiError } from "./api.js";
import type { LabelEvent } from "./types.js";

/** The subset of DOM Storage the queue needs; localStorage satisfies it. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** One batch of events, posted atomically. */
export interface QueuedBatch {
  seq: number;
  events: LabelEvent[];
}

export interface FlushReport {
  /** Batches acknowledged by the service. */
  sent: number;
  /** Batches the service definitively rejected; they are removed. */
  rejected: QueuedBatch[];
  /** True when flushing stopped on a transient failure with work left. */
  blocked: boolean;
}

interface StoredState {
  nextSeq: number;
  batches: QueuedBatch[];
}

/**
 * Queue of unsent label batches, persisted on every change so pending
 * work survives a reload. Batches are flushed strictly in enqueue order;
 * a transient failure stops the flush and keeps the remainder intact.
 */
export class OutboundQueue {
  private readonly key: string;
  private state: StoredState;
  private flushing = false;

  constructor(
    private readonly storage: KeyValueStore,
    sessionId: string,
  ) {
    this.key = `annotator.queue.${sessionId}`;
    this.state = this.load();
  }

  /** Number of pending batches. */
  get length(): number {
    return this.state.batches.length;
  }

  /** Number of pending events across all batches. */
  get eventCount(): number {
    return this.state.batches.reduce((sum, b) => sum + b.events.length, 0);
  }

  /** Pending batches in send order. */
  pending(): readonly QueuedBatch[] {
    return this.state.batches;
  }

  /** Append a batch and persist it before returning. */
  enqueue(events: LabelEvent[]): QueuedBatch {
    if (events.length === 0) {
      throw new Error("cannot enqueue an empty batch");
    }
    const batch = { seq: this.state.nextSeq, events };
    this.state.nextSeq += 1;
    this.state.batches.push(batch);
    this.save();
    return batch;
  }

  /** Drop all pending batches. */
  clear(): void {
    this.state = { nextSeq: this.state.nextSeq, batches: [] };
    this.save();
  }

  /**
   * Post pending batches in order through `post`. A batch is removed once
   * acknowledged. A definitive rejection (4xx other than 408/409/429)
   * removes the batch and reports it, since retrying cannot succeed; any
   * other failure stops the flush and leaves the rest queued.
   */
  async flush(post: (events: LabelEvent[]) => Promise<unknown>): Promise<FlushReport> {
    const report: FlushReport = { sent: 0, rejected: [], blocked: false };
    if (this.flushing) {
      return report;
    }
    this.flushing = true;
    try {
      while (this.state.batches.length > 0) {
        const batch = this.state.batches[0]!;
        try {
          await post(batch.events);
          report.sent += 1;
        } catch (error) {
          if (error instanceof ApiError && isDefinitive(error.status)) {
            report.rejected.push(batch);
          } else {
            report.blocked = true;
            return report;
          }
        }
        this.state.batches.shift();
        this.save();
      }
      return report;
    } finally {
      this.flushing = false;
    }
  }

  private load(): StoredState {
    const raw = this.storage.getItem(this.key);
    if (raw === null) {
      return { nextSeq: 0, batches: [] };
    }
    try {
      const parsed = JSON.parse(raw) as StoredState;
      if (Array.isArray(parsed.batches) && typeof parsed.nextSeq === "number") {
        return parsed;
      }
    } catch {
      // corrupted entry, start fresh below
    }
    this.storage.removeItem(this.key);
    return { nextSeq: 0, batches: [] };
  }

  private save(): void {
    if (this.state.batches.length === 0) {
      this.storage.removeItem(this.key);
    } else {
      this.storage.setItem(this.key, JSON.stringify(this.state));
    }
  }
}

function isDefinitive(status: number): boolean {
  return status >= 400 && status < 500 && ![408, 409, 429].includes(status);
}
