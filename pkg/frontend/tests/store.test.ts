import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { OutboundQueue } from "../src/queue.js";
import { AnnotatorStore, type StoreOptions } from "../src/store.js";
import type {
  LabelEvent,
  PseudoRow,
  SessionDescriptor,
  Suggestion,
  VerifyItem,
} from "../src/types.js";
import { MemoryStorage } from "./helpers.js";

/** Scripted stand-in for the HTTP client. */
class FakeService {
  descriptor: SessionDescriptor = {
    session_id: "sess",
    n: 6,
    d: 2,
    c: 3,
    k: 2,
    T: 0.1,
    mode: "active_learning",
    labeled: 0,
    trusted: 0,
    version: 0,
    soft_version: 0,
  };
  pool: Suggestion[] = [];
  pseudoRows: PseudoRow[] = [];
  verifyItems: VerifyItem[] = [];
  posted: LabelEvent[][] = [];
  down = false;
  verifyConflict = false;

  async getSession(): Promise<SessionDescriptor> {
    this.check();
    return { ...this.descriptor };
  }

  async next(_: string, count: number) {
    this.check();
    return {
      items: this.pool.splice(0, count),
      version: this.descriptor.version,
      soft_version: this.descriptor.soft_version,
      poolExhausted: this.pool.length === 0,
    };
  }

  async postLabels(_: string, events: LabelEvent[]) {
    this.check();
    this.posted.push(events);
    this.descriptor.version += events.length;
    return {
      version: this.descriptor.version,
      soft_version: this.descriptor.soft_version,
      propagation: "scheduled",
    };
  }

  async pseudo() {
    this.check();
    return {
      version: this.descriptor.version,
      soft_version: this.descriptor.soft_version,
      results: this.pseudoRows,
      missing: [],
    };
  }

  async verify(_: string, limit: number) {
    this.check();
    if (this.verifyConflict) {
      throw new ApiError(409, "conflict", "session has no given labels to verify");
    }
    return {
      items: this.verifyItems.slice(0, limit),
      version: this.descriptor.version,
      soft_version: this.descriptor.soft_version,
    };
  }

  private check(): void {
    if (this.down) throw new TypeError("connection refused");
  }
}

function makeStore(options: StoreOptions = {}) {
  const service = new FakeService();
  const storage = new MemoryStorage();
  const queue = new OutboundQueue(storage, "sess");
  const store = new AnnotatorStore(
    service as unknown as ApiClient,
    queue,
    "sess",
    { now: () => 1234, ...options },
  );
  return { service, storage, queue, store };
}

const row = (id: string, pseudo: number, confidence: number): PseudoRow => ({
  id,
  scores: [],
  pseudo,
  confidence,
});

describe("AnnotatorStore polling", () => {
  it("loads the session on the first tick", async () => {
    const { store } = makeStore();
    await store.tick();
    expect(store.state.session?.session_id).toBe("sess");
    expect(store.state.online).toBe(true);
    expect(store.state.lastPropagationAt).toBe(1234);
  });

  it("backs off while idle and resets on change", async () => {
    const { service, store } = makeStore();
    await store.tick();
    expect(store.pollDelayMs).toBe(1000);
    await store.tick();
    expect(store.pollDelayMs).toBe(2000);
    await store.tick();
    await store.tick();
    await store.tick();
    expect(store.pollDelayMs).toBe(8000); // capped
    service.descriptor.version += 1;
    await store.tick();
    expect(store.pollDelayMs).toBe(1000);
  });

  it("refreshes displayed confidences when soft labels advance", async () => {
    const { service, store } = makeStore();
    service.pool = [
      { id: "a", pseudo: 0, confidence: 0 },
      { id: "b", pseudo: 0, confidence: 0 },
    ];
    await store.tick();
    await store.fillSuggestions();
    expect(store.state.suggestions.map((s) => s.confidence)).toEqual([0, 0]);

    service.descriptor.soft_version = 5;
    service.pseudoRows = [row("a", 2, 0.91), row("b", 1, 0.44)];
    await store.tick();
    expect(store.state.suggestions).toEqual([
      { id: "a", pseudo: 2, confidence: 0.91 },
      { id: "b", pseudo: 1, confidence: 0.44 },
    ]);
    expect(store.state.history.at(-1)?.meanConfidence).toBeCloseTo(0.675);
  });

  it("marks the store offline on a failed poll", async () => {
    const { service, store } = makeStore();
    await store.tick();
    service.down = true;
    await store.tick();
    expect(store.state.online).toBe(false);
    service.down = false;
    await store.tick();
    expect(store.state.online).toBe(true);
  });
});

describe("AnnotatorStore annotation", () => {
  it("labels the current sample and refills the queue", async () => {
    const { service, store } = makeStore({ suggestionCount: 2 });
    service.pool = [
      { id: "a", pseudo: 1, confidence: 0.5 },
      { id: "b", pseudo: 0, confidence: 0.2 },
      { id: "c", pseudo: 2, confidence: 0.1 },
    ];
    await store.fillSuggestions();
    expect(store.current?.id).toBe("a");

    await store.labelCurrent(2);
    expect(service.posted).toEqual([[{ id: "a", action: "label", class: 2 }]]);
    expect(store.state.suggestions.map((s) => s.id)).toEqual(["b", "c"]);
  });

  it("accept uses the served pseudo-label, skip rejects", async () => {
    const { service, store } = makeStore({ suggestionCount: 1 });
    service.pool = [
      { id: "a", pseudo: 1, confidence: 0.5 },
      { id: "b", pseudo: 0, confidence: 0.2 },
    ];
    await store.fillSuggestions();
    await store.acceptCurrent();
    await store.skipCurrent();
    expect(service.posted).toEqual([
      [{ id: "a", action: "label", class: 1 }],
      [{ id: "b", action: "reject" }],
    ]);
  });

  it("stamps events with the annotator name", async () => {
    const { service, store } = makeStore({ annotator: "kat" });
    await store.submit([{ id: "a", action: "label", class: 0 }]);
    expect(service.posted[0]![0]).toEqual({
      annotator: "kat",
      id: "a",
      action: "label",
      class: 0,
    });
  });

  it("flags pool exhaustion from a conflict", async () => {
    const { service, store } = makeStore();
    service.next = async () => {
      throw new ApiError(409, "conflict", "no unlabeled samples left to suggest");
    };
    await store.fillSuggestions();
    expect(store.state.poolExhausted).toBe(true);
    expect(store.state.online).toBe(true);
  });
});

describe("AnnotatorStore offline queue", () => {
  it("queues while offline and drains on the next good poll", async () => {
    const { service, storage, store } = makeStore();
    await store.tick();
    service.down = true;
    await store.submit([{ id: "a", action: "label", class: 0 }]);
    await store.submit([{ id: "b", action: "label", class: 1 }]);
    expect(store.state.online).toBe(false);
    expect(store.state.queuedEvents).toBe(2);
    expect(service.posted).toEqual([]);

    // the unsent events are durable, a fresh store picks them up
    const revivedQueue = new OutboundQueue(storage, "sess");
    expect(revivedQueue.eventCount).toBe(2);

    service.down = false;
    await store.tick();
    expect(service.posted).toEqual([
      [{ id: "a", action: "label", class: 0 }],
      [{ id: "b", action: "label", class: 1 }],
    ]);
    expect(store.state.queuedEvents).toBe(0);
    expect(store.state.online).toBe(true);
  });

  it("reports definitively rejected batches", async () => {
    const { service, store } = makeStore();
    service.postLabels = async () => {
      throw new ApiError(422, "invalid_event", "class out of range");
    };
    await store.submit([{ id: "a", action: "label", class: 99 }]);
    expect(store.state.queuedEvents).toBe(0);
    expect(store.state.lastError).toContain("rejected 1 event");
  });
});

describe("AnnotatorStore verification", () => {
  const items: VerifyItem[] = [
    { id: "bad", given: 0, pseudo: 2, score: 0.9 },
    { id: "ok", given: 1, pseudo: 1, score: 0.0 },
  ];

  it("keep confirms the given label", async () => {
    const { service, store } = makeStore();
    service.verifyItems = items;
    await store.loadVerifyQueue();
    expect(store.state.verifyQueue.map((i) => i.id)).toEqual(["bad", "ok"]);

    await store.keep(items[0]!);
    expect(service.posted).toEqual([[{ id: "bad", action: "verify", class: 0 }]]);
    expect(store.state.verifyQueue.map((i) => i.id)).toEqual(["ok"]);
  });

  it("fix defaults to the propagated class", async () => {
    const { service, store } = makeStore();
    await store.fix(items[0]!);
    expect(service.posted).toEqual([[{ id: "bad", action: "relabel", class: 2 }]]);
  });

  it("fix accepts an explicit class", async () => {
    const { service, store } = makeStore();
    await store.fix(items[0]!, 1);
    expect(service.posted).toEqual([[{ id: "bad", action: "relabel", class: 1 }]]);
  });

  it("unlabel rejects the sample back into the pool", async () => {
    const { service, store } = makeStore();
    await store.unlabel(items[1]!);
    expect(service.posted).toEqual([[{ id: "ok", action: "reject" }]]);
  });

  it("treats an empty session as nothing to verify", async () => {
    const { service, store } = makeStore();
    service.verifyConflict = true;
    await store.loadVerifyQueue();
    expect(store.state.verifyQueue).toEqual([]);
    expect(store.state.lastError).toBe("nothing to verify yet");
    expect(store.state.online).toBe(true);
  });
});
