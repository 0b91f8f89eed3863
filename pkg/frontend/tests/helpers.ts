/** Shared fakes for the unit tests. */

import type { KeyValueStore } from "../src/queue.js";

/** In-memory stand-in for localStorage. */
export class MemoryStorage implements KeyValueStore {
  private readonly entries = new Map<string, string>();

  getItem(key: string): string | null {
    return this.entries.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.entries.set(key, value);
  }

  removeItem(key: string): void {
    this.entries.delete(key);
  }

  get size(): number {
    return this.entries.size;
  }
}

/** Build a JSON Response the way the service would. */
export function jsonResponse(
  body: unknown,
  status = 200,
  headers: Record<string, string> = {},
): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json", ...headers },
  });
}

/** Service-shaped error envelope. */
export function errorResponse(
  status: number,
  code: string,
  message: string,
  detail: unknown = null,
): Response {
  return jsonResponse({ code, message, detail }, status);
}
