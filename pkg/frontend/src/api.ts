/** Typed fetch client for the annotation service. */

import type {
  LabelEvent,
  NextResponse,
  PostLabelsResponse,
  PseudoResponse,
  SessionDescriptor,
  VerifyResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Raised when the service answers with its error envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface SessionParams {
  k?: number;
  temperature?: number;
  mode?: string;
  num_classes?: number;
}

export interface ExportResult {
  text: string;
  labelVersion: number;
  softVersion: number;
}

/**
 * Thin wrapper over fetch. Every method talks to one documented endpoint
 * and returns the parsed body; no label math happens on the client.
 */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async createSession(
    features: BlobPart,
    params: SessionParams = {},
  ): Promise<SessionDescriptor> {
    const form = new FormData();
    form.append("features", new Blob([features]), "features.lgf");
    form.append("params", JSON.stringify(params));
    const response = await this.fetchFn(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    return this.parse<SessionDescriptor>(response);
  }

  async listSessions(): Promise<SessionDescriptor[]> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions`);
    const body = await this.parse<{ sessions: SessionDescriptor[] }>(response);
    return body.sessions;
  }

  async getSession(sessionId: string): Promise<SessionDescriptor> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}`);
    return this.parse<SessionDescriptor>(response);
  }

  async next(sessionId: string, count = 1): Promise<NextResponse> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/next?count=${count}`,
    );
    const body = await this.parse<Omit<NextResponse, "poolExhausted">>(response);
    return {
      ...body,
      poolExhausted: response.headers.get("X-Pool-Exhausted") === "true",
    };
  }

  async postLabels(
    sessionId: string,
    events: LabelEvent[],
  ): Promise<PostLabelsResponse> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/labels`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ events }),
      },
    );
    return this.parse<PostLabelsResponse>(response);
  }

  async pseudo(sessionId: string, ids?: string[]): Promise<PseudoResponse> {
    const query = ids ? `?ids=${ids.map(encodeURIComponent).join(",")}` : "";
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/pseudo${query}`,
    );
    return this.parse<PseudoResponse>(response);
  }

  async verify(sessionId: string, limit = 50): Promise<VerifyResponse> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/verify?limit=${limit}`,
    );
    return this.parse<VerifyResponse>(response);
  }

  async exportFile(
    sessionId: string,
    kind: "labels" | "soft" = "labels",
  ): Promise<ExportResult> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/export?kind=${kind}`,
    );
    if (!response.ok) {
      throw await this.envelope(response);
    }
    return {
      text: await response.text(),
      labelVersion: Number(response.headers.get("X-Label-Version") ?? -1),
      softVersion: Number(response.headers.get("X-Soft-Version") ?? -1),
    };
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }

  private async parse<T>(response: Response): Promise<T> {
    if (!response.ok) {
      throw await this.envelope(response);
    }
    return (await response.json()) as T;
  }

  private async envelope(response: Response): Promise<ApiError> {
    let code = "http_error";
    let message = `request failed with status ${response.status}`;
    let detail: unknown = null;
    try {
      const body = (await response.json()) as Record<string, unknown>;
      if (typeof body.code === "string") code = body.code;
      if (typeof body.message === "string") message = body.message;
      detail = body.detail ?? null;
    } catch {
      // non-JSON error body, keep the generic message
    }
    return new ApiError(response.status, code, message, detail);
  }
}
