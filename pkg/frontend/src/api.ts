/** Typed fetch wrappers over the gateway. Every response is either the
 * endpoint's JSON payload, a GatewayError carrying the server's error
 * envelope, or a ConnectionError when the gateway is unreachable. */

import type {
  ErrorEnvelope,
  QueryResult,
  SessionManifest,
  StatsPayload,
  TimelinePayload,
} from "./types.js";

export class GatewayError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

export class ConnectionError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "ConnectionError";
  }
}

export interface QueryParams {
  sessions?: string[];
  limit?: number;
  tz?: string;
  now?: number;
}

export class Gateway {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (exc) {
      throw new ConnectionError(exc instanceof Error ? exc.message : String(exc));
    }
    const text = await response.text();
    if (!response.ok) {
      let code = "HTTP_ERROR";
      let message = text || response.statusText;
      try {
        const envelope = JSON.parse(text) as ErrorEnvelope;
        code = envelope.error.code;
        message = envelope.error.message;
      } catch {
        // non-envelope body; keep the raw text
      }
      throw new GatewayError(code, message, response.status);
    }
    return JSON.parse(text) as T;
  }

  query(q: string, params: QueryParams = {}): Promise<QueryResult> {
    const search = new URLSearchParams({ q });
    if (params.sessions?.length) search.set("sessions", params.sessions.join(","));
    if (params.limit !== undefined) search.set("limit", String(params.limit));
    if (params.tz !== undefined) search.set("tz", params.tz);
    if (params.now !== undefined) search.set("now", String(params.now));
    return this.request<QueryResult>(`/query?${search}`);
  }

  timeline(sessionId: string, from?: number, to?: number): Promise<TimelinePayload> {
    const search = new URLSearchParams();
    if (from !== undefined) search.set("from", String(from));
    if (to !== undefined) search.set("to", String(to));
    const suffix = search.size ? `?${search}` : "";
    return this.request<TimelinePayload>(
      `/sessions/${encodeURIComponent(sessionId)}/timeline${suffix}`,
    );
  }

  stats(sessionId: string, from?: number, to?: number): Promise<StatsPayload> {
    const search = new URLSearchParams();
    if (from !== undefined) search.set("from", String(from));
    if (to !== undefined) search.set("to", String(to));
    const suffix = search.size ? `?${search}` : "";
    return this.request<StatsPayload>(
      `/sessions/${encodeURIComponent(sessionId)}/stats${suffix}`,
    );
  }

  consent(
    sessionId: string,
    patch: { capture_enabled?: boolean; modalities_enabled?: string[] },
  ): Promise<SessionManifest> {
    return this.request<SessionManifest>(`/sessions/${encodeURIComponent(sessionId)}/consent`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(patch),
    });
  }
}
