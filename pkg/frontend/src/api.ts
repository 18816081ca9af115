/** Thin typed client over the session-service HTTP API. */

import type { CommitAck, CreateResponse, SessionView } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${err}`);
  }
  const body = await resp.text();
  if (!resp.ok) {
    let detail = body;
    try {
      detail = JSON.stringify(JSON.parse(body).detail);
    } catch {
      /* plain-text error */
    }
    throw new ApiError(resp.status, detail);
  }
  return JSON.parse(body) as T;
}

export interface CreateOptions {
  simulated: boolean;
  seed: number;
  filter?: "particle" | "conditional";
  n_search?: number;
  k?: number;
  config?: unknown;
}

export class SessionApi {
  constructor(private base: string) {}

  createSession(opts: CreateOptions): Promise<CreateResponse> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify(opts),
    });
  }

  drawObservation(id: string): Promise<SessionView> {
    return request(this.base, `/sessions/${id}/observations`, {
      method: "POST",
      body: JSON.stringify({ draw: true }),
    });
  }

  postObservation(id: string, y: number, t: number): Promise<SessionView> {
    return request(this.base, `/sessions/${id}/observations`, {
      method: "POST",
      body: JSON.stringify({ y, t }),
    });
  }

  commit(id: string, treatment: string, delay: number, override = false): Promise<CommitAck> {
    return request(this.base, `/sessions/${id}/decisions`, {
      method: "POST",
      body: JSON.stringify({ treatment, delay, override }),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return request(this.base, `/sessions/${id}`);
  }

  listSessions(): Promise<{ sessions: { id: string; status: string }[] }> {
    return request(this.base, "/sessions");
  }
}
