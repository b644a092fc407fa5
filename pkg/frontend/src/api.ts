/** Thin client over the assistant service's JSON API. */

import type {
  ActionSpec,
  AuditEntry,
  CandidatesResponse,
  Recommendation,
  ServiceErrorBody,
  Snapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ServiceErrorBody,
  ) {
    super(body.message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let body: ServiceErrorBody;
    try {
      body = (await resp.json()) as ServiceErrorBody;
    } catch {
      body = { code: "http_error", message: resp.statusText, detail: "" };
    }
    throw new ApiError(resp.status, body);
  }
  return (await resp.json()) as T;
}

export class AssistantClient {
  constructor(private base: string = "") {}

  createSession(grid: string, chronic: string, mode = "paused") {
    return request<{ session_id: string; state: Snapshot }>(
      `${this.base}/api/sessions`,
      { method: "POST", body: JSON.stringify({ grid, chronic, mode }) },
    );
  }

  getState(sid: string) {
    return request<Snapshot>(`${this.base}/api/sessions/${sid}/state`);
  }

  advance(sid: string, steps = 1) {
    return request<Snapshot>(`${this.base}/api/sessions/${sid}/advance`, {
      method: "POST",
      body: JSON.stringify({ steps }),
    });
  }

  getCandidates(sid: string) {
    return request<CandidatesResponse>(
      `${this.base}/api/sessions/${sid}/candidates`,
    );
  }

  simulate(sid: string, action: ActionSpec) {
    return request<Recommendation>(`${this.base}/api/sessions/${sid}/simulate`, {
      method: "POST",
      body: JSON.stringify({ action }),
    });
  }

  applyCandidate(sid: string, candidateId: string) {
    return request<{ staged: ActionSpec; replaced_previous: boolean }>(
      `${this.base}/api/sessions/${sid}/apply`,
      { method: "POST", body: JSON.stringify({ candidate_id: candidateId }) },
    );
  }

  applyAction(sid: string, action: ActionSpec) {
    return request<{ staged: ActionSpec; replaced_previous: boolean }>(
      `${this.base}/api/sessions/${sid}/apply`,
      { method: "POST", body: JSON.stringify({ action }) },
    );
  }

  getAudit(sid: string) {
    return request<{ entries: AuditEntry[] }>(
      `${this.base}/api/sessions/${sid}/audit`,
    );
  }
}
