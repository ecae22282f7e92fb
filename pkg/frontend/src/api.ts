// Thin typed client over the session service. One in-flight request per
// session is the caller's responsibility (the UI disables input while a turn
// is posting).

import type {
  EmrResponse,
  ErrorBody,
  ScenariosResponse,
  SessionCreated,
  StateResponse,
  TraceResponse,
  UtteranceRequest,
  UtteranceResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await resp.json();
  if (!resp.ok) {
    const err = body as ErrorBody;
    throw new ServiceError(resp.status, err.code ?? "unknown", err.message ?? resp.statusText);
  }
  return body as T;
}

export class InquiryClient {
  constructor(public readonly baseUrl: string) {}

  scenarios(): Promise<ScenariosResponse> {
    return request(`${this.baseUrl}/scenarios`);
  }

  createSession(scenarioId: string, policy = "full_framework"): Promise<SessionCreated> {
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: JSON.stringify({ v: 1, scenario_id: scenarioId, policy }),
    });
  }

  postUtterance(sessionId: string, req: UtteranceRequest): Promise<UtteranceResponse> {
    return request(`${this.baseUrl}/sessions/${sessionId}/utterances`, {
      method: "POST",
      body: JSON.stringify({ v: 1, ...req }),
    });
  }

  state(sessionId: string): Promise<StateResponse> {
    return request(`${this.baseUrl}/sessions/${sessionId}/state`);
  }

  emr(sessionId: string): Promise<EmrResponse> {
    return request(`${this.baseUrl}/sessions/${sessionId}/emr`);
  }

  trace(sessionId: string): Promise<TraceResponse> {
    return request(`${this.baseUrl}/sessions/${sessionId}/trace`);
  }
}
