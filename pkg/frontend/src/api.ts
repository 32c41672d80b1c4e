/**
 * Typed client for the dialogue service HTTP API.
 *
 * The UI never interprets triples beyond displaying them: language analysis
 * and generation run server-side behind POST /sessions/{id}/utterance, so
 * this module is plain request/response plumbing over the wire documents.
 */

export interface AgendaDocument {
  session_id: string;
  turn: number;
  agenda_id: string;
  dialogue_action: string;
  semantics: string[];
  closed: boolean;
}

export interface UserInputDocument {
  session_id: string;
  dialogue_action: string;
  semantics: string[];
}

/** Reply of one full utterance step: analysed input, executed agenda, rendered text. */
export interface UtteranceReply {
  session_id: string;
  user: UserInputDocument | null;
  agenda: AgendaDocument;
  text: string;
}

export interface WorkspaceRow {
  agenda_id: string;
  kind: string;
  dialogue_action: string | null;
  semantics: string[];
  inserted_turn: number;
  staleness: number;
  source_snippet: string | null;
}

export interface WorkspaceSnapshot {
  session_id: string;
  turn: number;
  phase: string;
  agendas: WorkspaceRow[];
}

/** Non-2xx response, carrying the service's error name and status code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    reason: string,
  ) {
    super(reason || errorName);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);
    const payload: unknown = await response.json();
    if (!response.ok) {
      const err = payload as { error?: string; reason?: string };
      throw new ApiError(response.status, err.error ?? "Error", err.reason ?? "");
    }
    return payload as T;
  }

  async createSession(preset: string): Promise<string> {
    const reply = await this.call<{ session_id: string }>("POST", "/sessions", { preset });
    return reply.session_id;
  }

  /** One turn from raw text; null text drives the opening system turn. */
  sendUtterance(sessionId: string, text: string | null): Promise<UtteranceReply> {
    return this.call<UtteranceReply>("POST", `/sessions/${sessionId}/utterance`, { text });
  }

  getWorkspace(sessionId: string): Promise<WorkspaceSnapshot> {
    return this.call<WorkspaceSnapshot>("GET", `/sessions/${sessionId}/workspace`);
  }
}
