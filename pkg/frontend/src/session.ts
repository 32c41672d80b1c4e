/**
 * Chat session controller: all client-side dialogue state and the rules for
 * mutating it. Deliberately DOM-free so the behavior is unit-testable; the
 * view layer renders snapshots of {@link ChatState} and calls the public
 * methods.
 *
 * Holds no dialogue knowledge of its own beyond the session id: bubbles and
 * the inspector panel are rebuilt from what the service returns, so a page
 * reload followed by a workspace refetch reproduces the inspector exactly.
 */

import { AgendaDocument, ApiError, ServiceClient, WorkspaceSnapshot } from "./api.js";

/** The slice of the client the controller needs; tests substitute fakes. */
export type ServiceApi = Pick<ServiceClient, "createSession" | "sendUtterance" | "getWorkspace">;

export type Speaker = "user" | "system";

/** One rendered chat bubble. System bubbles carry the agenda they came from. */
export interface UiTurnView {
  speaker: Speaker;
  text: string;
  agenda?: AgendaDocument;
}

export interface ChatState {
  sessionId: string | null;
  preset: string;
  turns: UiTurnView[];
  inspector: WorkspaceSnapshot | null;
  /** A turn is in flight; input is disabled. */
  busy: boolean;
  /** Session ended (bye, or the service reported it closed). */
  closed: boolean;
  /** Banner text for errors and notices, null when clear. */
  notice: string | null;
  /** Utterance to offer for re-sending after a turn-in-progress rejection. */
  retryText: string | null;
}

export type SendOutcome = "sent" | "blocked" | "failed";

export class ChatController {
  readonly state: ChatState = {
    sessionId: null,
    preset: "",
    turns: [],
    inspector: null,
    busy: false,
    closed: false,
    notice: null,
    retryText: null,
  };

  constructor(
    private readonly api: ServiceApi,
    private readonly onChange: (state: ChatState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private pushSystemTurn(agenda: AgendaDocument, text: string): void {
    this.state.turns.push({ speaker: "system", text, agenda });
    if (agenda.closed) {
      this.state.closed = true;
      this.state.notice = "The session has ended.";
    }
  }

  /** Create a session and run the opening system turn (the greeting). */
  async start(preset: string): Promise<void> {
    this.state.busy = true;
    this.state.notice = null;
    this.emit();
    try {
      const sessionId = await this.api.createSession(preset);
      this.state.sessionId = sessionId;
      this.state.preset = preset;
      const opening = await this.api.sendUtterance(sessionId, null);
      this.pushSystemTurn(opening.agenda, opening.text);
      await this.refreshWorkspace();
    } catch (err) {
      this.state.notice = describe(err, `Could not start a "${preset}" session`);
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  /**
   * Send one user utterance. Returns "blocked" without touching the service
   * when a turn is already in flight, the session is closed, or there is no
   * session yet: the single in-flight turn rule is enforced client-side.
   */
  async send(text: string): Promise<SendOutcome> {
    const trimmed = text.trim();
    if (this.state.busy || this.state.closed || !this.state.sessionId || !trimmed) {
      return "blocked";
    }
    this.state.busy = true;
    this.state.notice = null;
    this.state.retryText = null;
    this.state.turns.push({ speaker: "user", text: trimmed });
    this.emit();
    try {
      const reply = await this.api.sendUtterance(this.state.sessionId, trimmed);
      this.pushSystemTurn(reply.agenda, reply.text);
      await this.refreshWorkspace();
      return "sent";
    } catch (err) {
      this.state.turns.pop(); // the turn did not happen; drop the optimistic bubble
      if (err instanceof ApiError && err.status === 409) {
        this.state.closed = true;
        this.state.notice = "The session is closed; start a new one to continue.";
      } else if (err instanceof ApiError && err.status === 429) {
        this.state.retryText = trimmed;
        this.state.notice = "A turn is still in progress. Retry?";
      } else {
        this.state.notice = describe(err, "Sending failed");
      }
      return "failed";
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  /** Re-send the utterance a turn-in-progress rejection bounced. */
  async retry(): Promise<SendOutcome> {
    const text = this.state.retryText;
    if (!text) {
      return "blocked";
    }
    this.state.retryText = null;
    return this.send(text);
  }

  /**
   * Refetch the inspector panel. A transient failure keeps the last good
   * snapshot rather than blanking the panel.
   */
  async refreshWorkspace(): Promise<void> {
    if (!this.state.sessionId) {
      return;
    }
    try {
      this.state.inspector = await this.api.getWorkspace(this.state.sessionId);
    } catch {
      // keep last-good panel
    }
    this.emit();
  }
}

function describe(err: unknown, prefix: string): string {
  if (err instanceof ApiError) {
    return `${prefix}: ${err.message} (HTTP ${err.status})`;
  }
  return `${prefix}: service unreachable`;
}
