/**
 * Thin DOM layer: renders {@link ChatState} snapshots and forwards input
 * events to the controller. No dialogue logic lives here.
 */

import { ChatController, ChatState } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderMessages(state: ChatState, container: HTMLElement): void {
  container.replaceChildren();
  for (const turn of state.turns) {
    const bubble = el("div", `bubble ${turn.speaker}`);
    if (turn.agenda) {
      const badge = el("span", "badge", turn.agenda.dialogue_action);
      bubble.appendChild(badge);
    }
    bubble.appendChild(el("p", "text", turn.text));
    if (turn.agenda && turn.agenda.semantics.length > 0) {
      const chips = el("div", "chips");
      for (const line of turn.agenda.semantics) {
        chips.appendChild(el("code", "chip", line));
      }
      bubble.appendChild(chips);
    }
    container.appendChild(bubble);
  }
  container.scrollTop = container.scrollHeight;
}

function renderInspector(state: ChatState, table: HTMLTableElement): void {
  const body = table.tBodies[0] ?? table.createTBody();
  body.replaceChildren();
  if (!state.inspector) return;
  for (const row of state.inspector.agendas) {
    const tr = body.insertRow();
    tr.insertCell().textContent = row.agenda_id;
    tr.insertCell().textContent = row.dialogue_action ?? "-";
    tr.insertCell().textContent = String(row.staleness);
    tr.insertCell().textContent = row.source_snippet ?? "-";
  }
  const caption = table.caption ?? table.createCaption();
  caption.textContent = `workspace: turn ${state.inspector.turn}, phase ${state.inspector.phase}`;
}

export function mount(root: HTMLElement, controller: ChatController): (state: ChatState) => void {
  const banner = el("div", "banner");
  const messages = el("div", "messages");
  const inspector = el("table", "inspector");
  inspector.createTHead().insertRow();
  for (const head of ["agenda", "action", "staleness", "snippet"]) {
    const th = el("th", undefined, head);
    inspector.tHead!.rows[0]!.appendChild(th);
  }

  const input = el("input") as HTMLInputElement;
  input.placeholder = "say something";
  const sendButton = el("button", undefined, "send");
  const retryButton = el("button", "retry", "retry");
  retryButton.hidden = true;

  const submit = () => {
    const text = input.value;
    input.value = "";
    void controller.send(text);
  };
  sendButton.addEventListener("click", submit);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") submit();
  });
  retryButton.addEventListener("click", () => void controller.retry());

  const controls = el("div", "controls");
  controls.append(input, sendButton, retryButton);
  const chat = el("div", "chat");
  chat.append(banner, messages, controls);
  root.append(chat, inspector);

  return (state: ChatState) => {
    banner.textContent = state.notice ?? "";
    banner.hidden = state.notice === null;
    renderMessages(state, messages);
    renderInspector(state, inspector);
    const accepting = state.sessionId !== null && !state.busy && !state.closed;
    input.disabled = !accepting;
    sendButton.disabled = !accepting;
    retryButton.hidden = state.retryText === null;
  };
}
