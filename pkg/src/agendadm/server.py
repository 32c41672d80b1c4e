"""HTTP transport for the session service.

A thin adapter: routes map one-to-one onto SessionService operations, errors
map onto status codes (validation 400, unknown ids 404, closed session 409,
overlapping turn 429), and bodies are the canonical wire documents.  The one
extra endpoint, POST /sessions/{id}/utterance, runs a full loop step with the
simulation stubs server-side so browser clients can send raw text.

Routes:
    POST /sessions                     {"preset": name?}      -> {"session_id"}
    POST /sessions/{id}/snippets       [SnippetDocument, ...] -> {"agenda_ids"}
    POST /sessions/{id}/turn           UserInputDocument|null -> AgendaDocument
    POST /sessions/{id}/utterance      {"text": str|null}     -> UtteranceReply
    GET  /sessions/{id}/workspace                             -> snapshot
    GET  /healthz                                             -> {"status"}
"""

from __future__ import annotations

import json
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from . import ontology, rdf, sim, wire
from .presenter import InvalidUserInput, SessionClosed, TurnInProgress
from .wire import MalformedDocument, SessionService, UnknownPreset, UnknownSession

_SESSION_ROUTE = re.compile(r"^/sessions/([^/]+)/(snippets|turn|utterance|workspace)$")


class UnknownRoute(LookupError):
    pass


def _status_for(exc: Exception) -> int:
    if isinstance(exc, (UnknownSession, UnknownPreset, UnknownRoute)):
        return 404
    if isinstance(exc, SessionClosed):
        return 409
    if isinstance(exc, TurnInProgress):
        return 429
    if isinstance(
        exc,
        (
            MalformedDocument,
            wire.InvalidSnippet,
            ontology.InvalidSnippet,
            InvalidUserInput,
            sim.PresetError,
            sim.MissingTemplate,
            rdf.ParseError,
            ValueError,
        ),
    ):
        return 400
    return 500


def run_utterance_step(service: SessionService, session_id: str, text: str | None) -> dict:
    """One full loop step server-side: release due snippets, analyse the
    text (absent text drives the opening turn), run the turn, render it."""
    preset = service.session_preset(session_id) or sim.EMPTY_PRESET
    turn = service.session_state(session_id).turn
    released = sim.ki_release(preset, turn, session_id)
    if released:
        service.post_snippets(session_id, released)
    user_doc = None if text is None else sim.nlu(preset, text, session_id)
    agenda = service.post_turn(session_id, user_doc)
    return {
        "session_id": session_id,
        "user": None if user_doc is None else user_doc.to_obj(),
        "agenda": agenda.to_obj(),
        "text": sim.nlg(preset, agenda),
    }


class _Handler(BaseHTTPRequestHandler):
    service: SessionService  # injected by make_server
    protocol_version = "HTTP/1.1"

    # -- plumbing ------------------------------------------------------------

    def log_message(self, format: str, *args: Any) -> None:
        pass  # keep scripted runs byte-clean

    def _send(self, status: int, obj: Any) -> None:
        body = wire.encode_document(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, exc: Exception) -> None:
        self._send(_status_for(exc), {"error": type(exc).__name__, "reason": str(exc)})

    def _read_body(self) -> Any:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw.strip():
            return None
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedDocument(f"request body is not valid JSON: {exc}") from exc

    # -- routes ------------------------------------------------------------

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        try:
            if self.path == "/healthz":
                self._send(200, {"status": "ok"})
                return
            m = _SESSION_ROUTE.match(self.path)
            if m and m.group(2) == "workspace":
                self._send(200, self.service.get_workspace(m.group(1)))
                return
            raise UnknownRoute(self.path)
        except Exception as exc:  # every failure maps to a status
            self._send_error(exc)

    def do_POST(self) -> None:
        try:
            body = self._read_body()
            if self.path == "/sessions":
                self._post_session(body)
                return
            m = _SESSION_ROUTE.match(self.path)
            if m:
                session_id, op = m.group(1), m.group(2)
                if op == "snippets":
                    self._post_snippets(session_id, body)
                    return
                if op == "turn":
                    self._post_turn(session_id, body)
                    return
                if op == "utterance":
                    self._post_utterance(session_id, body)
                    return
            raise UnknownRoute(self.path)
        except Exception as exc:
            self._send_error(exc)

    # -- operation bodies -----------------------------------------------------

    def _post_session(self, body: Any) -> None:
        preset = ""
        if body is not None:
            if not isinstance(body, dict) or set(body) - {"preset"}:
                raise MalformedDocument('session request body must be {"preset": name}')
            preset = body.get("preset", "")
            if not isinstance(preset, str):
                raise MalformedDocument("preset must be a string")
        session_id = self.service.post_session(preset)
        self._send(201, {"session_id": session_id})

    def _post_snippets(self, session_id: str, body: Any) -> None:
        if not isinstance(body, list):
            raise MalformedDocument("snippet batch must be a list of snippet documents")
        docs = []
        for index, obj in enumerate(body):
            try:
                doc = wire.decode_snippet_document(obj)
            except MalformedDocument as exc:
                raise wire.InvalidSnippet(index, str(exc)) from exc
            if doc.session_id != session_id:
                raise wire.InvalidSnippet(index, "session_id does not match the request path")
            docs.append(doc)
        self._send(200, {"agenda_ids": self.service.post_snippets(session_id, docs)})

    def _post_turn(self, session_id: str, body: Any) -> None:
        doc = None
        if body is not None:
            doc = wire.decode_user_input_document(body)
            if doc.session_id != session_id:
                raise MalformedDocument("session_id does not match the request path")
        self._send(200, self.service.post_turn(session_id, doc).to_obj())

    def _post_utterance(self, session_id: str, body: Any) -> None:
        if not isinstance(body, dict) or "text" not in body or set(body) - {"text"}:
            raise MalformedDocument('utterance body must be {"text": string or null}')
        text = body["text"]
        if text is not None and not isinstance(text, str):
            raise MalformedDocument("text must be a string or null")
        self._send(200, run_utterance_step(self.service, session_id, text))


def make_server(service: SessionService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    handler = type("Handler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server
