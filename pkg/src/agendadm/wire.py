"""Semantic interchange documents and the session service behind them.

Three JSON documents cross the process boundary: the Agenda Document going
out to language generation, the User Input Document coming back from language
analysis, and the Snippet Document arriving from the knowledge module.  Their
encoding is canonical (fixed key order, two-space indentation, UTF-8, LF), so
encode(decode(text)) reproduces the input byte for byte and transcripts can
be compared exactly.

SessionService hosts the dialogue sessions.  It adds no dialogue logic of its
own: every emitted Agenda Document replays from the session's turn records.
Per session, turns run strictly one at a time (a second concurrent turn fails
with TurnInProgress) while snippet posts and workspace reads queue behind
whatever is running.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import ontology, rdf
from .ontology import DialogueAction, InformationSnippet, Marker, staleness
from .presenter import (
    DialogueState,
    Phase,
    SelectedAction,
    SessionClosed,
    TurnInProgress,
    UserAction,
    UserInput,
)
from .rdf import TripleSet

USER_ACTION_NAMES = frozenset(a.value for a in UserAction)
AGENDA_ACTION_NAMES = frozenset(a.value for a in DialogueAction)
GENERAL_ACTION_NAMES = frozenset(a.value for a in ontology.GENERAL_ACTIONS)


class MalformedDocument(ValueError):
    """A wire document failed schema validation; reason says where."""


class UnknownSession(LookupError):
    pass


class UnknownPreset(LookupError):
    pass


class InvalidSnippet(ValueError):
    """One document in a snippet batch was rejected; none were applied.

    Distinct from ontology.InvalidSnippet: this one carries the batch index
    so the sender can point at the offending document.
    """

    def __init__(self, index: int, reason: str):
        super().__init__(f"snippet {index}: {reason}")
        self.index = index
        self.reason = reason


def encode_document(obj: Any) -> str:
    """The one true rendering used for every document this package emits."""
    return json.dumps(obj, indent=2, ensure_ascii=False)


def _require(obj: Any, keys: tuple[str, ...], what: str) -> None:
    if not isinstance(obj, dict):
        raise MalformedDocument(f"{what}: expected an object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise MalformedDocument(f"{what}: missing key {missing[0]!r}")
    extra = [k for k in obj if k not in keys]
    if extra:
        raise MalformedDocument(f"{what}: unknown key {extra[0]!r}")


def _str_field(obj: dict, key: str, what: str) -> str:
    value = obj[key]
    if not isinstance(value, str):
        raise MalformedDocument(f"{what}: {key} must be a string")
    return value


def _triple_lines(obj: dict, what: str) -> tuple[str, ...]:
    """Parse a semantics field (a list of single-triple lines) and
    return it in canonical serialized order."""
    raw = obj["semantics"]
    if not isinstance(raw, list) or any(not isinstance(s, str) for s in raw):
        raise MalformedDocument(f"{what}: semantics must be a list of strings")
    triples = []
    for i, line in enumerate(raw):
        try:
            parsed = rdf.parse_document(line)
        except rdf.ParseError as exc:
            raise MalformedDocument(f"{what}: semantics[{i}]: {exc}") from exc
        if len(parsed) != 1:
            raise MalformedDocument(f"{what}: semantics[{i}] must hold exactly one triple")
        triples.append(parsed.triples[0])
    return semantics_lines(TripleSet(triples))


def semantics_lines(ts: TripleSet) -> tuple[str, ...]:
    """Triple strings in canonical order, one per line, no trailing newline."""
    return tuple(t.serialized() for t in ts)


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgendaDocument:
    """The system's action for one turn, as handed to language generation."""

    session_id: str
    turn: int
    agenda_id: str
    dialogue_action: str
    semantics: tuple[str, ...]
    closed: bool

    def to_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "turn": self.turn,
            "agenda_id": self.agenda_id,
            "dialogue_action": self.dialogue_action,
            "semantics": list(self.semantics),
            "closed": self.closed,
        }

    def encode(self) -> str:
        return encode_document(self.to_obj())

    def triple_set(self) -> TripleSet:
        return rdf.parse_document("\n".join(self.semantics))


@dataclass(frozen=True)
class UserInputDocument:
    session_id: str
    dialogue_action: str
    semantics: tuple[str, ...] = ()

    def to_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "dialogue_action": self.dialogue_action,
            "semantics": list(self.semantics),
        }

    def encode(self) -> str:
        return encode_document(self.to_obj())

    def to_user_input(self) -> UserInput:
        return UserInput(UserAction(self.dialogue_action), rdf.parse_document("\n".join(self.semantics)))


@dataclass(frozen=True)
class SnippetDocument:
    session_id: str
    snippet_id: str
    marker: str
    semantics: tuple[str, ...] = ()

    def to_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "snippet_id": self.snippet_id,
            "marker": self.marker,
            "semantics": list(self.semantics),
        }

    def encode(self) -> str:
        return encode_document(self.to_obj())

    def to_snippet(self) -> InformationSnippet:
        return InformationSnippet(
            Marker(self.marker), rdf.parse_document("\n".join(self.semantics)), self.snippet_id
        )


def decode_agenda_document(obj: Any) -> AgendaDocument:
    what = "agenda document"
    _require(obj, ("session_id", "turn", "agenda_id", "dialogue_action", "semantics", "closed"), what)
    if not isinstance(obj["turn"], int) or isinstance(obj["turn"], bool) or obj["turn"] < 0:
        raise MalformedDocument(f"{what}: turn must be a non-negative integer")
    if not isinstance(obj["closed"], bool):
        raise MalformedDocument(f"{what}: closed must be a boolean")
    action = _str_field(obj, "dialogue_action", what)
    if action not in AGENDA_ACTION_NAMES:
        raise MalformedDocument(f"{what}: unknown dialogue_action {action!r}")
    lines = _triple_lines(obj, what)
    if action in GENERAL_ACTION_NAMES and lines:
        raise MalformedDocument(f"{what}: {action} carries no semantics")
    return AgendaDocument(
        session_id=_str_field(obj, "session_id", what),
        turn=obj["turn"],
        agenda_id=_str_field(obj, "agenda_id", what),
        dialogue_action=action,
        semantics=lines,
        closed=obj["closed"],
    )


def decode_user_input_document(obj: Any) -> UserInputDocument:
    what = "user input document"
    _require(obj, ("session_id", "dialogue_action", "semantics"), what)
    action = _str_field(obj, "dialogue_action", what)
    if action not in USER_ACTION_NAMES:
        raise MalformedDocument(f"{what}: unknown dialogue_action {action!r}")
    lines = _triple_lines(obj, what)
    return UserInputDocument(
        session_id=_str_field(obj, "session_id", what),
        dialogue_action=action,
        semantics=lines,
    )


def decode_snippet_document(obj: Any) -> SnippetDocument:
    what = "snippet document"
    _require(obj, ("session_id", "snippet_id", "marker", "semantics"), what)
    marker = _str_field(obj, "marker", what)
    if marker not in ("informable", "requestable"):
        raise MalformedDocument(f"{what}: unknown marker {marker!r}")
    lines = _triple_lines(obj, what)
    return SnippetDocument(
        session_id=_str_field(obj, "session_id", what),
        snippet_id=_str_field(obj, "snippet_id", what),
        marker=marker,
        semantics=lines,
    )


def agenda_document_for(
    session_id: str, turn: int, selected: SelectedAction, closed: bool
) -> AgendaDocument:
    return AgendaDocument(
        session_id=session_id,
        turn=turn,
        agenda_id=selected.agenda_id,
        dialogue_action=selected.action.value,
        semantics=semantics_lines(selected.semantics),
        closed=closed,
    )


# ---------------------------------------------------------------------------
# Session service
# ---------------------------------------------------------------------------


@dataclass
class _Session:
    state: DialogueState
    preset: Any
    # guards all state access; held for the whole of any one operation
    lock: threading.Lock = field(default_factory=threading.Lock)
    # held only across a turn, acquired non-blocking to detect overlap
    turn_lock: threading.Lock = field(default_factory=threading.Lock)


class SessionService:
    """All dialogue sessions of one service instance, keyed by session id.

    Ids are deterministic (s1, s2, ...) so scripted runs replay byte-exactly.
    The preset registry is a plain name -> preset mapping; the service itself
    never looks inside a preset, it only stores the chosen one per session
    for the simulation stubs to pick up.
    """

    def __init__(self, presets: Mapping[str, Any] | None = None):
        self._presets: dict[str, Any] = dict(presets or {})
        self._sessions: dict[str, _Session] = {}
        self._next_session = 1
        self._service_lock = threading.Lock()

    # -- registry ------------------------------------------------------------

    @property
    def preset_names(self) -> list[str]:
        return sorted(self._presets)

    def preset(self, name: str) -> Any:
        try:
            return self._presets[name]
        except KeyError:
            raise UnknownPreset(name) from None

    def _session(self, session_id: str) -> _Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(session_id) from None

    def session_state(self, session_id: str) -> DialogueState:
        """Direct state access for in-process callers and tests."""
        return self._session(session_id).state

    def session_preset(self, session_id: str) -> Any:
        return self._session(session_id).preset

    # -- operations ------------------------------------------------------------

    def post_session(self, config_ref: str = "") -> str:
        """Create a session under the named preset ("" = the empty preset)."""
        preset = None if config_ref == "" else self.preset(config_ref)
        with self._service_lock:
            session_id = f"s{self._next_session}"
            self._next_session += 1
            self._sessions[session_id] = _Session(DialogueState(session_id), preset)
        return session_id

    def post_snippets(self, session_id: str, docs: list[SnippetDocument]) -> list[str]:
        """Stamp a snippet batch into the workspace, all or nothing."""
        session = self._session(session_id)
        with session.lock:
            if session.state.phase is Phase.CLOSED:
                raise SessionClosed(session_id)
            snippets = []
            for index, doc in enumerate(docs):
                try:
                    snippet = doc.to_snippet()
                    snippet.validate()
                except (ontology.InvalidSnippet, rdf.ParseError, ValueError) as exc:
                    raise InvalidSnippet(index, str(exc)) from exc
                snippets.append(snippet)
            turn = session.state.turn
            return [
                session.state.workspace.create_agenda_from_snippet(s, turn) for s in snippets
            ]

    def post_turn(self, session_id: str, doc: UserInputDocument | None) -> AgendaDocument:
        """Run one system turn; input is absent only for the opening turn."""
        session = self._session(session_id)
        if not session.turn_lock.acquire(blocking=False):
            raise TurnInProgress(session_id)
        try:
            with session.lock:
                state = session.state
                user_input = None
                if doc is not None:
                    try:
                        user_input = doc.to_user_input()
                    except (rdf.ParseError, ValueError) as exc:
                        raise MalformedDocument(str(exc)) from exc
                turn = state.turn
                selected = state.run_turn(user_input)
                return agenda_document_for(
                    session_id, turn, selected, closed=state.phase is Phase.CLOSED
                )
        finally:
            session.turn_lock.release()

    def get_workspace(self, session_id: str) -> dict:
        """Read-only inspector snapshot of the session's workspace."""
        session = self._session(session_id)
        with session.lock:
            state = session.state
            agendas = []
            for agenda in state.workspace.agendas.values():
                agendas.append(
                    {
                        "agenda_id": agenda.agenda_id,
                        "kind": agenda.kind.value,
                        "dialogue_action": None if agenda.action is None else agenda.action.value,
                        "semantics": list(semantics_lines(agenda.semantics)),
                        "inserted_turn": agenda.inserted_turn,
                        "staleness": staleness(agenda, state.turn),
                        "source_snippet": agenda.source_snippet,
                    }
                )
            return {
                "session_id": session_id,
                "turn": state.turn,
                "phase": state.phase.value,
                "agendas": agendas,
            }
