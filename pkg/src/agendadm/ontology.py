"""The dialogue model: agendas, the workspace, and knowledge snippets.

The model splits into a static speech part (predefined utterance and grammar
moves, kept for loading older domain definitions) and a dynamic state part:
agendas created on the fly from knowledge snippets, each carrying exactly one
dialogue action plus its triple semantics and the turn at which it entered
the workspace.  Three general agendas (greet, acknowledge, thank) are domain
independent and always present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from . import rdf
from .rdf import Binding, TripleSet


class DialogueAction(str, Enum):
    INFORM = "inform"
    REQUEST = "request"
    GREET = "greet"
    ACKNOWLEDGE = "acknowledge"
    THANK = "thank"


DYNAMIC_ACTIONS = frozenset({DialogueAction.INFORM, DialogueAction.REQUEST})
GENERAL_ACTIONS = frozenset(
    {DialogueAction.GREET, DialogueAction.ACKNOWLEDGE, DialogueAction.THANK}
)

GENERAL_AGENDA_IDS = {
    DialogueAction.GREET: "g_greet",
    DialogueAction.ACKNOWLEDGE: "g_ack",
    DialogueAction.THANK: "g_thank",
}


class AgendaKind(str, Enum):
    DYNAMIC = "dynamic"
    GENERAL = "general"
    LEGACY = "legacy"


class Marker(str, Enum):
    INFORMABLE = "informable"
    REQUESTABLE = "requestable"


class InvalidSnippet(ValueError):
    pass


class InvalidAgenda(ValueError):
    pass


class UnknownAgenda(LookupError):
    pass


class GeneralAgendaImmutable(ValueError):
    pass


class TurnUnderflow(ValueError):
    pass


@dataclass(frozen=True)
class UtteranceMove:
    """A predefined system prompt from the static speech part."""

    id: str
    utterance: str

    def __post_init__(self):
        if not self.utterance:
            raise ValueError("utterance must be non-empty")


@dataclass(frozen=True)
class GrammarMove:
    """A predefined user-input grammar expression, stored opaquely."""

    id: str
    pattern: str

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("grammar pattern must be non-empty")


@dataclass(frozen=True)
class InformationSnippet:
    """One unit of contextual knowledge offered by the knowledge module.

    Informable snippets carry ground facts the system may state; requestable
    snippets carry a pattern with at least one variable marking the unknown
    the system should ask about.
    """

    marker: Marker
    semantics: TripleSet
    snippet_id: str

    def validate(self) -> None:
        if not self.semantics:
            raise InvalidSnippet(f"snippet {self.snippet_id!r}: semantics must be non-empty")
        if self.marker is Marker.INFORMABLE and not rdf.is_ground(self.semantics):
            raise InvalidSnippet(
                f"snippet {self.snippet_id!r}: informable semantics must be ground"
            )
        if self.marker is Marker.REQUESTABLE and rdf.is_ground(self.semantics):
            raise InvalidSnippet(
                f"snippet {self.snippet_id!r}: requestable semantics need a variable"
            )


@dataclass(frozen=True)
class Agenda:
    """One candidate system action held in the workspace."""

    agenda_id: str
    kind: AgendaKind
    action: DialogueAction | None
    semantics: TripleSet
    inserted_turn: int
    utterance_move: UtteranceMove | None = None
    grammar_moves: tuple[GrammarMove, ...] = ()
    source_snippet: str | None = None

    def validate(self) -> None:
        if self.inserted_turn < 0:
            raise InvalidAgenda(f"agenda {self.agenda_id!r}: inserted_turn must be >= 0")
        if self.kind is AgendaKind.DYNAMIC:
            if self.action not in DYNAMIC_ACTIONS:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: dynamic agendas inform or request")
            if self.utterance_move is not None:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: dynamic agendas carry no utterance")
            if not self.semantics:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: dynamic agendas need semantics")
            if self.action is DialogueAction.INFORM and not rdf.is_ground(self.semantics):
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: inform semantics must be ground")
            if self.action is DialogueAction.REQUEST and rdf.is_ground(self.semantics):
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: request semantics need a variable")
        elif self.kind is AgendaKind.GENERAL:
            if self.action not in GENERAL_ACTIONS:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: not a general action")
            if self.semantics:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: general agendas carry no semantics")
        else:
            if self.action is not None:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: legacy agendas have no action")
            if not self.grammar_moves:
                raise InvalidAgenda(f"agenda {self.agenda_id!r}: legacy agendas need grammar moves")


def staleness(agenda: Agenda, current_turn: int) -> int:
    """Turns elapsed since the agenda entered the workspace."""
    if current_turn < agenda.inserted_turn:
        raise TurnUnderflow(
            f"current turn {current_turn} precedes insertion turn {agenda.inserted_turn}"
        )
    return current_turn - agenda.inserted_turn


def _general_agendas() -> list[Agenda]:
    return [
        Agenda(
            agenda_id=GENERAL_AGENDA_IDS[action],
            kind=AgendaKind.GENERAL,
            action=action,
            semantics=TripleSet(),
            inserted_turn=0,
        )
        for action in (DialogueAction.GREET, DialogueAction.ACKNOWLEDGE, DialogueAction.THANK)
    ]


def dynamic_order_key(agenda: Agenda) -> tuple:
    """Ordering for dynamic agendas: insertion turn, then creation serial.

    Generated ids are ``a<serial>``; serial order equals insertion order even
    past ten agendas, which raw string order would not preserve.
    """
    try:
        serial = int(agenda.agenda_id[1:])
        return (agenda.inserted_turn, 0, serial, "")
    except ValueError:
        return (agenda.inserted_turn, 1, 0, agenda.agenda_id)


class WorkSpace:
    """All agendas that might be executed in following turns.

    The three general agendas are created up front and can never be removed;
    dynamic agendas come and go as snippets arrive and actions execute.
    """

    def __init__(self):
        self.agendas: dict[str, Agenda] = {a.agenda_id: a for a in _general_agendas()}
        self.next_serial = 1

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, WorkSpace)
            and self.next_serial == other.next_serial
            and list(self.agendas.items()) == list(other.agendas.items())
        )

    def __len__(self) -> int:
        return len(self.agendas)

    def agenda(self, agenda_id: str) -> Agenda:
        try:
            return self.agendas[agenda_id]
        except KeyError:
            raise UnknownAgenda(agenda_id) from None

    def general(self, action: DialogueAction) -> Agenda:
        return self.agendas[GENERAL_AGENDA_IDS[action]]

    def dynamic_agendas(self, action: DialogueAction | None = None) -> list[Agenda]:
        """Live dynamic agendas, optionally restricted to one action type,
        in insertion-age order."""
        found = [
            a
            for a in self.agendas.values()
            if a.kind is AgendaKind.DYNAMIC and (action is None or a.action is action)
        ]
        found.sort(key=dynamic_order_key)
        return found

    def create_agenda_from_snippet(self, snippet: InformationSnippet, current_turn: int) -> str:
        """Turn a snippet into a dynamic agenda and return its id.

        Re-sending a snippet whose marker and canonical semantics match a
        live agenda is harmless: the existing id is returned unchanged.
        """
        snippet.validate()
        action = (
            DialogueAction.INFORM
            if snippet.marker is Marker.INFORMABLE
            else DialogueAction.REQUEST
        )
        for agenda in self.agendas.values():
            if (
                agenda.kind is AgendaKind.DYNAMIC
                and agenda.action is action
                and agenda.semantics == snippet.semantics
            ):
                return agenda.agenda_id
        agenda_id = f"a{self.next_serial}"
        self.next_serial += 1
        agenda = Agenda(
            agenda_id=agenda_id,
            kind=AgendaKind.DYNAMIC,
            action=action,
            semantics=snippet.semantics,
            inserted_turn=current_turn,
            source_snippet=snippet.snippet_id,
        )
        agenda.validate()
        self.agendas[agenda_id] = agenda
        return agenda_id

    def add_legacy_agenda(
        self,
        agenda_id: str,
        grammar_moves: list[GrammarMove],
        utterance_move: UtteranceMove | None = None,
        inserted_turn: int = 0,
    ) -> str:
        """Load a move-based agenda from a static speech definition.

        Legacy agendas are representable and inspectable but never selected
        by the dialogue policy.
        """
        if agenda_id in self.agendas:
            raise InvalidAgenda(f"agenda id {agenda_id!r} already in use")
        agenda = Agenda(
            agenda_id=agenda_id,
            kind=AgendaKind.LEGACY,
            action=None,
            semantics=TripleSet(),
            inserted_turn=inserted_turn,
            utterance_move=utterance_move,
            grammar_moves=tuple(grammar_moves),
        )
        agenda.validate()
        self.agendas[agenda_id] = agenda
        return agenda_id

    def remove_agenda(self, agenda_id: str) -> None:
        agenda = self.agenda(agenda_id)
        if agenda.kind is AgendaKind.GENERAL:
            raise GeneralAgendaImmutable(f"cannot remove general agenda {agenda_id!r}")
        del self.agendas[agenda_id]

    def find_answering_agendas(self, request_pattern: TripleSet) -> list[tuple[str, Binding]]:
        """Inform agendas whose semantics satisfy the request pattern,
        oldest first."""
        hits = []
        for agenda in self.dynamic_agendas(DialogueAction.INFORM):
            binding = rdf.match_pattern(request_pattern, agenda.semantics)
            if binding is not None:
                hits.append((agenda.agenda_id, binding))
        return hits


# ---------------------------------------------------------------------------
# Workspace snapshot persistence: load(save(ws)) reproduces ws exactly.
# ---------------------------------------------------------------------------


def _agenda_to_obj(agenda: Agenda) -> dict:
    return {
        "agenda_id": agenda.agenda_id,
        "kind": agenda.kind.value,
        "action": agenda.action.value if agenda.action else None,
        "semantics": [t.serialized() for t in agenda.semantics],
        "inserted_turn": agenda.inserted_turn,
        "utterance_move": (
            {"id": agenda.utterance_move.id, "utterance": agenda.utterance_move.utterance}
            if agenda.utterance_move
            else None
        ),
        "grammar_moves": [{"id": m.id, "pattern": m.pattern} for m in agenda.grammar_moves],
        "source_snippet": agenda.source_snippet,
    }


def _agenda_from_obj(obj: dict) -> Agenda:
    move = obj.get("utterance_move")
    agenda = Agenda(
        agenda_id=obj["agenda_id"],
        kind=AgendaKind(obj["kind"]),
        action=DialogueAction(obj["action"]) if obj.get("action") else None,
        semantics=rdf.parse_document("\n".join(obj.get("semantics", []))),
        inserted_turn=obj["inserted_turn"],
        utterance_move=UtteranceMove(move["id"], move["utterance"]) if move else None,
        grammar_moves=tuple(
            GrammarMove(m["id"], m["pattern"]) for m in obj.get("grammar_moves", [])
        ),
        source_snippet=obj.get("source_snippet"),
    )
    agenda.validate()
    return agenda


def save_workspace(ws: WorkSpace) -> str:
    obj = {
        "next_serial": ws.next_serial,
        "agendas": [_agenda_to_obj(a) for a in ws.agendas.values()],
    }
    return json.dumps(obj, indent=2, ensure_ascii=False)


def load_workspace(text: str) -> WorkSpace:
    obj = json.loads(text)
    ws = WorkSpace()
    ws.agendas = {}
    for entry in obj["agendas"]:
        agenda = _agenda_from_obj(entry)
        ws.agendas[agenda.agenda_id] = agenda
    for required in GENERAL_AGENDA_IDS.values():
        if required not in ws.agendas:
            raise InvalidAgenda(f"snapshot is missing general agenda {required!r}")
    ws.next_serial = obj["next_serial"]
    return ws
