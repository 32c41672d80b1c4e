"""Dialogue control: the per-turn cycle of input handling and agenda selection.

Each turn applies the user input to the workspace, picks the next agenda with
a strict priority cascade, applies lifecycle removals, and records the turn:

    0. closure pending (user said bye)      -> thank
    1. first turn of the session            -> greet
    2. a user request is pending:
         a. a held inform agenda answers it -> that inform (then removed)
         b. otherwise                       -> acknowledge, once; the pending
            pattern stays answerable for one more turn, then is dropped
    3. oldest live request agenda, else oldest live inform agenda
       (insertion turn, then creation order; informs are one-shot,
       requests persist until answered)
    4. fallback                             -> acknowledge

Answers take precedence over system initiative, old agendas over new ones,
and every step is deterministic: equal states and inputs give equal outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from . import rdf
from .ontology import DialogueAction, WorkSpace
from .rdf import Binding, TripleSet


class Phase(str, Enum):
    FRESH = "fresh"
    RUNNING = "running"
    CLOSED = "closed"


class UserAction(str, Enum):
    """Communicative function of one user utterance; bye ends the session."""

    INFORM = "inform"
    REQUEST = "request"
    GREET = "greet"
    ACKNOWLEDGE = "acknowledge"
    THANK = "thank"
    BYE = "bye"


class SessionClosed(Exception):
    pass


class InvalidUserInput(ValueError):
    pass


class TurnInProgress(Exception):
    """A second concurrent turn was attempted on the same session."""


@dataclass(frozen=True)
class UserInput:
    action: UserAction
    semantics: TripleSet = field(default_factory=TripleSet)

    def validate(self) -> None:
        if self.action is UserAction.INFORM:
            if not self.semantics:
                raise InvalidUserInput("inform input needs semantics")
            if not rdf.is_ground(self.semantics):
                raise InvalidUserInput("inform semantics must be ground")
        elif self.action is UserAction.REQUEST:
            if rdf.is_ground(self.semantics):
                raise InvalidUserInput("request semantics need a variable")
        elif self.semantics:
            raise InvalidUserInput(f"{self.action.value} input carries no semantics")


@dataclass(frozen=True)
class SelectedAction:
    """The system action executed this turn, as handed to the wire layer."""

    agenda_id: str
    action: DialogueAction
    semantics: TripleSet
    binding: Binding | None = None


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    user_input: UserInput | None
    agenda_id: str
    action: DialogueAction
    semantics: TripleSet
    binding: Binding | None


@dataclass
class _Effects:
    """Post-selection state changes, computed purely and applied by run_turn."""

    answered_agenda: str | None = None
    ack_pending: bool = False
    drop_pending: bool = False
    consume_inform: str | None = None


class DialogueState:
    """One dialogue session: workspace, pending request, facts, and history.

    Turns within a session run strictly serially; the service layer enforces
    that with a per-session lock and rejects overlap with TurnInProgress.
    """

    def __init__(self, session_id: str, workspace: WorkSpace | None = None):
        self.session_id = session_id
        self.turn = 0
        self.phase = Phase.FRESH
        self.workspace = workspace if workspace is not None else WorkSpace()
        self.pending_user_request: TripleSet | None = None
        self.history: list[TurnRecord] = []
        self.facts = TripleSet()
        self._pending_acked = False
        self._closure_pending = False

    # -- input handling ----------------------------------------------------

    def apply_user_input(self, user_input: UserInput) -> None:
        """Update workspace and session state from one user utterance."""
        user_input.validate()
        if user_input.action is UserAction.INFORM:
            self.facts = self.facts.union(user_input.semantics)
            for agenda in self.workspace.dynamic_agendas(DialogueAction.REQUEST):
                if rdf.match_pattern(agenda.semantics, self.facts) is not None:
                    self.workspace.remove_agenda(agenda.agenda_id)
        elif user_input.action is UserAction.REQUEST:
            self.pending_user_request = user_input.semantics
            self._pending_acked = False
        elif user_input.action is UserAction.BYE:
            self._closure_pending = True
        # greet / acknowledge / thank have no workspace effect

    # -- selection ---------------------------------------------------------

    def _general(self, action: DialogueAction) -> SelectedAction:
        agenda = self.workspace.general(action)
        return SelectedAction(agenda.agenda_id, action, agenda.semantics)

    def _select(self) -> tuple[SelectedAction, _Effects]:
        effects = _Effects()
        if self._closure_pending:
            return self._general(DialogueAction.THANK), effects
        if self.phase is Phase.FRESH:
            return self._general(DialogueAction.GREET), effects
        if self.pending_user_request is not None:
            hits = self.workspace.find_answering_agendas(self.pending_user_request)
            if hits:
                agenda_id, binding = hits[0]
                agenda = self.workspace.agenda(agenda_id)
                effects.answered_agenda = agenda_id
                return (
                    SelectedAction(agenda_id, DialogueAction.INFORM, agenda.semantics, binding),
                    effects,
                )
            if not self._pending_acked:
                effects.ack_pending = True
                return self._general(DialogueAction.ACKNOWLEDGE), effects
            effects.drop_pending = True
        requests = self.workspace.dynamic_agendas(DialogueAction.REQUEST)
        if requests:
            oldest = requests[0]
            return SelectedAction(oldest.agenda_id, DialogueAction.REQUEST, oldest.semantics), effects
        informs = self.workspace.dynamic_agendas(DialogueAction.INFORM)
        if informs:
            oldest = informs[0]
            effects.consume_inform = oldest.agenda_id
            return SelectedAction(oldest.agenda_id, DialogueAction.INFORM, oldest.semantics), effects
        return self._general(DialogueAction.ACKNOWLEDGE), effects

    def select_agenda(self) -> SelectedAction:
        """The policy decision for the current state, with no side effects."""
        return self._select()[0]

    # -- the turn cycle ------------------------------------------------------

    def run_turn(self, user_input: UserInput | None = None) -> SelectedAction:
        """Run one complete system turn and return the executed action."""
        if self.phase is Phase.CLOSED:
            raise SessionClosed(self.session_id)
        if user_input is None and self.phase is not Phase.FRESH:
            raise InvalidUserInput("input may be absent only on the opening turn")
        if user_input is not None:
            self.apply_user_input(user_input)
        selected, effects = self._select()
        if effects.answered_agenda:
            self.workspace.remove_agenda(effects.answered_agenda)
            self.pending_user_request = None
            self._pending_acked = False
        if effects.ack_pending:
            self._pending_acked = True
        if effects.drop_pending:
            self.pending_user_request = None
            self._pending_acked = False
        if effects.consume_inform:
            self.workspace.remove_agenda(effects.consume_inform)
        self.history.append(
            TurnRecord(
                turn=self.turn,
                user_input=user_input,
                agenda_id=selected.agenda_id,
                action=selected.action,
                semantics=selected.semantics,
                binding=selected.binding,
            )
        )
        self.turn += 1
        if self._closure_pending:
            self.phase = Phase.CLOSED
        elif self.phase is Phase.FRESH:
            self.phase = Phase.RUNNING
        return selected


# ---------------------------------------------------------------------------
# History serialization (canonical; used for replay comparisons)
# ---------------------------------------------------------------------------


def _binding_to_obj(binding: Binding | None) -> dict | None:
    if binding is None:
        return None
    return {name: binding[name].serialized() for name in sorted(binding)}


def _record_to_obj(record: TurnRecord) -> dict:
    return {
        "turn": record.turn,
        "user_input": (
            None
            if record.user_input is None
            else {
                "dialogue_action": record.user_input.action.value,
                "semantics": [t.serialized() for t in record.user_input.semantics],
            }
        ),
        "selected": {
            "agenda_id": record.agenda_id,
            "dialogue_action": record.action.value,
            "semantics": [t.serialized() for t in record.semantics],
            "binding": _binding_to_obj(record.binding),
        },
    }


def serialize_history(state: DialogueState) -> str:
    """Canonical, byte-stable rendering of the session's turn records."""
    return json.dumps([_record_to_obj(r) for r in state.history], indent=2, ensure_ascii=False)
