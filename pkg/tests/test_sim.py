"""Tests for preset loading and the knowledge/language stand-ins."""

from __future__ import annotations

import json

import pytest

from agendadm import rdf
from agendadm.ontology import DialogueAction, Marker
from agendadm.presenter import DialogueState, UserAction
from agendadm.sim import (
    EMPTY_PRESET,
    DomainPreset,
    MissingTemplate,
    PresetError,
    ki_release,
    load_preset,
    load_preset_dir,
    nlg,
    nlu,
    packaged_presets_dir,
)
from agendadm.wire import AgendaDocument

CLINIC = load_preset(packaged_presets_dir() / "clinic_demo.json")


def agenda_doc(action: str, lines: tuple[str, ...] = ()) -> AgendaDocument:
    return AgendaDocument("s1", 0, "a1", action, lines, False)


def write_preset(tmp_path, name="p", **overrides):
    data = {
        "format": 1,
        "name": name,
        "labels": {},
        "snippets": [],
        "nlu_rules": [],
        "nlg_templates": {
            "inform": "{subject} {predicate}: {object}.",
            "request": "What is {predicate}?",
            "greet": "Hello.",
            "acknowledge": "Okay.",
            "thank": "Goodbye.",
        },
    }
    data.update(overrides)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def test_packaged_presets_load():
    presets = load_preset_dir(packaged_presets_dir())
    assert set(presets) == {"clinic_demo", "minimal"}
    assert presets["clinic_demo"].name == "clinic_demo"
    assert len(presets["clinic_demo"].snippets) == 5
    assert set(presets["clinic_demo"].nlg_templates) == set(DialogueAction)


@pytest.mark.parametrize(
    "overrides",
    [
        {"format": 2},
        {"name": ""},
        {"nlg_templates": {"greet": "Hi."}},
        {"nlg_templates": {"inform": "{obj}.", "request": "r", "greet": "g", "acknowledge": "a", "thank": "t"}},
        {"nlu_rules": [{"pattern": "(unclosed", "dialogue_action": "inform", "semantics": []}]},
        {"nlu_rules": [{"pattern": "x", "dialogue_action": "shout", "semantics": []}]},
        {"snippets": [{"snippet_id": "s", "marker": "informable", "release_turn": -1, "semantics": ['<u:s> <u:p> "v" .']}]},
        {"snippets": [{"snippet_id": "s", "marker": "informable", "release_turn": 0, "semantics": ["<u:s> <u:p> ?v ."]}]},
        {"snippets": [{"snippet_id": "s", "marker": "suggestable", "release_turn": 0, "semantics": ['<u:s> <u:p> "v" .']}]},
        {"labels": {"u:p": 3}},
    ],
)
def test_bad_presets_are_rejected(tmp_path, overrides):
    path = write_preset(tmp_path, **overrides)
    with pytest.raises(PresetError):
        load_preset(path)


def test_duplicate_preset_names_in_dir_are_rejected(tmp_path):
    first = write_preset(tmp_path, name="same")
    (tmp_path / "other_file.json").write_text(first.read_text(), encoding="utf-8")
    with pytest.raises(PresetError):
        load_preset_dir(tmp_path)


def test_missing_dir_is_rejected(tmp_path):
    with pytest.raises(PresetError):
        load_preset_dir(tmp_path / "nope")


def test_speech_section_loads_legacy_moves(tmp_path):
    path = write_preset(
        tmp_path,
        speech=[
            {
                "agenda_id": "legacy_hello",
                "utterance": {"id": "hello", "utterance": "Welcome!"},
                "grammars": [{"id": "yes", "pattern": "yes|yeah"}],
            }
        ],
    )
    preset = load_preset(path)
    assert preset.speech[0].agenda_id == "legacy_hello"
    assert preset.speech[0].utterance.utterance == "Welcome!"
    assert preset.speech[0].grammars[0].pattern == "yes|yeah"


# ---------------------------------------------------------------------------
# ki_release
# ---------------------------------------------------------------------------


def test_ki_release_schedule():
    by_turn = {t: ki_release(CLINIC, t, "s1") for t in range(10)}
    assert [d.snippet_id for d in by_turn[0]] == ["s_appt", "s_pain"]
    assert by_turn[1] == []
    assert [d.snippet_id for d in by_turn[2]] == ["s_doctor"]
    assert [d.snippet_id for d in by_turn[8]] == ["s_doctor_again"]
    assert all(d.session_id == "s1" for d in by_turn[0])


def test_ki_release_documents_are_valid_snippets():
    for turn in range(10):
        for doc in ki_release(CLINIC, turn):
            snippet = doc.to_snippet()
            snippet.validate()
            assert snippet.marker in (Marker.INFORMABLE, Marker.REQUESTABLE)


# ---------------------------------------------------------------------------
# nlu
# ---------------------------------------------------------------------------


def test_nlu_request_rule():
    doc = nlu(CLINIC, "when is my appointment", "s1")
    assert doc.dialogue_action == "request"
    assert doc.semantics == ("<clinic:p1> <clinic:hasAppointment> ?when .",)
    assert doc.session_id == "s1"


def test_nlu_capture_substitution():
    doc = nlu(CLINIC, "my pain level is 7")
    assert doc.dialogue_action == "inform"
    assert doc.semantics == ('<clinic:p1> <clinic:hasPainLevel> "7" .',)


def test_nlu_is_case_insensitive():
    assert nlu(CLINIC, "WHEN IS MY APPOINTMENT").dialogue_action == "request"


def test_nlu_fallback_acknowledge():
    doc = nlu(CLINIC, "qwertyuiop")
    assert doc.dialogue_action == "acknowledge"
    assert doc.semantics == ()


def test_nlu_thank_rule():
    assert nlu(CLINIC, "thanks").dialogue_action == "thank"


def test_nlu_first_matching_rule_wins():
    preset = DomainPreset(
        name="p",
        snippets=(),
        nlu_rules=(
            _rule("hello", UserAction.GREET),
            _rule("hello world", UserAction.THANK),
        ),
        nlg_templates=dict(EMPTY_PRESET.nlg_templates),
        labels={},
    )
    assert nlu(preset, "hello world").dialogue_action == "greet"


def _rule(pattern, action, templates=()):
    import re

    from agendadm.sim import NluRule

    return NluRule(re.compile(pattern, re.IGNORECASE), action, tuple(templates))


def test_nlu_captures_are_escaped_as_literals():
    preset = DomainPreset(
        name="p",
        snippets=(),
        nlu_rules=(_rule("say (?P<x>.+)", UserAction.INFORM, ('<u:s> <u:p> "{x}" .',)),),
        nlg_templates=dict(EMPTY_PRESET.nlg_templates),
        labels={},
    )
    doc = nlu(preset, 'say "this" \\ that')
    parsed = rdf.parse_document("\n".join(doc.semantics))
    assert parsed.triples[0].object.value == '"this" \\ that'


def test_nlu_is_deterministic():
    assert nlu(CLINIC, "i feel fine") == nlu(CLINIC, "i feel fine")


# ---------------------------------------------------------------------------
# nlg
# ---------------------------------------------------------------------------


def test_nlg_fixed_general_texts():
    assert nlg(CLINIC, agenda_doc("greet")) == "Hello, how can I help you?"
    assert nlg(CLINIC, agenda_doc("acknowledge")) == "I see."
    assert nlg(CLINIC, agenda_doc("thank")) == "Thank you for the conversation. Goodbye!"


def test_nlg_inform_uses_labels():
    doc = agenda_doc("inform", ('<clinic:p1> <clinic:hasAppointment> "tuesday" .',))
    assert nlg(CLINIC, doc) == "Your appointment is tuesday."


def test_nlg_request_uses_labels():
    doc = agenda_doc("request", ("<clinic:p1> <clinic:hasPainLevel> ?level .",))
    assert nlg(CLINIC, doc) == "Please tell me your pain level."


def test_nlg_label_falls_back_to_local_name():
    doc = agenda_doc("inform", ('<u:x> <u:hasShoeSize> "44" .',))
    assert nlg(CLINIC, doc) == "Your hasShoeSize is 44."


def test_nlg_multiple_triples_join_in_canonical_order():
    doc = agenda_doc(
        "inform",
        (
            '<clinic:p1> <clinic:hasAppointment> "tuesday" .',
            '<clinic:p1> <clinic:hasDoctor> "Dr. Adams" .',
        ),
    )
    assert nlg(CLINIC, doc) == "Your appointment is tuesday. Your doctor is Dr. Adams."


def test_nlg_var_slot_renders_variable_name():
    preset = DomainPreset(
        name="p",
        snippets=(),
        nlu_rules=(),
        nlg_templates={**EMPTY_PRESET.nlg_templates, DialogueAction.REQUEST: "Missing: {var}?"},
        labels={},
    )
    doc = agenda_doc("request", ("<u:s> <u:p> ?shoe_size .",))
    assert nlg(preset, doc) == "Missing: shoe_size?"


def test_nlg_missing_template():
    preset = DomainPreset(
        name="p",
        snippets=(),
        nlu_rules=(),
        nlg_templates={DialogueAction.GREET: "Hello."},
        labels={},
    )
    with pytest.raises(MissingTemplate):
        nlg(preset, agenda_doc("inform", ('<u:s> <u:p> "v" .',)))


def test_nlg_is_deterministic():
    doc = agenda_doc("inform", ('<clinic:p1> <clinic:hasMood> "fine" .',))
    assert nlg(CLINIC, doc) == nlg(CLINIC, doc)


# ---------------------------------------------------------------------------
# Closed loop: everything the preset can ask, a user line can answer
# ---------------------------------------------------------------------------

ANSWERS = {
    "s_pain": "my pain level is 4",
    "s_mood": "i feel good",
}


@pytest.mark.parametrize("scheduled", [s for s in CLINIC.snippets if s.snippet.marker is Marker.REQUESTABLE], ids=lambda s: s.snippet.snippet_id)
def test_every_request_pattern_is_answerable(scheduled):
    state = DialogueState("s")
    state.run_turn()
    agenda_id = state.workspace.create_agenda_from_snippet(scheduled.snippet, 1)
    asked = state.run_turn(
        nlu(CLINIC, "unrecognized filler", "s").to_user_input()
    )
    assert asked.agenda_id == agenda_id  # the system asks the question
    nlg(CLINIC, AgendaDocument("s", 1, agenda_id, asked.action.value, tuple(t.serialized() for t in asked.semantics), False))
    answer = nlu(CLINIC, ANSWERS[scheduled.snippet.snippet_id], "s")
    assert answer.dialogue_action == "inform"
    state.run_turn(answer.to_user_input())
    assert agenda_id not in state.workspace.agendas
