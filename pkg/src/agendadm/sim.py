"""Deterministic stand-ins for the external knowledge and language modules.

A domain preset bundles everything those modules would contribute: a release
schedule of knowledge snippets, ordered text-to-triples rules, and templates
rendering agenda documents back to text.  Presets are immutable after load
and the three stubs (ki_release, nlu, nlg) are pure functions over them, so
identical inputs always produce identical dialogues.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from . import rdf
from .ontology import DialogueAction, GrammarMove, InformationSnippet, Marker, UtteranceMove
from .presenter import UserAction
from .rdf import Term, TripleSet
from .wire import AgendaDocument, SnippetDocument, UserInputDocument, semantics_lines

_SLOT = re.compile(r"\{(\w+)\}")
_NLG_SLOTS = frozenset({"subject", "predicate", "object", "var"})


class PresetError(ValueError):
    """The preset file violates the documented schema."""


class MissingTemplate(KeyError):
    """No generation template for the requested dialogue action."""


@dataclass(frozen=True)
class ScheduledSnippet:
    release_turn: int
    snippet: InformationSnippet


@dataclass(frozen=True)
class NluRule:
    """First matching rule wins; named captures fill the triple templates."""

    pattern: re.Pattern
    action: UserAction
    semantics_templates: tuple[str, ...]


@dataclass(frozen=True)
class SpeechEntry:
    """A legacy predefined prompt/grammar pair, loadable but never selected."""

    agenda_id: str
    utterance: UtteranceMove | None
    grammars: tuple[GrammarMove, ...]


@dataclass(frozen=True)
class DomainPreset:
    name: str
    snippets: tuple[ScheduledSnippet, ...]
    nlu_rules: tuple[NluRule, ...]
    nlg_templates: dict[DialogueAction, str]
    labels: dict[str, str]
    speech: tuple[SpeechEntry, ...] = ()


EMPTY_PRESET = DomainPreset(
    name="",
    snippets=(),
    nlu_rules=(),
    nlg_templates={
        DialogueAction.GREET: "Hello.",
        DialogueAction.ACKNOWLEDGE: "Okay.",
        DialogueAction.THANK: "Goodbye.",
        DialogueAction.INFORM: "{subject} {predicate}: {object}.",
        DialogueAction.REQUEST: "What is {predicate}?",
    },
    labels={},
)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _parse_semantics(lines: object, where: str) -> TripleSet:
    if not isinstance(lines, list) or any(not isinstance(s, str) for s in lines):
        raise PresetError(f"{where}: semantics must be a list of triple strings")
    try:
        return rdf.parse_document("\n".join(lines))
    except rdf.ParseError as exc:
        raise PresetError(f"{where}: {exc}") from exc


def _load_snippets(raw: object) -> tuple[ScheduledSnippet, ...]:
    if not isinstance(raw, list):
        raise PresetError("snippets must be a list")
    out = []
    for i, entry in enumerate(raw):
        where = f"snippets[{i}]"
        if not isinstance(entry, dict):
            raise PresetError(f"{where}: expected an object")
        try:
            marker = Marker(entry["marker"])
            release_turn = entry["release_turn"]
            snippet_id = entry["snippet_id"]
        except (KeyError, ValueError) as exc:
            raise PresetError(f"{where}: {exc}") from exc
        if not isinstance(release_turn, int) or release_turn < 0:
            raise PresetError(f"{where}: release_turn must be a non-negative integer")
        if not isinstance(snippet_id, str) or not snippet_id:
            raise PresetError(f"{where}: snippet_id must be a non-empty string")
        snippet = InformationSnippet(
            marker, _parse_semantics(entry.get("semantics"), where), snippet_id
        )
        try:
            snippet.validate()
        except ValueError as exc:
            raise PresetError(f"{where}: {exc}") from exc
        out.append(ScheduledSnippet(release_turn, snippet))
    return tuple(out)


def _load_rules(raw: object) -> tuple[NluRule, ...]:
    if not isinstance(raw, list):
        raise PresetError("nlu_rules must be a list")
    out = []
    for i, entry in enumerate(raw):
        where = f"nlu_rules[{i}]"
        if not isinstance(entry, dict):
            raise PresetError(f"{where}: expected an object")
        try:
            pattern = re.compile(entry["pattern"], re.IGNORECASE)
            action = UserAction(entry["dialogue_action"])
        except KeyError as exc:
            raise PresetError(f"{where}: missing key {exc}") from exc
        except (re.error, ValueError) as exc:
            raise PresetError(f"{where}: {exc}") from exc
        templates = entry.get("semantics", [])
        if not isinstance(templates, list) or any(not isinstance(t, str) for t in templates):
            raise PresetError(f"{where}: semantics must be a list of triple templates")
        out.append(NluRule(pattern, action, tuple(templates)))
    return tuple(out)


def _load_templates(raw: object) -> dict[DialogueAction, str]:
    if not isinstance(raw, dict):
        raise PresetError("nlg_templates must be an object")
    templates = {}
    for action in DialogueAction:
        if action.value not in raw:
            raise PresetError(f"nlg_templates: missing template for {action.value!r}")
        text = raw[action.value]
        if not isinstance(text, str):
            raise PresetError(f"nlg_templates: {action.value} must be a string")
        for slot in _SLOT.findall(text):
            if slot not in _NLG_SLOTS:
                raise PresetError(f"nlg_templates: {action.value} uses unknown slot {{{slot}}}")
        templates[action] = text
    extra = set(raw) - {a.value for a in DialogueAction}
    if extra:
        raise PresetError(f"nlg_templates: unknown action {sorted(extra)[0]!r}")
    return templates


def _load_speech(raw: object) -> tuple[SpeechEntry, ...]:
    if not isinstance(raw, list):
        raise PresetError("speech must be a list")
    out = []
    for i, entry in enumerate(raw):
        where = f"speech[{i}]"
        if not isinstance(entry, dict) or "agenda_id" not in entry:
            raise PresetError(f"{where}: expected an object with agenda_id")
        utterance = None
        if entry.get("utterance") is not None:
            u = entry["utterance"]
            try:
                utterance = UtteranceMove(u["id"], u["utterance"])
            except (TypeError, KeyError, ValueError) as exc:
                raise PresetError(f"{where}: bad utterance move: {exc}") from exc
        grammars = []
        for g in entry.get("grammars", []):
            try:
                grammars.append(GrammarMove(g["id"], g["pattern"]))
            except (TypeError, KeyError, ValueError) as exc:
                raise PresetError(f"{where}: bad grammar move: {exc}") from exc
        if not grammars:
            raise PresetError(f"{where}: needs at least one grammar move")
        out.append(SpeechEntry(entry["agenda_id"], utterance, tuple(grammars)))
    return tuple(out)


def load_preset(path: str | Path) -> DomainPreset:
    """Read one preset file (documented schema, format version 1)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PresetError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise PresetError(f"{path}: preset must be an object")
    if raw.get("format") != 1:
        raise PresetError(f"{path}: unsupported format {raw.get('format')!r}")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise PresetError(f"{path}: name must be a non-empty string")
    labels = raw.get("labels", {})
    if not isinstance(labels, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in labels.items()
    ):
        raise PresetError(f"{path}: labels must map IRI strings to words")
    try:
        return DomainPreset(
            name=name,
            snippets=_load_snippets(raw.get("snippets", [])),
            nlu_rules=_load_rules(raw.get("nlu_rules", [])),
            nlg_templates=_load_templates(raw.get("nlg_templates", {})),
            labels=dict(labels),
            speech=_load_speech(raw.get("speech", [])),
        )
    except PresetError as exc:
        raise PresetError(f"{path}: {exc}") from exc


def load_preset_dir(directory: str | Path) -> dict[str, DomainPreset]:
    """Load every *.json preset in a directory, keyed by preset name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise PresetError(f"{directory}: not a directory")
    presets = {}
    for path in sorted(directory.glob("*.json")):
        preset = load_preset(path)
        if preset.name in presets:
            raise PresetError(f"{path}: duplicate preset name {preset.name!r}")
        presets[preset.name] = preset
    return presets


def packaged_presets_dir() -> Path:
    """The preset files shipped inside this package."""
    return Path(__file__).resolve().parent / "presets"


# ---------------------------------------------------------------------------
# The stubs
# ---------------------------------------------------------------------------


def ki_release(preset: DomainPreset, current_turn: int, session_id: str = "") -> list[SnippetDocument]:
    """All snippets scheduled for this turn, in file order."""
    return [
        SnippetDocument(
            session_id=session_id,
            snippet_id=s.snippet.snippet_id,
            marker=s.snippet.marker.value,
            semantics=semantics_lines(s.snippet.semantics),
        )
        for s in preset.snippets
        if s.release_turn == current_turn
    ]


def _fill_capture(template: str, captures: dict[str, str]) -> str:
    def replace(m: re.Match) -> str:
        name = m.group(1)
        if name not in captures or captures[name] is None:
            raise PresetError(f"nlu rule captures nothing for slot {{{name}}}")
        return rdf.escape_literal(captures[name])

    return _SLOT.sub(replace, template)


def nlu(preset: DomainPreset, text: str, session_id: str = "") -> UserInputDocument:
    """Map user text to a semantic input; unmatched text becomes a plain
    acknowledgement so the dialogue never stalls on a coverage gap."""
    for rule in preset.nlu_rules:
        m = rule.pattern.search(text)
        if m is None:
            continue
        lines = [_fill_capture(t, m.groupdict()) for t in rule.semantics_templates]
        try:
            ts = rdf.parse_document("\n".join(lines))
        except rdf.ParseError as exc:
            raise PresetError(f"nlu rule {rule.pattern.pattern!r} builds bad triples: {exc}") from exc
        return UserInputDocument(
            session_id=session_id,
            dialogue_action=rule.action.value,
            semantics=semantics_lines(ts),
        )
    return UserInputDocument(session_id=session_id, dialogue_action="acknowledge", semantics=())


def _label(preset: DomainPreset, iri_value: str) -> str:
    if iri_value in preset.labels:
        return preset.labels[iri_value]
    return re.split(r"[/#:]", iri_value)[-1]


def _render_term(preset: DomainPreset, term: Term) -> str:
    if term.is_variable:
        return term.value
    if term.kind is rdf.TermKind.IRI:
        return _label(preset, term.value)
    return term.value


def _render_triple(preset: DomainPreset, template: str, triple: rdf.Triple) -> str:
    values = {
        "subject": _label(preset, triple.subject.value),
        "predicate": _label(preset, triple.predicate.value),
        "object": _render_term(preset, triple.object),
        "var": triple.object.value if triple.object.is_variable else _render_term(preset, triple.object),
    }
    return _SLOT.sub(lambda m: values[m.group(1)], template)


def nlg(preset: DomainPreset, doc: AgendaDocument) -> str:
    """Render an agenda document as one deterministic utterance."""
    try:
        action = DialogueAction(doc.dialogue_action)
        template = preset.nlg_templates[action]
    except (ValueError, KeyError) as exc:
        raise MissingTemplate(doc.dialogue_action) from exc
    if action in (DialogueAction.INFORM, DialogueAction.REQUEST):
        triples = doc.triple_set()
        return " ".join(_render_triple(preset, template, t) for t in triples)
    return template
