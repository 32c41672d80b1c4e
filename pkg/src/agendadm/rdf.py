"""RDF-triple data model, line-based parser/serializer, and pattern matcher.

Every external interface of the dialogue manager exchanges semantics as
triples in a small N-Triples-style line grammar:

    <iri> <iri> (<iri> | "literal" | ?var) .

One triple per line, UTF-8, LF line endings, ``#``-prefixed comment lines
and blank lines ignored.  Literals escape backslash, double quote, LF and
CR (``\\\\``, ``\\"``, ``\\n``, ``\\r``); everything else is carried raw.
Variables (``?name``) mark the unknown slot of a request pattern and are
never legal in subject or predicate position.

All values here are immutable and hashable; operations are pure functions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

_VARIABLE_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class TermKind(str, Enum):
    IRI = "iri"
    LITERAL = "literal"
    VARIABLE = "variable"


class ParseError(ValueError):
    """Raised on the first malformed line; no partial results are returned."""

    def __init__(self, line: int, column: int, reason: str):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class NonGroundData(ValueError):
    """Raised when the data side of a pattern match contains variables."""


@dataclass(frozen=True)
class Term:
    """One node of a triple: an IRI, a plain literal, or a pattern variable."""

    kind: TermKind
    value: str

    def __post_init__(self):
        if self.kind is TermKind.IRI:
            if not self.value:
                raise ValueError("IRI must be non-empty")
            if any(c.isspace() for c in self.value) or "<" in self.value or ">" in self.value:
                raise ValueError(f"IRI contains whitespace or angle brackets: {self.value!r}")
        elif self.kind is TermKind.VARIABLE:
            if not _VARIABLE_NAME.match(self.value):
                raise ValueError(f"invalid variable name: {self.value!r}")

    @property
    def is_variable(self) -> bool:
        return self.kind is TermKind.VARIABLE

    def serialized(self) -> str:
        if self.kind is TermKind.IRI:
            return f"<{self.value}>"
        if self.kind is TermKind.VARIABLE:
            return f"?{self.value}"
        return '"' + escape_literal(self.value) + '"'

    def __str__(self) -> str:
        return self.serialized()


def iri(value: str) -> Term:
    return Term(TermKind.IRI, value)


def lit(value: str) -> Term:
    return Term(TermKind.LITERAL, value)


def var(name: str) -> Term:
    return Term(TermKind.VARIABLE, name)


@dataclass(frozen=True)
class Triple:
    """Subject and predicate are always IRIs; the object may be any term."""

    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if self.subject.kind is not TermKind.IRI:
            raise ValueError("triple subject must be an IRI")
        if self.predicate.kind is not TermKind.IRI:
            raise ValueError("triple predicate must be an IRI")

    @property
    def is_ground(self) -> bool:
        return not self.object.is_variable

    def serialized(self) -> str:
        return f"{self.subject.serialized()} {self.predicate.serialized()} {self.object.serialized()} ."

    def sort_key(self) -> tuple[str, str, str]:
        return (self.subject.serialized(), self.predicate.serialized(), self.object.serialized())

    def __str__(self) -> str:
        return self.serialized()


class TripleSet:
    """An immutable, deduplicated collection of triples in canonical order.

    Canonical order is lexicographic over the (subject, predicate, object)
    serialized forms, so serialization is invariant under input permutation
    and duplication.
    """

    __slots__ = ("_triples",)

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: tuple[Triple, ...] = tuple(sorted(set(triples), key=Triple.sort_key))

    @property
    def triples(self) -> tuple[Triple, ...]:
        return self._triples

    def union(self, other: Iterable[Triple]) -> "TripleSet":
        return TripleSet((*self._triples, *other))

    def variable_names(self) -> tuple[str, ...]:
        names = {t.object.value for t in self._triples if t.object.is_variable}
        return tuple(sorted(names))

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __bool__(self) -> bool:
        return bool(self._triples)

    def __contains__(self, item: Triple) -> bool:
        return item in self._triples

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TripleSet) and self._triples == other._triples

    def __hash__(self) -> int:
        return hash(self._triples)

    def __repr__(self) -> str:
        return f"TripleSet({list(self._triples)!r})"


# A binding maps variable names (no sigil) to ground terms.
Binding = dict[str, Term]


def escape_literal(value: str) -> str:
    """Escape a raw string for use inside a double-quoted literal."""
    return (
        value.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


_UNESCAPE = {"\\": "\\", '"': '"', "n": "\n", "r": "\r"}


class _LineScanner:
    """Cursor over one input line; raises ParseError with 1-based columns."""

    def __init__(self, text: str, line_no: int):
        self.text = text
        self.pos = 0
        self.line_no = line_no

    def error(self, reason: str, at: int | None = None) -> ParseError:
        column = (self.pos if at is None else at) + 1
        return ParseError(self.line_no, column, reason)

    def peek(self) -> str | None:
        return self.text[self.pos] if self.pos < len(self.text) else None

    def skip_spaces(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r":
            self.pos += 1

    def read_term(self) -> Term:
        c = self.peek()
        if c == "<":
            return self._read_iri()
        if c == '"':
            return self._read_literal()
        if c == "?":
            return self._read_variable()
        if c is None:
            raise self.error("unexpected end of line, expected a term")
        raise self.error(f"expected '<', '\"' or '?', found {c!r}")

    def _read_iri(self) -> Term:
        start = self.pos
        self.pos += 1
        end = self.text.find(">", self.pos)
        if end < 0:
            raise self.error("unterminated IRI", at=start)
        value = self.text[self.pos : end]
        self.pos = end + 1
        try:
            return iri(value)
        except ValueError as exc:
            raise self.error(str(exc), at=start) from None

    def _read_literal(self) -> Term:
        start = self.pos
        self.pos += 1
        chars: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated literal", at=start)
            c = self.text[self.pos]
            if c == '"':
                self.pos += 1
                return lit("".join(chars))
            if c == "\r":
                raise self.error("unescaped carriage return in literal")
            if c == "\\":
                if self.pos + 1 >= len(self.text):
                    raise self.error("dangling escape in literal")
                esc = self.text[self.pos + 1]
                if esc not in _UNESCAPE:
                    raise self.error(f"invalid escape sequence \\{esc}", at=self.pos)
                chars.append(_UNESCAPE[esc])
                self.pos += 2
                continue
            chars.append(c)
            self.pos += 1

    def _read_variable(self) -> Term:
        start = self.pos
        self.pos += 1
        end = self.pos
        while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
            end += 1
        name = self.text[self.pos : end]
        self.pos = end
        try:
            return var(name)
        except ValueError as exc:
            raise self.error(str(exc), at=start) from None


def _parse_line(text: str, line_no: int) -> Triple:
    scanner = _LineScanner(text, line_no)
    scanner.skip_spaces()
    subject = scanner.read_term()
    if subject.kind is not TermKind.IRI:
        raise scanner.error("subject must be an IRI")
    scanner.skip_spaces()
    predicate = scanner.read_term()
    if predicate.kind is not TermKind.IRI:
        raise scanner.error("predicate must be an IRI")
    scanner.skip_spaces()
    obj = scanner.read_term()
    scanner.skip_spaces()
    if scanner.peek() != ".":
        raise scanner.error("expected '.' terminating the triple")
    scanner.pos += 1
    scanner.skip_spaces()
    if scanner.peek() is not None:
        raise scanner.error("unexpected trailing content after '.'")
    return Triple(subject, predicate, obj)


def parse_document(text: str) -> TripleSet:
    """Parse a whole triple document into a deduplicated, ordered TripleSet.

    Blank lines and lines whose first non-blank character is ``#`` are
    skipped.  The first malformed line raises :class:`ParseError`.
    """
    triples: list[Triple] = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(_parse_line(line, line_no))
    return TripleSet(triples)


def serialize(ts: TripleSet) -> str:
    """Emit one canonical line per triple; the empty set serializes to ""."""
    return "".join(t.serialized() + "\n" for t in ts)


def is_ground(ts: TripleSet) -> bool:
    return all(t.is_ground for t in ts)


def substitute(ts: TripleSet, binding: Binding) -> TripleSet:
    """Replace bound variables by their terms; unbound variables stay put."""
    out = []
    for t in ts:
        obj = t.object
        if obj.is_variable and obj.value in binding:
            obj = binding[obj.value]
        out.append(Triple(t.subject, t.predicate, obj))
    return TripleSet(out)


def binding_sort_key(binding: Binding) -> tuple[tuple[str, str], ...]:
    """Total order over bindings: variable names ascending, then the
    serialized form of each bound term."""
    return tuple((name, binding[name].serialized()) for name in sorted(binding))


def match_pattern(pattern: TripleSet, data: TripleSet) -> Binding | None:
    """Match a variable-bearing pattern against ground data.

    Returns the first consistent binding in :func:`binding_sort_key` order
    such that every pattern triple, after substitution, is a member of
    ``data``; returns None when no binding exists.  A ground pattern that is
    a subset of ``data`` yields the empty binding.
    """
    if not is_ground(data):
        raise NonGroundData("pattern matching requires ground data")
    data_set = set(data)
    solutions: set[tuple[tuple[str, str], ...]] = set()
    terms_by_key: dict[tuple[tuple[str, str], ...], Binding] = {}

    def recurse(remaining: tuple[Triple, ...], binding: Binding):
        if not remaining:
            key = binding_sort_key(binding)
            solutions.add(key)
            terms_by_key[key] = dict(binding)
            return
        head, rest = remaining[0], remaining[1:]
        obj = head.object
        if not obj.is_variable or obj.value in binding:
            concrete = head if not obj.is_variable else Triple(
                head.subject, head.predicate, binding[obj.value]
            )
            if concrete in data_set:
                recurse(rest, binding)
            return
        for candidate in data:
            if candidate.subject == head.subject and candidate.predicate == head.predicate:
                binding[obj.value] = candidate.object
                recurse(rest, binding)
                del binding[obj.value]

    recurse(pattern.triples, {})
    if not solutions:
        return None
    return terms_by_key[min(solutions)]
