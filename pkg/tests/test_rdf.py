"""Unit and property tests for the triple data model, grammar, and matcher."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agendadm import rdf
from agendadm.rdf import (
    NonGroundData,
    ParseError,
    Triple,
    TripleSet,
    iri,
    is_ground,
    lit,
    match_pattern,
    parse_document,
    serialize,
    substitute,
    var,
)

from .oracles import brute_force_matches


# ---------------------------------------------------------------------------
# Terms and triples
# ---------------------------------------------------------------------------


def test_iri_rejects_whitespace_and_brackets():
    for bad in ["", "a b", "a<b", "a>b", "a\tb", "a\nb"]:
        with pytest.raises(ValueError):
            iri(bad)


def test_variable_name_rules():
    assert var("x").value == "x"
    assert var("Slot_9").value == "Slot_9"
    for bad in ["", "9x", "_x", "x-y", "x y"]:
        with pytest.raises(ValueError):
            var(bad)


def test_triple_requires_iri_subject_and_predicate():
    with pytest.raises(ValueError):
        Triple(lit("s"), iri("p"), lit("o"))
    with pytest.raises(ValueError):
        Triple(iri("s"), var("p"), lit("o"))


def test_tripleset_dedups_and_orders():
    a = Triple(iri("u:s"), iri("u:p"), lit("b"))
    b = Triple(iri("u:s"), iri("u:p"), lit("a"))
    ts = TripleSet([a, b, a])
    assert len(ts) == 2
    assert ts.triples == (b, a)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_single_ground_line():
    ts = parse_document('<u:p1> <u:hasAppointment> "tuesday" .')
    assert len(ts) == 1
    (t,) = ts
    assert t == Triple(iri("u:p1"), iri("u:hasAppointment"), lit("tuesday"))


def test_parse_empty_document():
    assert parse_document("") == TripleSet()


def test_parse_dedups_repeated_lines():
    text = '<u:p1> <u:a> "x" .\n<u:p1> <u:a> "x" .\n'
    assert len(parse_document(text)) == 1


def test_parse_variable_object():
    ts = parse_document("<u:p1> <u:hasAppointment> ?x .")
    (t,) = ts
    assert t.object == var("x")
    assert not is_ground(ts)


def test_parse_skips_blanks_and_comments():
    text = "\n  \n# a comment\n<u:s> <u:p> <u:o> .\n   # indented comment\n"
    assert len(parse_document(text)) == 1


def test_parse_accepts_iri_object():
    (t,) = parse_document("<u:s> <u:p> <u:o> .")
    assert t.object == iri("u:o")


def test_parse_literal_escapes():
    (t,) = parse_document('<u:s> <u:p> "a\\"b\\\\c\\nd\\re" .')
    assert t.object.value == 'a"b\\c\nd\re'


def test_parse_accepts_crlf_line_endings():
    ts = parse_document('<u:s> <u:p> "x" .\r\n')
    assert len(ts) == 1


@pytest.mark.parametrize(
    "text,line,reason_part",
    [
        ('"lit" <u:p> "x" .', 1, "subject"),
        ("<u:s> ?v \"x\" .", 1, "predicate"),
        ("<u:s> <u:p> \"x\"", 1, "'.'"),
        ("<u:s> <u:p> \"unterminated .", 1, "unterminated literal"),
        ("<u:s <u:p> \"x\" .", 1, "IRI"),
        ("<u:s> <u:p> \"x\" . trailing", 1, "trailing"),
        ('ok\n<u:s> <u:p> "x" .', 1, "expected"),
        ('<u:s> <u:p> "bad \\q escape" .', 1, "escape"),
        ("<u:s> <u:p> ?9bad .", 1, "variable"),
    ],
)
def test_parse_errors_carry_position(text, line, reason_part):
    with pytest.raises(ParseError) as err:
        parse_document(text)
    assert err.value.line == line
    assert reason_part in err.value.reason
    assert err.value.column >= 1


def test_parse_error_reports_failing_line_number():
    text = '<u:s> <u:p> "x" .\n<broken'
    with pytest.raises(ParseError) as err:
        parse_document(text)
    assert err.value.line == 2


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_serialize_empty_is_empty_string():
    assert serialize(TripleSet()) == ""


def test_serialize_is_canonical_under_permutation_and_duplication():
    lines = ['<u:s> <u:p> "b" .', '<u:a> <u:p> "z" .', '<u:s> <u:p> "a" .']
    doc_a = "\n".join(lines)
    doc_b = "\n".join(reversed(lines + lines))
    assert serialize(parse_document(doc_a)) == serialize(parse_document(doc_b))


def test_round_trip_of_parsed_document():
    text = '<u:p1> <u:hasAppointment> "tuesday" .\n<u:p1> <u:hasPainLevel> ?x .\n'
    ts = parse_document(text)
    assert parse_document(serialize(ts)) == ts


# ---------------------------------------------------------------------------
# Groundness
# ---------------------------------------------------------------------------


def test_is_ground_cases():
    assert is_ground(TripleSet())
    ground = parse_document('<u:s> <u:p> "x" .')
    assert is_ground(ground)
    pattern = parse_document("<u:s> <u:p> ?x .")
    assert not is_ground(pattern)


# ---------------------------------------------------------------------------
# Pattern matching
# ---------------------------------------------------------------------------


def test_match_unique_candidate():
    pattern = parse_document("<u:p1> <u:hasAppointment> ?x .")
    data = parse_document('<u:p1> <u:hasAppointment> "tuesday" .')
    assert match_pattern(pattern, data) == {"x": lit("tuesday")}


def test_match_no_candidate():
    pattern = parse_document("<u:p1> <u:hasAppointment> ?x .")
    data = parse_document('<u:p1> <u:hasDoctor> "dr_a" .')
    assert match_pattern(pattern, data) is None


def test_match_two_variable_tie_break():
    # Two consistent bindings exist; expectation computed with the
    # brute-force oracle and frozen here.
    pattern = parse_document("<u:a> <u:p> ?x .\n<u:a> <u:q> ?y .")
    data = parse_document(
        '<u:a> <u:p> "1" .\n<u:a> <u:p> "2" .\n<u:a> <u:q> "z" .\n<u:b> <u:r> "w" .'
    )
    oracle = brute_force_matches(pattern, data)
    assert len(oracle) == 2
    assert oracle[0] == {"x": lit("1"), "y": lit("z")}
    assert match_pattern(pattern, data) == {"x": lit("1"), "y": lit("z")}


def test_match_ground_pattern_is_subset_test():
    data = parse_document('<u:s> <u:p> "x" .\n<u:s> <u:q> "y" .')
    sub = parse_document('<u:s> <u:p> "x" .')
    assert match_pattern(sub, data) == {}
    other = parse_document('<u:s> <u:p> "z" .')
    assert match_pattern(other, data) is None


def test_match_repeated_variable_must_unify():
    pattern = parse_document("<u:a> <u:p> ?x .\n<u:b> <u:q> ?x .")
    data = parse_document('<u:a> <u:p> "1" .\n<u:b> <u:q> "2" .')
    assert match_pattern(pattern, data) is None
    data2 = parse_document('<u:a> <u:p> "1" .\n<u:b> <u:q> "1" .')
    assert match_pattern(pattern, data2) == {"x": lit("1")}


def test_match_rejects_non_ground_data():
    pattern = parse_document("<u:a> <u:p> ?x .")
    data = parse_document("<u:a> <u:p> ?y .")
    with pytest.raises(NonGroundData):
        match_pattern(pattern, data)


def test_substitute_fills_bound_variables_only():
    pattern = parse_document("<u:a> <u:p> ?x .\n<u:a> <u:q> ?y .")
    out = substitute(pattern, {"x": lit("1")})
    assert out == parse_document('<u:a> <u:p> "1" .\n<u:a> <u:q> ?y .')


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------

iri_values = st.text(
    st.characters(blacklist_characters="<>").filter(lambda c: not c.isspace()),
    min_size=1,
    max_size=12,
)
iri_terms = st.builds(iri, iri_values)
literal_terms = st.builds(lit, st.text(max_size=12))
var_terms = st.builds(var, st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True))
object_terms = st.one_of(iri_terms, literal_terms, var_terms)
ground_objects = st.one_of(iri_terms, literal_terms)

any_triples = st.builds(Triple, iri_terms, iri_terms, object_terms)
ground_triples = st.builds(Triple, iri_terms, iri_terms, ground_objects)

triple_sets = st.lists(any_triples, max_size=8).map(TripleSet)
ground_sets = st.lists(ground_triples, max_size=10).map(TripleSet)


@given(triple_sets)
def test_property_round_trip(ts):
    assert parse_document(serialize(ts)) == ts


@given(st.lists(ground_triples, max_size=8))
def test_property_serialization_permutation_invariant(triples):
    forward = TripleSet(triples)
    backward = TripleSet(list(reversed(triples)) + triples)
    assert serialize(forward) == serialize(backward)


@st.composite
def match_instances(draw):
    """Data plus a pattern derived from it, so matches are actually likely."""
    data = draw(st.lists(ground_triples, min_size=1, max_size=10).map(TripleSet))
    base = draw(st.lists(st.sampled_from(data.triples), min_size=1, max_size=3))
    names = ["x", "y", "z"]
    pattern = []
    for i, t in enumerate(base):
        if draw(st.booleans()):
            pattern.append(Triple(t.subject, t.predicate, var(names[i % 3])))
        else:
            pattern.append(t)
    return TripleSet(pattern), data


@settings(max_examples=200)
@given(match_instances())
def test_property_match_agrees_with_brute_force(instance):
    pattern, data = instance
    expected = brute_force_matches(pattern, data)
    got = match_pattern(pattern, data)
    if not expected:
        assert got is None
    else:
        assert got == expected[0]


@given(match_instances())
def test_property_match_soundness(instance):
    pattern, data = instance
    binding = match_pattern(pattern, data)
    if binding is not None:
        substituted = substitute(pattern, binding)
        assert is_ground(substituted)
        assert all(t in data for t in substituted)
