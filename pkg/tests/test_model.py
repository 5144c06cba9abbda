"""Model DSL parsing, printing, and validation."""

from __future__ import annotations

import random

import pytest

from safeline import canon
from safeline.diagnostics import ParseError
from safeline.model import parse_model, print_model, validate

import helpers


def test_fixture_counts(voter2):
    model, _, _ = voter2
    assert model.id == "VOTER2"
    assert len(model.components) == 4
    assert len(model.connections) == 4
    assert len(model.hazards) == 1
    assert len(model.requirements) == 2


def test_fixture_validates_cleanly(voter2):
    model, _, _ = voter2
    assert not [d for d in validate(model) if d.severity == "error"]


def test_round_trip_is_identity(voter2):
    model, _, _ = voter2
    text = print_model(model)
    again = parse_model(text)
    assert canon.fingerprint(again) == canon.fingerprint(model)
    assert print_model(again) == text


def test_round_trip_random_chains():
    rng = random.Random(7)
    for _ in range(25):
        model_text, _ = helpers.random_chain(rng)
        m = parse_model(model_text)
        assert canon.fingerprint(parse_model(print_model(m))) == canon.fingerprint(m)


def test_duplicate_component_rejected():
    text = """
    model M version "1";
    component X kind=hardware { out o: bool; }
    component X kind=hardware { out o: bool; }
    """
    with pytest.raises(ParseError) as exc:
        parse_model(text)
    assert any("duplicate" in d.message for d in exc.value.diagnostics)


def test_unknown_signal_in_connection_rejected():
    text = """
    model M version "1";
    component A kind=hardware { out o: bool; }
    component B kind=hardware { in i: bool; }
    connect A.nosuch -> B.i;
    """
    with pytest.raises(ParseError):
        parse_model(text)


def test_software_requires_allocation():
    m = parse_model(
        """
        model M version "1";
        component S kind=software { out o: bool; }
        """
    )
    diags = validate(m)
    assert any(d.severity == "error" and "alloc" in d.message.lower() for d in diags)


def test_hardware_must_not_be_allocated():
    m = parse_model(
        """
        model M version "1";
        component H kind=hardware { out o: bool; allocate H2; }
        component H2 kind=hardware { out o: bool; }
        """
    )
    diags = validate(m)
    assert any(d.severity == "error" for d in diags)


def test_connection_type_mismatch_is_error():
    m = parse_model(
        """
        model M version "1";
        component A kind=hardware { out o: bool; }
        component B kind=hardware { in i: enum(ok, bad); }
        connect A.o -> B.i;
        """
    )
    assert any(d.severity == "error" for d in validate(m))


def test_two_drivers_on_one_input_is_error():
    m = parse_model(
        """
        model M version "1";
        component A kind=hardware { out o: bool; }
        component B kind=hardware { out o: bool; }
        component C kind=hardware { in i: bool; }
        connect A.o -> C.i;
        connect B.o -> C.i;
        """
    )
    assert any(d.severity == "error" for d in validate(m))


def test_dangling_hazard_reference_is_error():
    m = parse_model(
        """
        model M version "1";
        component A kind=hardware { out o: bool; }
        hazard H top=Nope.o "missing component";
        """
    )
    assert any(d.severity == "error" for d in validate(m))


def test_structural_canon_ignores_requirements_and_version(voter2):
    model, _, _ = voter2
    text = print_model(model)
    stripped = "\n".join(
        line for line in text.splitlines() if not line.startswith("requirement")
    ).replace('version "1"', 'version "2"')
    other = parse_model(stripped)
    assert canon.fingerprint(other) != canon.fingerprint(model)
    assert canon.canon_dumps(other.structural_canon()) == canon.canon_dumps(
        model.structural_canon()
    )
