"""Fault-injection test generation from minimal cut sets."""

from __future__ import annotations

import pytest

from safeline.cft import compose, evaluate, instantiate
from safeline.fta import minimal_cut_sets
from safeline.testgen import generate_tests, suite_from_canon


@pytest.fixture(scope="module")
def fixture_suite(voter2):
    model, lib, _ = voter2
    instances = instantiate(model, lib)
    tree, _ = compose(model, instances, model.hazards[0])
    mcs = minimal_cut_sets(tree)
    suite, diags = generate_tests(
        tree, mcs, model, instances, budget=2, model_fingerprint="s-fp", tree_fingerprint="t-fp"
    )
    return tree, mcs, suite, diags


def test_fixture_suite_shape(fixture_suite):
    _, mcs, suite, _ = fixture_suite
    positives = [t for t in suite.tests if t.kind == "positive"]
    negatives = [t for t in suite.tests if t.kind == "negative"]
    assert len(positives) == len(mcs) == 3
    assert len(negatives) == 2
    assert {t.injected_events() for t in negatives} == {
        frozenset({"SensorA.fail"}),
        frozenset({"SensorB.fail"}),
    }
    assert suite.monitor == ("Voter", "out_wrong")


def test_ids_are_stable_and_ordered(fixture_suite):
    _, _, suite, _ = fixture_suite
    assert [t.id for t in suite.tests] == [
        "H1-P000",
        "H1-P001",
        "H1-P002",
        "H1-N000",
        "H1-N001",
    ]


def test_positive_tests_inject_exactly_the_cut_sets(fixture_suite):
    tree, mcs, suite, _ = fixture_suite
    positives = [t for t in suite.tests if t.kind == "positive"]
    assert [t.injected_events() for t in positives] == [frozenset(cs) for cs in mcs]
    for t in positives:
        assign = {e: e in t.injected_events() for e in tree.events()}
        assert evaluate(tree, assign)
        assert t.expect_top_event


def test_negative_tests_do_not_raise_the_top_event(fixture_suite):
    tree, _, suite, _ = fixture_suite
    for t in suite.tests:
        if t.kind != "negative":
            continue
        assign = {e: e in t.injected_events() for e in tree.events()}
        assert not evaluate(tree, assign)
        assert not t.expect_top_event


def test_event_without_effect_marks_test_non_executable(fixture_suite):
    _, _, suite, diags = fixture_suite
    ecu_test = next(
        t for t in suite.tests if t.injected_events() == frozenset({"Ecu.hw_fail"})
    )
    assert not ecu_test.executable
    assert any("Ecu.hw_fail" in d.message for d in diags if d.severity == "warning")
    for t in suite.tests:
        if t.id != ecu_test.id:
            assert t.executable


def test_generation_is_deterministic(voter2):
    model, lib, _ = voter2
    instances = instantiate(model, lib)
    tree, _ = compose(model, instances, model.hazards[0])
    mcs = minimal_cut_sets(tree)
    a, _ = generate_tests(tree, mcs, model, instances, 2, "fp", "tfp")
    b, _ = generate_tests(tree, mcs, model, instances, 2, "fp", "tfp")
    assert a.to_canon() == b.to_canon()


def test_budget_zero_yields_no_negatives(voter2):
    model, lib, _ = voter2
    instances = instantiate(model, lib)
    tree, _ = compose(model, instances, model.hazards[0])
    mcs = minimal_cut_sets(tree)
    suite, _ = generate_tests(tree, mcs, model, instances, 0, "fp", "tfp")
    assert all(t.kind == "positive" for t in suite.tests)


def test_suite_canon_round_trip(fixture_suite):
    _, _, suite, _ = fixture_suite
    assert suite_from_canon(suite.to_canon()).to_canon() == suite.to_canon()


def test_deadline_from_mitigation_requirement(voter2):
    from safeline.model import SafetyRequirement, SystemModel

    model, lib, _ = voter2
    req = SafetyRequirement(
        id="R9", kind="MitigationRequired", hazard="H1", detection_deadline=7
    )
    m2 = SystemModel(
        id=model.id,
        version=model.version,
        components=model.components,
        connections=model.connections,
        hazards=model.hazards,
        requirements=model.requirements + (req,),
    )
    instances = instantiate(m2, lib)
    tree, _ = compose(m2, instances, m2.hazards[0])
    suite, _ = generate_tests(tree, minimal_cut_sets(tree), m2, instances, 2, "fp", "tfp")
    assert all(t.detection_deadline == 7 for t in suite.tests if t.kind == "positive")
