"""Change impact analysis: diffs, rule table, stage closure."""

from __future__ import annotations

from dataclasses import replace

import pytest

from safeline.cft import BasicEvent, Gate, compose, instantiate
from safeline.cia import ArtifactIndex, VersionBundle, close_stages, diff, impact
from safeline.model import SafetyRequirement


@pytest.fixture()
def bundle(voter2):
    model, lib, behaviors = voter2
    return VersionBundle(model=model, library=lib, behaviors=behaviors)


@pytest.fixture()
def index(voter2):
    model, lib, _ = voter2
    instances = instantiate(model, lib)
    trees = {h.id: compose(model, instances, h)[0] for h in model.hazards}
    return ArtifactIndex.from_trees(trees)


def _with_template(lib, name, **changes):
    templates = tuple(
        replace(t, **changes) if t.name == name else t for t in lib.templates
    )
    return replace(lib, templates=templates)


def test_identical_bundles_have_empty_delta(bundle, index):
    delta = diff(bundle, bundle)
    assert delta.empty()
    report = impact(delta, bundle, index)
    assert not report.impacted_artifacts
    assert not report.stages_to_rerun


def test_stage_closure():
    assert close_stages({"compose"}) == {"compose", "fta", "testgen", "execute", "assure"}
    assert close_stages({"fta"}) == {"fta", "assure"}
    assert close_stages({"testgen"}) == {"testgen", "execute", "assure"}
    assert close_stages(set()) == set()


def test_event_parameter_change(bundle, index):
    tpl = bundle.library.get("SensorCft")
    events = tuple(
        BasicEvent(e.id, prob=0.2, rate=e.rate, effect=e.effect) if e.id == "fail" else e
        for e in tpl.events
    )
    new = replace(bundle, library=_with_template(bundle.library, "SensorCft", events=events))
    delta = diff(bundle, new)
    assert delta.event_params_modified
    report = impact(delta, bundle, index)
    assert set(report.stages_to_rerun) == {"fta", "assure"}
    assert "analysis_H1.json" in report.impacted_artifacts
    assert "verdicts.json" in report.impacted_artifacts
    assert "tree_H1.json" not in report.impacted_artifacts
    assert "suite_H1.json" not in report.impacted_artifacts


def test_requirement_bound_change(bundle, index):
    reqs = tuple(
        replace(r, bound=0.05) if r.id == "R1" else r for r in bundle.model.requirements
    )
    new = replace(bundle, model=replace(bundle.model, requirements=reqs))
    report = impact(diff(bundle, new), bundle, index)
    assert set(report.stages_to_rerun) == {"fta", "assure"}
    assert "suite_H1.json" not in report.impacted_artifacts
    assert "tree_H1.json" not in report.impacted_artifacts


def test_mitigation_deadline_change_reaches_test_stages(bundle, index):
    req = SafetyRequirement(
        id="R9", kind="MitigationRequired", hazard="H1", detection_deadline=4
    )
    base = replace(bundle, model=replace(bundle.model, requirements=bundle.model.requirements + (req,)))
    tightened = replace(req, detection_deadline=2)
    new = replace(
        base,
        model=replace(base.model, requirements=bundle.model.requirements + (tightened,)),
    )
    report = impact(diff(base, new), base, index)
    assert {"fta", "testgen", "execute", "assure"} <= set(report.stages_to_rerun)
    assert "suite_H1.json" in report.impacted_artifacts
    assert "results_H1.json" in report.impacted_artifacts


def test_template_gate_change_is_structural(bundle, index):
    tpl = bundle.library.get("VoterCft")
    gates = tuple(
        Gate(g.id, "OR", g.operands) if g.id == "both_in" else g for g in tpl.gates
    )
    new = replace(bundle, library=_with_template(bundle.library, "VoterCft", gates=gates))
    delta = diff(bundle, new)
    report = impact(delta, bundle, index)
    assert set(report.stages_to_rerun) == {"compose", "fta", "testgen", "execute", "assure"}
    assert "tree_H1.json" in report.impacted_artifacts
    assert "suite_H1.json" in report.impacted_artifacts


def test_model_structural_change_hits_everything(bundle, index):
    comps = tuple(c for c in bundle.model.components) + (
        replace(bundle.model.components[0], id="SensorC"),
    )
    new = replace(bundle, model=replace(bundle.model, components=comps))
    report = impact(diff(bundle, new), bundle, index)
    assert set(report.stages_to_rerun) == {"compose", "fta", "testgen", "execute", "assure"}
    assert "suite_H1.json" in report.impacted_artifacts
    assert "results_H1.json" in report.impacted_artifacts


def test_behavior_change(bundle, index, voter2):
    from safeline.sim import parse_behaviors, print_behaviors

    text = print_behaviors(bundle.behaviors).replace("-> Suspect", "-> Failed", 1)
    new = replace(bundle, behaviors=parse_behaviors(text))
    delta = diff(bundle, new)
    report = impact(delta, bundle, index)
    assert set(report.stages_to_rerun) == {"execute", "assure"}
    assert "results_H1.json" in report.impacted_artifacts
    assert "case.json" in report.impacted_artifacts
    assert "analysis_H1.json" not in report.impacted_artifacts
    assert "tree_H1.json" not in report.impacted_artifacts


def test_delta_reports_field_level_changes(bundle):
    reqs = tuple(
        replace(r, bound=0.01) if r.id == "R1" else r for r in bundle.model.requirements
    )
    new = replace(bundle, model=replace(bundle.model, requirements=reqs))
    delta = diff(bundle, new)
    assert delta.requirements_modified
    entry = delta.requirements_modified[0]
    changes = entry["changes"] if isinstance(entry, dict) else entry
    assert any("bound" in str(c) for c in (changes if isinstance(changes, list) else [changes]))
