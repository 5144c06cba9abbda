"""Change impact analysis: structural deltas and artifact/stage propagation.

Impact is computed per hazard and per artifact, conservatively: artifacts
over-approximated as impacted are merely re-derived; an artifact that changes
without being flagged would corrupt safety verdicts. Stage sets are closed
downstream over the stage dependency graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import canon
from .cft import CftLibrary
from .model import MITIGATION_REQUIRED, SystemModel
from .sim import StateMachine

COMPOSE = "compose"
FTA = "fta"
TESTGEN = "testgen"
EXECUTE = "execute"
ASSURE = "assure"

STAGES = (COMPOSE, FTA, TESTGEN, EXECUTE, ASSURE)

# Stage dependency edges. fta consumes tree structure and probabilities;
# testgen consumes tree structure only, so a probability-only change does not
# invalidate generated suites.
_DOWNSTREAM = {
    COMPOSE: (FTA, TESTGEN),
    FTA: (ASSURE,),
    TESTGEN: (EXECUTE,),
    EXECUTE: (ASSURE,),
    ASSURE: (),
}


def close_stages(stages: set[str]) -> set[str]:
    """Downward closure under the stage dependency order."""
    closed = set(stages)
    frontier = list(stages)
    while frontier:
        for nxt in _DOWNSTREAM[frontier.pop()]:
            if nxt not in closed:
                closed.add(nxt)
                frontier.append(nxt)
    return closed


@dataclass(frozen=True)
class VersionBundle:
    model: SystemModel
    library: CftLibrary
    behaviors: dict[str, StateMachine]


@dataclass
class ModelDelta:
    components_added: list[str] = field(default_factory=list)
    components_removed: list[str] = field(default_factory=list)
    components_modified: list[dict] = field(default_factory=list)
    connections_added: list[list[str]] = field(default_factory=list)
    connections_removed: list[list[str]] = field(default_factory=list)
    hazards_added: list[str] = field(default_factory=list)
    hazards_removed: list[str] = field(default_factory=list)
    hazards_modified: list[dict] = field(default_factory=list)
    requirements_added: list[str] = field(default_factory=list)
    requirements_removed: list[str] = field(default_factory=list)
    requirements_modified: list[dict] = field(default_factory=list)
    templates_added: list[str] = field(default_factory=list)
    templates_removed: list[str] = field(default_factory=list)
    templates_modified: list[dict] = field(default_factory=list)
    event_params_modified: list[dict] = field(default_factory=list)
    behaviors_added: list[str] = field(default_factory=list)
    behaviors_removed: list[str] = field(default_factory=list)
    behaviors_modified: list[str] = field(default_factory=list)

    def empty(self) -> bool:
        return not any(vars(self).values())

    def to_canon(self):
        return {k: sorted(v, key=canon.canon_dumps) for k, v in vars(self).items()}


def _field_diffs(before: dict, after: dict) -> list[dict]:
    diffs = []
    for key in sorted(set(before) | set(after)):
        if before.get(key) != after.get(key):
            diffs.append({"field": key, "before": before.get(key), "after": after.get(key)})
    return diffs


def _diff_keyed(old: dict, new: dict, added: list, removed: list, modified: list | None):
    for key in sorted(set(old) | set(new)):
        if key not in new:
            removed.append(key)
        elif key not in old:
            added.append(key)
        elif old[key] != new[key] and modified is not None:
            modified.append({"id": key, "changes": _field_diffs(old[key], new[key])})


def diff(old: VersionBundle, new: VersionBundle) -> ModelDelta:
    """Canonical, order-insensitive delta; empty iff fingerprints are equal."""
    delta = ModelDelta()

    om, nm = old.model.to_canon(), new.model.to_canon()
    _diff_keyed(
        {c["id"]: c for c in om["components"]},
        {c["id"]: c for c in nm["components"]},
        delta.components_added, delta.components_removed, delta.components_modified,
    )
    old_conns = {canon.canon_dumps(c): c for c in om["connections"]}
    new_conns = {canon.canon_dumps(c): c for c in nm["connections"]}
    for key in sorted(set(old_conns) | set(new_conns)):
        conn = (old_conns | new_conns)[key]
        flat = conn["from"] + conn["to"]
        if key not in new_conns:
            delta.connections_removed.append(flat)
        elif key not in old_conns:
            delta.connections_added.append(flat)
    _diff_keyed(
        {h["id"]: h for h in om["hazards"]},
        {h["id"]: h for h in nm["hazards"]},
        delta.hazards_added, delta.hazards_removed, delta.hazards_modified,
    )
    _diff_keyed(
        {r["id"]: r for r in om["requirements"]},
        {r["id"]: r for r in nm["requirements"]},
        delta.requirements_added, delta.requirements_removed, delta.requirements_modified,
    )

    old_templates = {t.name: t for t in old.library.templates}
    new_templates = {t.name: t for t in new.library.templates}
    for name in sorted(set(old_templates) | set(new_templates)):
        if name not in new_templates:
            delta.templates_removed.append(name)
        elif name not in old_templates:
            delta.templates_added.append(name)
        else:
            ot, nt = old_templates[name], new_templates[name]
            if ot.to_canon(structural_only=True) != nt.to_canon(structural_only=True):
                delta.templates_modified.append(
                    {"id": name,
                     "changes": _field_diffs(ot.to_canon(True), nt.to_canon(True))}
                )
            else:
                old_events = {e.id: e for e in ot.events}
                for eid, event in sorted((e.id, e) for e in nt.events):
                    before = old_events[eid].param_canon()
                    after = event.param_canon()
                    if before != after:
                        delta.event_params_modified.append(
                            {"template": name, "event": eid,
                             "changes": _field_diffs(before, after)}
                        )

    old_beh = {mid: m.to_canon() for mid, m in old.behaviors.items()}
    new_beh = {mid: m.to_canon() for mid, m in new.behaviors.items()}
    for mid in sorted(set(old_beh) | set(new_beh)):
        if mid not in new_beh:
            delta.behaviors_removed.append(mid)
        elif mid not in old_beh:
            delta.behaviors_added.append(mid)
        elif old_beh[mid] != new_beh[mid]:
            delta.behaviors_modified.append(mid)

    return delta


@dataclass(frozen=True)
class ImpactReport:
    delta: ModelDelta
    impacted_hazards: tuple[str, ...]
    impacted_artifacts: tuple[str, ...]
    stages_to_rerun: tuple[str, ...]

    def to_canon(self):
        return {
            "delta": self.delta.to_canon(),
            "impacted_hazards": sorted(self.impacted_hazards),
            "impacted_artifacts": sorted(self.impacted_artifacts),
            "stages_to_rerun": [s for s in STAGES if s in self.stages_to_rerun],
        }


@dataclass(frozen=True)
class ArtifactIndex:
    """Trace data of the previous version's composed trees."""

    hazard_components: dict[str, set[str]]  # hazard -> component instances in its tree
    hazard_events: dict[str, set[str]]  # hazard -> instance-qualified basic events

    @classmethod
    def from_trees(cls, trees: dict[str, "SystemFaultTree"]) -> "ArtifactIndex":  # noqa: F821
        return cls(
            hazard_components={h: t.components() for h, t in trees.items()},
            hazard_events={h: set(t.events()) for h, t in trees.items()},
        )


def impact(delta: ModelDelta, old: VersionBundle, index: ArtifactIndex) -> ImpactReport:
    """Propagate a delta over the trace graph to artifacts and stages.

    Rule table (conservative, over-approximating):
      * basic-event parameter change: hazards whose trees contain an instance
        of the event; stages {fta, assure}.
      * structural change (components, connections, templates, hazards):
        hazards whose trees trace to a touched component; all stages.
      * requirement change: stages {fta, assure}; deadline-bearing
        (MitigationRequired) changes additionally {testgen, execute} since
        suites embed the detection deadline.
      * behavior change: hazards tracing to components bound to the machine;
        stages {execute, assure}.
    """
    all_hazards = set(index.hazard_components)
    hazards: set[str] = set()
    artifacts: set[str] = set()
    stages: set[str] = set()

    template_users: dict[str, set[str]] = {}
    behavior_users: dict[str, set[str]] = {}
    for comp in old.model.components:
        if comp.cft_ref:
            template_users.setdefault(comp.cft_ref, set()).add(comp.id)
        if comp.behavior:
            behavior_users.setdefault(comp.behavior, set()).add(comp.id)

    def hazards_tracing_to(components: set[str]) -> set[str]:
        return {
            h for h, comps in index.hazard_components.items() if comps & components
        }

    def model_fp_artifacts() -> None:
        # Analyses, verdicts, and the case embed the full model fingerprint,
        # so any model-file edit re-derives them.
        artifacts.update(f"analysis_{h}.json" for h in all_hazards)
        artifacts.update({"verdicts.json", "case.json", "report.txt"})

    # Basic-event parameter changes.
    for entry in delta.event_params_modified:
        users = template_users.get(entry["template"], set())
        touched = {
            h for h in all_hazards
            if any(e.split(".", 1)[0] in users for e in index.hazard_events[h])
        }
        hazards |= touched
        stages |= {FTA, ASSURE}
        artifacts.update(f"analysis_{h}.json" for h in touched)
        artifacts.update({"verdicts.json", "case.json", "report.txt"})

    # Structural changes.
    touched_components: set[str] = set()
    touched_components.update(delta.components_added, delta.components_removed)
    touched_components.update(entry["id"] for entry in delta.components_modified)
    for conn in delta.connections_added + delta.connections_removed:
        touched_components.update((conn[0], conn[2]))
    template_structural = bool(
        delta.templates_added or delta.templates_removed or delta.templates_modified
    )
    for name in (
        delta.templates_added + delta.templates_removed
        + [entry["id"] for entry in delta.templates_modified]
    ):
        touched_components |= template_users.get(name, set())

    structural_model_edit = bool(
        delta.components_added or delta.components_removed or delta.components_modified
        or delta.connections_added or delta.connections_removed
        or delta.hazards_added or delta.hazards_removed or delta.hazards_modified
    )
    if structural_model_edit or template_structural:
        touched_hazards = hazards_tracing_to(touched_components)
        touched_hazards.update(delta.hazards_added, delta.hazards_removed)
        touched_hazards.update(entry["id"] for entry in delta.hazards_modified)
        hazards |= touched_hazards
        stages |= {COMPOSE}
        artifacts.update(f"tree_{h}.json" for h in touched_hazards)
        artifacts.update(f"analysis_{h}.json" for h in touched_hazards)
        # Suites embed the structural model fingerprint, so any structural
        # model edit re-derives every suite and its run results; a
        # template-only edit re-derives only the hazards it traces to.
        suite_scope = all_hazards | touched_hazards if structural_model_edit else touched_hazards
        for h in suite_scope:
            artifacts.update({f"suite_{h}.json", f"results_{h}.json"})
        artifacts.update({"verdicts.json", "case.json", "report.txt"})
    if structural_model_edit:
        model_fp_artifacts()

    # Requirement changes.
    req_changes = (
        delta.requirements_added + delta.requirements_removed
        + [entry["id"] for entry in delta.requirements_modified]
    )
    if req_changes:
        stages |= {FTA, ASSURE}
        model_fp_artifacts()
        old_reqs = {r.id: r for r in old.model.requirements}
        for rid in req_changes:
            req = old_reqs.get(rid)
            if req is not None and req.hazard in all_hazards:
                hazards.add(req.hazard)
            if req is None or req.kind == MITIGATION_REQUIRED:
                # Suites embed detection deadlines; regenerate and re-run.
                stages |= {TESTGEN, EXECUTE}
                target = req.hazard if req is not None else None
                for h in all_hazards if target is None else {target}:
                    artifacts.update({f"suite_{h}.json", f"results_{h}.json"})

    # Behavior changes.
    beh_changes = set(delta.behaviors_added + delta.behaviors_removed + delta.behaviors_modified)
    if beh_changes:
        touched = set()
        for mid in beh_changes:
            touched |= behavior_users.get(mid, set())
        hazards |= hazards_tracing_to(touched)
        stages |= {EXECUTE, ASSURE}
        # Run traces record all signals, so every results artifact is re-derived.
        artifacts.update(f"results_{h}.json" for h in all_hazards)
        artifacts.update({"case.json", "report.txt"})

    return ImpactReport(
        delta=delta,
        impacted_hazards=tuple(sorted(hazards)),
        impacted_artifacts=tuple(sorted(artifacts)),
        stages_to_rerun=tuple(s for s in STAGES if s in close_stages(stages)),
    )
