"""Fault-injection test generation from minimal cut sets.

Positive tests inject exactly one full minimal cut set and expect the
top-event monitor to fire. Negative tests inject a strict, non-empty subset
of some cut set that is not a superset of any other cut set, and expect the
monitor to stay silent. Tests whose injected events lack a fault effect are
kept but marked non-executable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .cft import CftInstance, SystemFaultTree, fault_effects
from .diagnostics import Diagnostic
from .model import MITIGATION_REQUIRED, SystemModel

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class Injection:
    event: str
    component: str | None
    signal: str | None
    value: object  # None when the event carries no fault effect

    def to_canon(self):
        return {
            "event": self.event,
            "component": self.component,
            "signal": self.signal,
            "value": self.value,
        }


@dataclass(frozen=True)
class FaultInjectionTest:
    id: str
    hazard: str
    kind: str  # POSITIVE | NEGATIVE
    injections: tuple[Injection, ...]
    expect_top_event: bool
    detection_deadline: int | None  # ticks; from a MitigationRequired requirement
    executable: bool

    def injected_events(self) -> frozenset[str]:
        return frozenset(i.event for i in self.injections)

    def to_canon(self):
        return {
            "id": self.id,
            "hazard": self.hazard,
            "kind": self.kind,
            "injections": [i.to_canon() for i in self.injections],
            "expect_top_event": self.expect_top_event,
            "detection_deadline": self.detection_deadline,
            "executable": self.executable,
        }


@dataclass(frozen=True)
class TestSuite:
    hazard: str
    tests: tuple[FaultInjectionTest, ...]
    monitor: tuple[str, str]  # (component, signal) observing the top event
    model_fingerprint: str  # structural model fingerprint at generation
    tree_fingerprint: str

    def to_canon(self):
        return {
            "hazard": self.hazard,
            "tests": [t.to_canon() for t in self.tests],
            "monitor": list(self.monitor),
            "model_fingerprint": self.model_fingerprint,
            "tree_fingerprint": self.tree_fingerprint,
        }


def suite_from_canon(data: dict) -> TestSuite:
    tests = tuple(
        FaultInjectionTest(
            id=t["id"],
            hazard=t["hazard"],
            kind=t["kind"],
            injections=tuple(
                Injection(i["event"], i["component"], i["signal"], i["value"])
                for i in t["injections"]
            ),
            expect_top_event=t["expect_top_event"],
            detection_deadline=t["detection_deadline"],
            executable=t["executable"],
        )
        for t in data["tests"]
    )
    return TestSuite(
        hazard=data["hazard"],
        tests=tests,
        monitor=(data["monitor"][0], data["monitor"][1]),
        model_fingerprint=data["model_fingerprint"],
        tree_fingerprint=data["tree_fingerprint"],
    )


def _negative_candidates(mcs: list[frozenset[str]]) -> list[frozenset[str]]:
    """Strict non-empty subsets of cut sets that trigger no cut set.

    Ordered largest-first (strictest non-triggering injection), then
    lexicographically.
    """
    candidates: set[frozenset[str]] = set()
    for cs in mcs:
        for size in range(1, len(cs)):
            for combo in itertools.combinations(sorted(cs), size):
                subset = frozenset(combo)
                if not any(other <= subset for other in mcs):
                    candidates.add(subset)
    return sorted(candidates, key=lambda s: (-len(s), tuple(sorted(s))))


def generate_tests(
    t: SystemFaultTree,
    mcs: list[frozenset[str]],
    m: SystemModel,
    instances: dict[str, CftInstance],
    budget: int,
    model_fingerprint: str,
    tree_fingerprint: str,
) -> tuple[TestSuite, list[Diagnostic]]:
    """One positive test per cut set plus up to ``budget`` negative tests."""
    hazard = m.hazard(t.hazard)
    effects = fault_effects(instances)
    deadline = None
    for req in sorted(m.requirements, key=lambda r: r.id):
        if req.kind == MITIGATION_REQUIRED and req.hazard == t.hazard:
            deadline = req.detection_deadline
            break
    top_inst = instances[hazard.top_component]
    monitor_signal = dict(top_inst.template.outmodes)[hazard.top_failure_mode]
    monitor = (hazard.top_component, monitor_signal)

    diags: list[Diagnostic] = []

    def build(events: frozenset[str], kind: str, index: int) -> FaultInjectionTest:
        injections = []
        executable = True
        for eid in sorted(events):
            effect = effects.get(eid)
            if effect is None:
                executable = False
                injections.append(Injection(eid, None, None, None))
                diags.append(
                    Diagnostic(
                        "warning",
                        f"basic event {eid} has no fault effect; test not executable",
                        element=eid,
                    )
                )
            else:
                injections.append(Injection(eid, effect[0], effect[1], effect[2]))
        prefix = "P" if kind == POSITIVE else "N"
        return FaultInjectionTest(
            id=f"{t.hazard}-{prefix}{index:03d}",
            hazard=t.hazard,
            kind=kind,
            injections=tuple(injections),
            expect_top_event=kind == POSITIVE,
            detection_deadline=deadline if kind == POSITIVE else None,
            executable=executable,
        )

    tests = [build(cs, POSITIVE, i) for i, cs in enumerate(sorted(mcs, key=lambda s: (len(s), tuple(sorted(s)))))]
    for i, subset in enumerate(_negative_candidates(mcs)[: max(budget, 0)]):
        tests.append(build(subset, NEGATIVE, i))
    suite = TestSuite(
        hazard=t.hazard,
        tests=tuple(tests),
        monitor=monitor,
        model_fingerprint=model_fingerprint,
        tree_fingerprint=tree_fingerprint,
    )
    return suite, diags
