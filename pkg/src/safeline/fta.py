"""Fault tree analysis: minimal cut sets, top-event probability, verdicts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import _kernels
from .cft import AND, EVENT, FALSE, OR, VOTE, SystemFaultTree
from .diagnostics import SafelineError
from .model import (
    MAX_TOP_EVENT_PROBABILITY,
    MIN_CUT_SET_ORDER,
    MITIGATION_REQUIRED,
    SystemModel,
)

EXACT = "exact"
RARE_EVENT = "rare_event"

DEFAULT_CUT_SET_CAP = 100_000
DEFAULT_EXACT_VAR_CAP = 25

PASS = "pass"
FAIL = "fail"
NOT_EVALUABLE = "not_evaluable"


class CutSetCapExceeded(SafelineError):
    """The expansion grew past the configured cut-set cap; no partial result."""


class ExactMethodRefused(SafelineError):
    """Too many variables for the exact method; select rare_event instead."""


@dataclass(frozen=True)
class AnalysisResult:
    hazard: str
    mcs: tuple[frozenset[str], ...]  # sorted by order, then lexicographically
    top_probability: float
    method: str  # EXACT | RARE_EVENT
    mission_time: float
    model_fingerprint: str
    tree_fingerprint: str = ""

    def to_canon(self):
        return {
            "hazard": self.hazard,
            "mcs": [sorted(cs) for cs in self.mcs],
            "top_probability": self.top_probability,
            "method": self.method,
            "mission_time": self.mission_time,
            "model_fingerprint": self.model_fingerprint,
            "tree_fingerprint": self.tree_fingerprint,
        }


@dataclass(frozen=True)
class RequirementVerdict:
    requirement: str
    status: str  # PASS | FAIL | NOT_EVALUABLE
    measured: float | int | None
    bound: float | int | None
    note: str = ""

    def to_canon(self):
        return {
            "requirement": self.requirement,
            "status": self.status,
            "measured": self.measured,
            "bound": self.bound,
            "note": self.note,
        }


def _sort_key(cs: frozenset[str]) -> tuple[int, tuple[str, ...]]:
    return (len(cs), tuple(sorted(cs)))


def minimal_cut_sets(
    t: SystemFaultTree, cap: int = DEFAULT_CUT_SET_CAP
) -> list[frozenset[str]]:
    """Exactly the minimal cut sets of the tree's structure function.

    Top-down MOCUS-style expansion over the node DAG with subsumption-based
    minimization; VOTE(k) gates are expanded combinatorially. Exceeding the
    cap raises CutSetCapExceeded rather than truncating silently.
    """
    events = t.events()
    bit = {eid: 1 << i for i, eid in enumerate(events)}
    IMPOSSIBLE = object()

    # Work items are conjunctions: (frozenset of gate node ids, event bitmask).
    work: list[tuple[frozenset[str], int]] = [(frozenset([t.top]), 0)]
    leaves: list[int] = []
    if t.nodes[t.top].kind == EVENT:
        work = [(frozenset(), bit[t.top])]
    elif t.nodes[t.top].kind == FALSE:
        work = []

    def split(child_ids: tuple[str, ...]):
        """Partition children into (gate ids, event mask) or IMPOSSIBLE."""
        gates: list[str] = []
        mask = 0
        for cid in child_ids:
            kind = t.nodes[cid].kind
            if kind == EVENT:
                mask |= bit[cid]
            elif kind == FALSE:
                return IMPOSSIBLE
            else:
                gates.append(cid)
        return frozenset(gates), mask

    while work:
        if len(work) + len(leaves) > cap:
            raise CutSetCapExceeded(
                f"cut-set expansion for hazard {t.hazard} exceeded cap of {cap}"
            )
        gates, mask = work.pop()
        if not gates:
            leaves.append(mask)
            continue
        gid = next(iter(gates))
        rest = gates - {gid}
        node = t.nodes[gid]
        if node.kind == AND:
            parts = split(node.children)
            if parts is not IMPOSSIBLE:
                work.append((rest | parts[0], mask | parts[1]))
        elif node.kind == OR:
            for child in node.children:
                parts = split((child,))
                if parts is not IMPOSSIBLE:
                    work.append((rest | parts[0], mask | parts[1]))
        elif node.kind == VOTE:
            for combo in itertools.combinations(node.children, node.k):
                parts = split(combo)
                if parts is not IMPOSSIBLE:
                    work.append((rest | parts[0], mask | parts[1]))
        else:  # pragma: no cover - node kinds are closed
            raise SafelineError(f"unexpected node kind {node.kind!r} during expansion")
        # Early absorption keeps the working set small on shared subtrees.
        if len(leaves) > 1024:
            leaves = _kernels.minimize_cut_sets(leaves)

    masks = _kernels.minimize_cut_sets(leaves)
    cut_sets = [
        frozenset(events[i] for i in range(len(events)) if m >> i & 1) for m in masks if m
    ]
    return sorted(cut_sets, key=_sort_key)


def top_event_probability(
    t: SystemFaultTree,
    event_probs: dict[str, float],
    method: str = EXACT,
    cut_set_cap: int = DEFAULT_CUT_SET_CAP,
    exact_var_cap: int = DEFAULT_EXACT_VAR_CAP,
    mcs: list[frozenset[str]] | None = None,
) -> float:
    """Top-event occurrence probability under event independence.

    ``exact`` decomposes the minimal structure function by Shannon expansion;
    ``rare_event`` sums the cut-set products (documented upper-bias
    approximation). ``mcs`` may be passed to reuse a prior computation.
    """
    if mcs is None:
        mcs = minimal_cut_sets(t, cap=cut_set_cap)
    variables = sorted({e for cs in mcs for e in cs})
    index = {e: i for i, e in enumerate(variables)}
    masks = [sum(1 << index[e] for e in cs) for cs in mcs]
    probs = []
    for e in variables:
        if e not in event_probs:
            raise SafelineError(f"no probability model for basic event {e!r}")
        probs.append(event_probs[e])
    if method == EXACT:
        if len(variables) > exact_var_cap:
            raise ExactMethodRefused(
                f"{len(variables)} variables exceed the exact-method cap of "
                f"{exact_var_cap}; select the rare_event method"
            )
        return _kernels.dnf_probability(masks, probs)
    if method == RARE_EVENT:
        return _kernels.rare_event_probability(masks, probs)
    raise SafelineError(f"unknown probability method {method!r}")


def analyze(
    t: SystemFaultTree,
    event_probs: dict[str, float],
    mission_time: float,
    method: str,
    model_fingerprint: str,
    tree_fingerprint: str = "",
    cut_set_cap: int = DEFAULT_CUT_SET_CAP,
    exact_var_cap: int = DEFAULT_EXACT_VAR_CAP,
) -> AnalysisResult:
    mcs = minimal_cut_sets(t, cap=cut_set_cap)
    prob = top_event_probability(
        t, event_probs, method, cut_set_cap, exact_var_cap, mcs=mcs
    )
    return AnalysisResult(
        hazard=t.hazard,
        mcs=tuple(mcs),
        top_probability=prob,
        method=method,
        mission_time=mission_time,
        model_fingerprint=model_fingerprint,
        tree_fingerprint=tree_fingerprint,
    )


def check_requirements(
    m: SystemModel, results: dict[str, AnalysisResult]
) -> list[RequirementVerdict]:
    """Verdicts for every requirement against the per-hazard analysis results.

    MitigationRequired cannot be decided from analysis alone and is reported
    not_evaluable here; test execution resolves it downstream. Comparisons
    are exact: bounds are specifications, not measurements.
    """
    verdicts: list[RequirementVerdict] = []
    for req in sorted(m.requirements, key=lambda r: r.id):
        if req.kind == MITIGATION_REQUIRED:
            verdicts.append(
                RequirementVerdict(
                    req.id, NOT_EVALUABLE, None, req.detection_deadline,
                    note="resolved by fault-injection test outcomes",
                )
            )
            continue
        result = results.get(req.hazard)
        if result is None:
            verdicts.append(
                RequirementVerdict(
                    req.id, NOT_EVALUABLE, None,
                    req.bound if req.kind == MAX_TOP_EVENT_PROBABILITY else req.min_order,
                    note=f"no analysis result for hazard {req.hazard}",
                )
            )
            continue
        if req.kind == MAX_TOP_EVENT_PROBABILITY:
            measured = result.top_probability
            status = PASS if measured <= req.bound else FAIL
            verdicts.append(RequirementVerdict(req.id, status, measured, req.bound))
        else:  # MIN_CUT_SET_ORDER
            measured = min((len(cs) for cs in result.mcs), default=None)
            status = PASS if measured is None or measured >= req.min_order else FAIL
            verdicts.append(RequirementVerdict(req.id, status, measured, req.min_order))
    return verdicts
