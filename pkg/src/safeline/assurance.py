"""Model-connected assurance case: claims, evidence, freshness checks.

Claim structure is templated per requirement kind: each safety requirement
yields a root claim with one automation-backed leaf claim ("analysis supports
bound" or "mitigation tests pass") linked to the matching machine-generated
evidence artifact. Manual review evidence attaches via a sidecar file.
Claim status is always derived, never stored authoritatively.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import canon
from .diagnostics import Diagnostic
from .fta import FAIL, NOT_EVALUABLE, PASS, AnalysisResult, RequirementVerdict
from .model import (
    MAX_TOP_EVENT_PROBABILITY,
    MIN_CUT_SET_ORDER,
    MITIGATION_REQUIRED,
    SystemModel,
)
from .sim import NOT_EXECUTABLE, TestRunResult

FTA_RESULT = "fta_result"
TEST_RESULT = "test_result"
MANUAL_REVIEW = "manual_review"

SUPPORTED = "supported"
STALE = "stale"
UNSUPPORTED = "unsupported"
FAILED = "failed"

# Aggregation order: roots take the worst status among their children.
_STATUS_RANK = {SUPPORTED: 0, STALE: 1, UNSUPPORTED: 2, FAILED: 3}


def worst_status(statuses: list[str]) -> str:
    if not statuses:
        return SUPPORTED
    return max(statuses, key=lambda s: _STATUS_RANK[s])


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    source: str  # requirement id (roots) or parent claim id (leaves)
    strategy: str = ""
    children: tuple[str, ...] = ()

    def to_canon(self):
        return {
            "id": self.id,
            "text": self.text,
            "source": self.source,
            "strategy": self.strategy,
            "children": sorted(self.children),
        }


@dataclass(frozen=True)
class Evidence:
    id: str
    kind: str  # FTA_RESULT | TEST_RESULT | MANUAL_REVIEW
    artifact_path: str
    artifact_fingerprint: str
    model_fingerprint: str
    verdict: str  # PASS | FAIL | NOT_EVALUABLE

    def to_canon(self):
        return {
            "id": self.id,
            "kind": self.kind,
            "artifact_path": self.artifact_path,
            "artifact_fingerprint": self.artifact_fingerprint,
            "model_fingerprint": self.model_fingerprint,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class AssuranceCase:
    claims: tuple[Claim, ...]
    evidence: tuple[Evidence, ...]
    links: tuple[tuple[str, str], ...]  # (claim id, evidence id)
    model_fingerprint: str

    def claim(self, cid: str) -> Claim | None:
        for c in self.claims:
            if c.id == cid:
                return c
        return None

    def linked_evidence(self, claim_id: str) -> list[Evidence]:
        by_id = {e.id: e for e in self.evidence}
        return [by_id[eid] for cid, eid in self.links if cid == claim_id and eid in by_id]

    def roots(self) -> list[Claim]:
        child_ids = {cid for c in self.claims for cid in c.children}
        return sorted((c for c in self.claims if c.id not in child_ids), key=lambda c: c.id)

    def to_canon(self):
        return {
            "claims": sorted((c.to_canon() for c in self.claims), key=lambda c: c["id"]),
            "evidence": sorted((e.to_canon() for e in self.evidence), key=lambda e: e["id"]),
            "links": sorted(list(link) for link in self.links),
            "model_fingerprint": self.model_fingerprint,
        }


def case_from_canon(data: dict) -> AssuranceCase:
    return AssuranceCase(
        claims=tuple(
            Claim(c["id"], c["text"], c["source"], c["strategy"], tuple(c["children"]))
            for c in data["claims"]
        ),
        evidence=tuple(
            Evidence(
                e["id"], e["kind"], e["artifact_path"], e["artifact_fingerprint"],
                e["model_fingerprint"], e["verdict"],
            )
            for e in data["evidence"]
        ),
        links=tuple((link[0], link[1]) for link in data["links"]),
        model_fingerprint=data["model_fingerprint"],
    )


@dataclass(frozen=True)
class CaseReport:
    complete: bool
    consistent: bool
    statuses: dict[str, str]  # claim id -> derived status
    findings: tuple[Diagnostic, ...]

    def to_canon(self):
        return {
            "complete": self.complete,
            "consistent": self.consistent,
            "statuses": dict(sorted(self.statuses.items())),
            "findings": [
                {"severity": f.severity, "message": f.message, "element": f.element}
                for f in self.findings
            ],
        }


def _test_verdict(results: list[TestRunResult]) -> str:
    executed = [r for r in results if r.verdict != NOT_EXECUTABLE]
    if not executed:
        return NOT_EVALUABLE
    return PASS if all(r.verdict == PASS for r in executed) else FAIL


def build_case(
    m: SystemModel,
    verdicts: list[RequirementVerdict],
    analysis_paths: dict[str, str],  # hazard id -> analysis artifact path
    result_paths: dict[str, str],  # hazard id -> test-results artifact path
    test_results: dict[str, list[TestRunResult]],
    model_fingerprint: str,
    base_dir: str = ".",
    manual_evidence: list[dict] | None = None,
) -> AssuranceCase:
    """Assemble the claim-evidence graph from the pipeline's artifacts.

    Idempotent for identical inputs. Artifact paths are stored relative to
    ``base_dir`` and fingerprinted from the bytes on disk.
    """
    verdict_by_req = {v.requirement: v for v in verdicts}
    claims: list[Claim] = []
    evidence: dict[str, Evidence] = {}
    links: list[tuple[str, str]] = []

    def add_evidence(eid: str, kind: str, rel_path: str, verdict: str) -> str:
        if eid not in evidence:
            evidence[eid] = Evidence(
                id=eid,
                kind=kind,
                artifact_path=rel_path,
                artifact_fingerprint=canon.file_fingerprint(os.path.join(base_dir, rel_path)),
                model_fingerprint=model_fingerprint,
                verdict=verdict,
            )
        return eid

    for req in sorted(m.requirements, key=lambda r: r.id):
        leaf_id = f"C-{req.id}-auto"
        if req.kind == MITIGATION_REQUIRED:
            leaf_text = f"Fault-injection tests confirm mitigation for {req.hazard}"
            strategy = "argue over executed fault-injection tests"
        else:
            leaf_text = f"Fault tree analysis supports the bound of {req.id}"
            strategy = "argue over automated safety analysis"
        claims.append(
            Claim(
                id=f"C-{req.id}",
                text=f"Requirement {req.id} is satisfied",
                source=req.id,
                strategy=strategy,
                children=(leaf_id,),
            )
        )
        claims.append(Claim(id=leaf_id, text=leaf_text, source=f"C-{req.id}"))

        if req.kind in (MAX_TOP_EVENT_PROBABILITY, MIN_CUT_SET_ORDER):
            path = analysis_paths.get(req.hazard)
            if path is not None:
                verdict = verdict_by_req.get(req.id)
                eid = add_evidence(
                    f"E-fta-{req.hazard}-{req.id}", FTA_RESULT, path,
                    verdict.status if verdict else NOT_EVALUABLE,
                )
                links.append((leaf_id, eid))
        else:  # MITIGATION_REQUIRED
            path = result_paths.get(req.hazard)
            if path is not None:
                eid = add_evidence(
                    f"E-test-{req.hazard}-{req.id}", TEST_RESULT, path,
                    _test_verdict(test_results.get(req.hazard, [])),
                )
                links.append((leaf_id, eid))

    for i, entry in enumerate(manual_evidence or []):
        eid = add_evidence(
            f"E-manual-{i:03d}", MANUAL_REVIEW, entry["path"], entry["verdict"]
        )
        if any(c.id == entry["claim"] for c in claims):
            links.append((entry["claim"], eid))

    return AssuranceCase(
        claims=tuple(claims),
        evidence=tuple(sorted(evidence.values(), key=lambda e: e.id)),
        links=tuple(sorted(links)),
        model_fingerprint=model_fingerprint,
    )


def check_case(c: AssuranceCase, m: SystemModel, base_dir: str = ".") -> CaseReport:
    """Completeness, consistency, and derived claim statuses.

    Completeness: every leaf claim has at least one evidence link.
    Consistency: every evidence was created against the current model
    fingerprint and its artifact bytes on disk are unchanged.
    """
    model_fp = canon.fingerprint(m)
    findings: list[Diagnostic] = []
    statuses: dict[str, str] = {}
    complete = True
    consistent = True

    stale_evidence: set[str] = set()
    for ev in c.evidence:
        mismatch = []
        if ev.model_fingerprint != model_fp:
            mismatch.append("model fingerprint differs")
        path = os.path.join(base_dir, ev.artifact_path)
        if not os.path.exists(path):
            mismatch.append("artifact missing on disk")
        elif canon.file_fingerprint(path) != ev.artifact_fingerprint:
            mismatch.append("artifact bytes changed since linking")
        if mismatch:
            consistent = False
            stale_evidence.add(ev.id)
            findings.append(
                Diagnostic("error", f"evidence {ev.id}: {'; '.join(mismatch)}", element=ev.id)
            )

    leaf_claims = [claim for claim in c.claims if not claim.children]
    for claim in leaf_claims:
        linked = c.linked_evidence(claim.id)
        if not linked:
            complete = False
            statuses[claim.id] = UNSUPPORTED
            findings.append(
                Diagnostic("warning", f"leaf claim {claim.id} has no evidence", element=claim.id)
            )
        elif any(ev.verdict == FAIL for ev in linked):
            statuses[claim.id] = FAILED
        elif any(ev.id in stale_evidence for ev in linked):
            statuses[claim.id] = STALE
        else:
            statuses[claim.id] = SUPPORTED

    def derive(claim: Claim) -> str:
        if claim.id in statuses:
            return statuses[claim.id]
        children = [c.claim(cid) for cid in claim.children]
        statuses[claim.id] = worst_status([derive(ch) for ch in children if ch is not None])
        return statuses[claim.id]

    for claim in c.claims:
        derive(claim)

    return CaseReport(complete, consistent, statuses, tuple(findings))


def export_case(
    c: AssuranceCase, report: CaseReport, fmt: str = "interchange", timestamp: str | None = None
) -> str:
    """Deterministic case document: canonical JSON or plain structured text."""
    if fmt == "interchange":
        data = c.to_canon()
        data["report"] = report.to_canon()
        if timestamp is not None:
            data["generated_at"] = timestamp
        return canon.canon_dumps(data) + "\n"
    lines = ["ASSURANCE CASE", "=============="]
    if timestamp is not None:
        lines.append(f"generated: {timestamp}")
    lines.append(f"model fingerprint: {c.model_fingerprint}")
    lines.append(f"complete: {report.complete}   consistent: {report.consistent}")
    lines.append("")
    for root in c.roots():
        lines.append(f"[{report.statuses.get(root.id, UNSUPPORTED)}] {root.id}: {root.text}")
        for cid in sorted(root.children):
            child = c.claim(cid)
            lines.append(
                f"  [{report.statuses.get(cid, UNSUPPORTED)}] {cid}: {child.text}"
                f" (strategy: {root.strategy})"
            )
            for ev in c.linked_evidence(cid):
                lines.append(
                    f"    evidence {ev.id} ({ev.kind}, verdict={ev.verdict}) "
                    f"-> {ev.artifact_path}"
                )
    lines.append("")
    lines.append("EVIDENCE TABLE")
    for ev in sorted(c.evidence, key=lambda e: e.id):
        lines.append(
            f"  {ev.id}  kind={ev.kind}  verdict={ev.verdict}  "
            f"artifact={ev.artifact_path}  fp={ev.artifact_fingerprint[:16]}"
        )
    for finding in report.findings:
        lines.append(f"finding: {finding.severity}: {finding.message}")
    return "\n".join(lines) + "\n"
