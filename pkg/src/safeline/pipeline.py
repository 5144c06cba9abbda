"""Pipeline orchestration: stage execution, artifacts on disk, exit codes.

Stage order: compose -> fta -> testgen -> execute -> assure, with change
impact analysis prepended when a previous version is given. Every artifact
is written atomically and deterministically; the ``manifest.json`` records
the input fingerprints each stage consumed so single-stage runs can refuse
stale upstream artifacts.
"""

from __future__ import annotations

import os
import shutil
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import canon
from .assurance import build_case, check_case, export_case
from .cft import (
    CftError,
    CftInstance,
    CftLibrary,
    SystemFaultTree,
    compose,
    event_probabilities,
    instantiate,
    tree_from_canon,
)
from .cia import (
    ASSURE,
    COMPOSE,
    EXECUTE,
    FTA,
    TESTGEN,
    ArtifactIndex,
    ImpactReport,
    VersionBundle,
    diff,
    impact,
)
from .diagnostics import Diagnostic, ParseError, SafelineError, errors
from .fta import (
    DEFAULT_CUT_SET_CAP,
    DEFAULT_EXACT_VAR_CAP,
    EXACT,
    FAIL,
    AnalysisResult,
    CutSetCapExceeded,
    ExactMethodRefused,
    RequirementVerdict,
    analyze,
    check_requirements,
)
from .model import MITIGATION_REQUIRED, SystemModel, parse_model, validate
from .sim import (
    DEFAULT_HORIZON,
    SimError,
    StaleSuiteError,
    StateMachine,
    execute_suite,
    parse_behaviors,
)
from .testgen import TestSuite, generate_tests, suite_from_canon

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL_INVALID = 2
EXIT_VERDICT_FAILED = 3
EXIT_ASSURANCE = 4
EXIT_STALE = 5
EXIT_RESOURCE = 6

FIXED_TIMESTAMP = "1970-01-01T00:00:00+00:00"

MANIFEST = "manifest.json"
INPUTS_DIR = "inputs"

# Derived artifacts compared by change impact analysis (manifest, run summary
# and input copies are bookkeeping, not derived artifacts).
DERIVED_PREFIXES = ("tree_", "analysis_", "suite_", "results_")
DERIVED_SINGLETONS = ("verdicts.json", "case.json", "report.txt")


class StaleArtifactError(SafelineError):
    """An upstream artifact was produced for different inputs."""


@dataclass
class PipelineConfig:
    model_path: str
    lib_path: str
    out_dir: str
    behaviors_path: str | None = None
    prev_dir: str | None = None
    method: str = EXACT
    cut_set_cap: int = DEFAULT_CUT_SET_CAP
    exact_var_cap: int = DEFAULT_EXACT_VAR_CAP
    neg_budget: int = 4
    horizon: int = DEFAULT_HORIZON
    fixed_timestamp: bool = False

    def timestamp(self) -> str:
        if self.fixed_timestamp:
            return FIXED_TIMESTAMP
        return datetime.now(timezone.utc).isoformat()


@dataclass
class PipelineRun:
    stages: list[tuple[str, str]] = field(default_factory=list)  # (stage, outcome)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def record(self, stage: str, outcome: str) -> None:
        self.stages.append((stage, outcome))

    def to_canon(self):
        return {
            "stages": [list(s) for s in self.stages],
            "diagnostics": [
                {"severity": d.severity, "message": d.message, "element": d.element}
                for d in self.diagnostics
            ],
            "exit_code": self.exit_code,
        }


def load_bundle(config: PipelineConfig) -> tuple[VersionBundle, list[Diagnostic]]:
    """Parse and validate all inputs; diagnostics carry any model errors."""
    from .cft import parse_library

    with open(config.model_path, encoding="utf-8") as fh:
        model = parse_model(fh.read())
    diags = validate(model)
    with open(config.lib_path, encoding="utf-8") as fh:
        library = parse_library(fh.read())
    behaviors: dict[str, StateMachine] = {}
    if config.behaviors_path:
        with open(config.behaviors_path, encoding="utf-8") as fh:
            behaviors = parse_behaviors(fh.read())
    return VersionBundle(model, library, behaviors), diags


def bundle_fingerprints(bundle: VersionBundle) -> dict[str, str | None]:
    return {
        "model": canon.fingerprint(bundle.model),
        "model_structural": canon.fingerprint(bundle.model.structural_canon()),
        "library": canon.fingerprint(bundle.library),
        "library_structural": canon.fingerprint(bundle.library.structural_canon()),
        "behaviors": canon.fingerprint({k: v.to_canon() for k, v in bundle.behaviors.items()})
        if bundle.behaviors
        else None,
    }


def load_prev_bundle(prev_dir: str) -> VersionBundle:
    cfg = PipelineConfig(
        model_path=os.path.join(prev_dir, INPUTS_DIR, "model.sl"),
        lib_path=os.path.join(prev_dir, INPUTS_DIR, "cftlib.sl"),
        out_dir=prev_dir,
    )
    behaviors = os.path.join(prev_dir, INPUTS_DIR, "behaviors.sl")
    if os.path.exists(behaviors):
        cfg.behaviors_path = behaviors
    bundle, _ = load_bundle(cfg)
    return bundle


def load_prev_trees(prev_dir: str) -> dict[str, SystemFaultTree]:
    trees: dict[str, SystemFaultTree] = {}
    for name in sorted(os.listdir(prev_dir)):
        if name.startswith("tree_") and name.endswith(".json"):
            tree = tree_from_canon(canon.read_artifact(os.path.join(prev_dir, name)))
            trees[tree.hazard] = tree
    return trees


def _copy_inputs(config: PipelineConfig) -> None:
    dest = os.path.join(config.out_dir, INPUTS_DIR)
    os.makedirs(dest, exist_ok=True)
    shutil.copyfile(config.model_path, os.path.join(dest, "model.sl"))
    shutil.copyfile(config.lib_path, os.path.join(dest, "cftlib.sl"))
    if config.behaviors_path:
        shutil.copyfile(config.behaviors_path, os.path.join(dest, "behaviors.sl"))


def _horizon_for(m: SystemModel, hazard: str, default: int) -> int:
    deadlines = [
        r.detection_deadline
        for r in m.requirements
        if r.kind == MITIGATION_REQUIRED and r.hazard == hazard and r.detection_deadline
    ]
    return max([default] + [d + 1 for d in deadlines])


def _analysis_from_canon(data: dict) -> AnalysisResult:
    return AnalysisResult(
        hazard=data["hazard"],
        mcs=tuple(frozenset(cs) for cs in data["mcs"]),
        top_probability=data["top_probability"],
        method=data["method"],
        mission_time=data["mission_time"],
        model_fingerprint=data["model_fingerprint"],
        tree_fingerprint=data["tree_fingerprint"],
    )


def _mission_time(m: SystemModel, hazard: str) -> float:
    times = sorted(
        r.mission_time
        for r in m.requirements
        if r.hazard == hazard and r.mission_time is not None
    )
    return times[0] if times else 1.0


class Pipeline:
    """Executes the stage graph for one model version into one output dir."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.run = PipelineRun()
        self.bundle: VersionBundle | None = None
        self.fps: dict[str, str | None] = {}
        self.instances: dict[str, CftInstance] = {}
        self.trees: dict[str, SystemFaultTree] = {}
        self.analyses: dict[str, AnalysisResult] = {}
        self.verdicts: list[RequirementVerdict] = []
        self.suites: dict[str, TestSuite] = {}
        self.test_results: dict[str, list] = {}
        self.impact_report: ImpactReport | None = None
        self.reused: set[str] = set()

    # -- helpers ----------------------------------------------------------

    def _path(self, name: str) -> str:
        return os.path.join(self.config.out_dir, name)

    def _write(self, name: str, obj) -> None:
        canon.write_artifact(self._path(name), obj)

    def _reuse(self, name: str) -> bool:
        """Copy an artifact from the previous run when CIA cleared it."""
        if self.impact_report is None or self.config.prev_dir is None:
            return False
        if name in self.impact_report.impacted_artifacts:
            return False
        src = os.path.join(self.config.prev_dir, name)
        if not os.path.exists(src):
            return False
        shutil.copyfile(src, self._path(name))
        self.reused.add(name)
        return True

    # -- stages -----------------------------------------------------------

    def load(self) -> bool:
        os.makedirs(self.config.out_dir, exist_ok=True)
        try:
            self.bundle, diags = load_bundle(self.config)
        except ParseError as exc:
            self.run.diagnostics.extend(exc.diagnostics)
            self.run.record("load", "model invalid")
            self.run.exit_code = EXIT_MODEL_INVALID
            return False
        self.run.diagnostics.extend(diags)
        if errors(diags):
            self.run.record("load", "model invalid")
            self.run.exit_code = EXIT_MODEL_INVALID
            return False
        self.fps = bundle_fingerprints(self.bundle)
        _copy_inputs(self.config)
        self.run.record("load", "ok")
        return True

    def stage_cia(self) -> None:
        prev = load_prev_bundle(self.config.prev_dir)
        prev_trees = load_prev_trees(self.config.prev_dir)
        delta = diff(prev, self.bundle)
        self.impact_report = impact(delta, prev, ArtifactIndex.from_trees(prev_trees))
        self._write("impact.json", self.impact_report)
        self.run.record(
            "cia",
            "empty delta" if delta.empty()
            else "stages " + ",".join(self.impact_report.stages_to_rerun),
        )

    def stage_compose(self) -> None:
        m = self.bundle.model
        self.instances = instantiate(m, self.bundle.library)
        for hazard in sorted(m.hazards, key=lambda h: h.id):
            name = f"tree_{hazard.id}.json"
            if self._reuse(name):
                self.trees[hazard.id] = tree_from_canon(
                    canon.read_artifact(self._path(name))
                )
                continue
            tree, diags = compose(m, self.instances, hazard)
            self.run.diagnostics.extend(diags)
            self.trees[hazard.id] = tree
            self._write(name, tree)
        self.run.record(COMPOSE, f"{len(self.trees)} trees")

    def stage_fta(self) -> None:
        m = self.bundle.model
        for hid, tree in sorted(self.trees.items()):
            name = f"analysis_{hid}.json"
            if self._reuse(name):
                self.analyses[hid] = _analysis_from_canon(
                    canon.read_artifact(self._path(name))
                )
                continue
            mission_time = _mission_time(m, hid)
            probs = event_probabilities(self.instances, mission_time)
            self.analyses[hid] = analyze(
                tree,
                probs,
                mission_time,
                self.config.method,
                model_fingerprint=self.fps["model"],
                tree_fingerprint=canon.fingerprint(tree),
                cut_set_cap=self.config.cut_set_cap,
                exact_var_cap=self.config.exact_var_cap,
            )
            self._write(name, self.analyses[hid])
        self.verdicts = check_requirements(m, self.analyses)
        self._write(
            "verdicts.json",
            {
                "model_fingerprint": self.fps["model"],
                "verdicts": [v.to_canon() for v in self.verdicts],
            },
        )
        self.run.record(FTA, f"{len(self.verdicts)} verdicts")

    def stage_testgen(self) -> None:
        m = self.bundle.model
        for hid, tree in sorted(self.trees.items()):
            name = f"suite_{hid}.json"
            if self._reuse(name):
                self.suites[hid] = suite_from_canon(canon.read_artifact(self._path(name)))
                continue
            suite, diags = generate_tests(
                tree,
                list(self.analyses[hid].mcs),
                m,
                self.instances,
                self.config.neg_budget,
                model_fingerprint=self.fps["model_structural"],
                tree_fingerprint=canon.fingerprint(tree),
            )
            self.run.diagnostics.extend(diags)
            self.suites[hid] = suite
            self._write(name, suite)
        self.run.record(TESTGEN, f"{sum(len(s.tests) for s in self.suites.values())} tests")

    def stage_execute(self) -> None:
        if not self.bundle.behaviors:
            self.run.record(EXECUTE, "skipped: no behaviors")
            return
        m = self.bundle.model
        for hid, suite in sorted(self.suites.items()):
            name = f"results_{hid}.json"
            if self._reuse(name):
                data = canon.read_artifact(self._path(name))
                self.test_results[hid] = [
                    _result_from_canon(r) for r in data["results"]
                ]
                continue
            horizon = _horizon_for(m, hid, self.config.horizon)
            results = execute_suite(
                m, self.bundle.behaviors, suite, horizon, self.fps["model_structural"]
            )
            self.test_results[hid] = results
            self._write(
                name,
                {
                    "hazard": hid,
                    "suite_fingerprint": canon.fingerprint(suite),
                    "behaviors_fingerprint": self.fps["behaviors"],
                    "results": [r.to_canon() for r in results],
                },
            )
        total = sum(len(r) for r in self.test_results.values())
        self.run.record(EXECUTE, f"{total} test runs")

    def stage_assure(self, manual_evidence: list[dict] | None = None):
        m = self.bundle.model
        analysis_paths = {hid: f"analysis_{hid}.json" for hid in self.analyses}
        result_paths = {
            hid: f"results_{hid}.json"
            for hid in self.test_results
            if os.path.exists(self._path(f"results_{hid}.json"))
        }
        case = build_case(
            m,
            self.verdicts,
            analysis_paths,
            result_paths,
            self.test_results,
            self.fps["model"],
            base_dir=self.config.out_dir,
            manual_evidence=manual_evidence,
        )
        report = check_case(case, m, base_dir=self.config.out_dir)
        data = case.to_canon()
        data["report"] = report.to_canon()
        self._write("case.json", data)
        self.run.record(ASSURE, "complete" if report.complete else "incomplete")
        return case, report

    def stage_report(self, case, case_report) -> None:
        text = render_report(
            self.bundle.model,
            self.analyses,
            self.verdicts,
            self.suites,
            self.test_results,
            case,
            case_report,
            self.impact_report,
            timestamp=self.config.timestamp(),
        )
        canon.write_text(self._path("report.txt"), text)

    def write_manifest(self) -> None:
        manifest = dict(self.fps)
        manifest["trees"] = {
            hid: canon.fingerprint(tree) for hid, tree in sorted(self.trees.items())
        }
        self._write(MANIFEST, manifest)

    # -- orchestration ----------------------------------------------------

    def execute_all(self) -> PipelineRun:
        if not self.load():
            self._write("run.json", self.run)
            return self.run
        try:
            if self.config.prev_dir:
                self.stage_cia()
            self.stage_compose()
            self.stage_fta()
            self.stage_testgen()
            self.stage_execute()
            case, case_report = self.stage_assure()
            self.stage_report(case, case_report)
            self.write_manifest()
        except (CutSetCapExceeded, ExactMethodRefused) as exc:
            self.run.diagnostics.append(Diagnostic("error", str(exc)))
            self.run.record("abort", "resource cap")
            self.run.exit_code = EXIT_RESOURCE
            self._write("run.json", self.run)
            return self.run
        except (StaleSuiteError, StaleArtifactError) as exc:
            self.run.diagnostics.append(Diagnostic("error", str(exc)))
            self.run.record("abort", "stale artifacts")
            self.run.exit_code = EXIT_STALE
            self._write("run.json", self.run)
            return self.run
        except (CftError, SimError, ParseError) as exc:
            self.run.diagnostics.append(Diagnostic("error", str(exc)))
            self.run.record("abort", "model invalid")
            self.run.exit_code = EXIT_MODEL_INVALID
            self._write("run.json", self.run)
            return self.run

        failed_verdicts = any(v.status == FAIL for v in self.verdicts)
        failed_tests = any(
            r.verdict == "fail" for results in self.test_results.values() for r in results
        )
        if failed_verdicts or failed_tests:
            self.run.exit_code = EXIT_VERDICT_FAILED
        elif not case_report.complete or not case_report.consistent:
            self.run.exit_code = EXIT_ASSURANCE
        self._write("run.json", self.run)
        return self.run


def _result_from_canon(data: dict):
    from .sim import TestRunResult

    return TestRunResult(
        test=data["test"],
        verdict=data["verdict"],
        trace=None,  # traces are not needed in memory for verdict aggregation
        detection_latency=data["detection_latency"],
        horizon=data["horizon"],
    )


def run_pipeline(config: PipelineConfig) -> PipelineRun:
    return Pipeline(config).execute_all()


# ---------------------------------------------------------------------------
# Human-readable report


def render_report(
    m: SystemModel,
    analyses: dict[str, AnalysisResult],
    verdicts: list[RequirementVerdict],
    suites: dict[str, TestSuite],
    test_results: dict[str, list],
    case,
    case_report,
    impact_report: ImpactReport | None,
    timestamp: str,
) -> str:
    lines = [
        "SAFETY ASSESSMENT REPORT",
        "========================",
        f"generated: {timestamp}",
        "",
        "MODEL SUMMARY",
        f"  model: {m.id}  version: {m.version!r}",
        f"  components: {len(m.components)}  connections: {len(m.connections)}  "
        f"hazards: {len(m.hazards)}  requirements: {len(m.requirements)}",
        "",
        "MINIMAL CUT SETS",
    ]
    for hid in sorted(analyses):
        result = analyses[hid]
        lines.append(f"  hazard {hid} ({result.method}, t={result.mission_time}h):")
        for cs in result.mcs:
            lines.append(f"    order {len(cs)}: {{{', '.join(sorted(cs))}}}")
        lines.append(f"    top-event probability: {result.top_probability:.6g}")
    lines += ["", "REQUIREMENT VERDICTS"]
    for v in verdicts:
        lines.append(
            f"  {v.requirement}: {v.status}  (measured={v.measured!r}, bound={v.bound!r})"
            + (f"  note: {v.note}" if v.note else "")
        )
    lines += ["", "TEST MATRIX"]
    for hid in sorted(suites):
        results = {r.test: r for r in test_results.get(hid, [])}
        for test in sorted(suites[hid].tests, key=lambda t: t.id):
            run_result = results.get(test.id)
            verdict = run_result.verdict if run_result else "not run"
            latency = (
                f" latency={run_result.detection_latency}"
                if run_result and run_result.detection_latency is not None
                else ""
            )
            events = ",".join(sorted(test.injected_events()))
            lines.append(f"  {test.id} [{test.kind}] inject {{{events}}}: {verdict}{latency}")
    lines += ["", "ASSURANCE"]
    if case is not None and case_report is not None:
        lines.append(
            f"  complete: {case_report.complete}  consistent: {case_report.consistent}"
        )
        for root in case.roots():
            lines.append(f"  {root.id}: {case_report.statuses.get(root.id)}")
    lines += ["", "CHANGE IMPACT"]
    if impact_report is None:
        lines.append("  no previous version supplied")
    else:
        lines.append(f"  impacted hazards: {', '.join(impact_report.impacted_hazards) or '-'}")
        lines.append(f"  stages to re-run: {', '.join(impact_report.stages_to_rerun) or '-'}")
        lines.append(
            f"  impacted artifacts: {', '.join(impact_report.impacted_artifacts) or '-'}"
        )
    return "\n".join(lines) + "\n"
