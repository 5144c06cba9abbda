"""Command-line entry point: full pipeline runs and single-stage commands.

Exit codes (stable, for CI gating):
  0  pass
  1  usage / configuration error
  2  model invalid (syntax, references, invariants)
  3  requirement or test verdict failed
  4  assurance case incomplete or inconsistent
  5  stale upstream artifacts (fingerprint mismatch)
  6  internal resource cap exceeded
"""

from __future__ import annotations

import argparse
import os
import sys

from . import canon
from .assurance import case_from_canon, check_case
from .cia import ArtifactIndex, diff, impact
from .diagnostics import ParseError, SafelineError, errors
from .fta import FAIL, EXACT, RARE_EVENT, CutSetCapExceeded, ExactMethodRefused, RequirementVerdict
from .pipeline import (
    EXIT_ASSURANCE,
    EXIT_MODEL_INVALID,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_STALE,
    EXIT_USAGE,
    EXIT_VERDICT_FAILED,
    MANIFEST,
    Pipeline,
    PipelineConfig,
    _analysis_from_canon,
    _result_from_canon,
    bundle_fingerprints,
    load_bundle,
    load_prev_bundle,
    load_prev_trees,
    render_report,
    run_pipeline,
)
from .sim import StaleSuiteError
from .testgen import suite_from_canon


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safeline",
        description="Continuous safety assessment pipeline for component-based systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("run", "run the full pipeline"),
        ("validate", "parse and validate the model inputs"),
        ("compose", "compose system fault trees per hazard"),
        ("analyze", "cut sets, probabilities, requirement verdicts"),
        ("testgen", "generate fault-injection test suites"),
        ("test", "execute generated test suites in the simulator"),
        ("assure", "assemble and check the assurance case"),
        ("impact", "change impact against a previous version"),
        ("report", "render the human-readable report"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", required=True, help="model DSL file")
        p.add_argument("--cft-lib", required=True, help="CFT library file")
        p.add_argument("--behaviors", help="behavior (state machine) file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--prev", help="previous version's output directory")
        p.add_argument(
            "--method", choices=["exact", "rare-event"], default="exact",
            help="top-event probability method",
        )
        p.add_argument("--budget-neg", type=int, default=4, help="negative-test budget")
        p.add_argument("--horizon", type=int, default=32, help="simulation horizon in ticks")
        p.add_argument("--cutset-cap", type=int, default=100_000, help="cut-set cap")
        p.add_argument(
            "--fixed-timestamp", action="store_true",
            help="emit a fixed timestamp for byte-deterministic reports",
        )
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        model_path=args.model,
        lib_path=args.cft_lib,
        behaviors_path=args.behaviors,
        out_dir=args.out,
        prev_dir=args.prev,
        method=EXACT if args.method == "exact" else RARE_EVENT,
        neg_budget=args.budget_neg,
        horizon=args.horizon,
        cut_set_cap=args.cutset_cap,
        fixed_timestamp=args.fixed_timestamp,
    )


def _print_diags(diags) -> None:
    for d in diags:
        print(str(d), file=sys.stderr)


def _load_or_exit(pipeline: Pipeline) -> bool:
    ok = pipeline.load()
    _print_diags(pipeline.run.diagnostics)
    return ok


def _read_manifest(out_dir: str) -> dict | None:
    path = os.path.join(out_dir, MANIFEST)
    if not os.path.exists(path):
        return None
    return canon.read_artifact(path)


def _require_fresh(pipeline: Pipeline, keys: list[str]) -> bool:
    """Compare recorded input fingerprints against the current inputs."""
    manifest = _read_manifest(pipeline.config.out_dir)
    if manifest is None:
        print("stale: no manifest in output directory (run 'compose' first)", file=sys.stderr)
        return False
    for key in keys:
        if manifest.get(key) != pipeline.fps.get(key):
            print(
                f"stale: recorded {key} fingerprint differs from current inputs; "
                "re-run the upstream stage",
                file=sys.stderr,
            )
            return False
    return True


def _load_trees(pipeline: Pipeline) -> bool:
    trees = load_prev_trees(pipeline.config.out_dir)
    missing = {h.id for h in pipeline.bundle.model.hazards} - set(trees)
    if missing:
        print(f"stale: missing composed trees for hazards {sorted(missing)}", file=sys.stderr)
        return False
    pipeline.trees = trees
    from .cft import instantiate

    pipeline.instances = instantiate(pipeline.bundle.model, pipeline.bundle.library)
    return True


def _load_analyses(pipeline: Pipeline) -> bool:
    for hid in pipeline.trees:
        path = os.path.join(pipeline.config.out_dir, f"analysis_{hid}.json")
        if not os.path.exists(path):
            print(f"stale: missing analysis for hazard {hid}", file=sys.stderr)
            return False
        pipeline.analyses[hid] = _analysis_from_canon(canon.read_artifact(path))
    return True


def _verdict_exit(verdicts: list[RequirementVerdict]) -> int:
    return EXIT_VERDICT_FAILED if any(v.status == FAIL for v in verdicts) else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    config = _config(args)
    try:
        return _dispatch(args.command, config)
    except (CutSetCapExceeded, ExactMethodRefused) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (StaleSuiteError,) as exc:
        print(f"stale: {exc}", file=sys.stderr)
        return EXIT_STALE
    except ParseError as exc:
        _print_diags(exc.diagnostics)
        return EXIT_MODEL_INVALID
    except SafelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_INVALID
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(command: str, config: PipelineConfig) -> int:
    if command == "run":
        run = run_pipeline(config)
        _print_diags(run.diagnostics)
        for stage, outcome in run.stages:
            print(f"{stage}: {outcome}")
        print(f"exit code: {run.exit_code}")
        return run.exit_code

    if command == "validate":
        try:
            bundle, diags = load_bundle(config)
        except ParseError as exc:
            _print_diags(exc.diagnostics)
            return EXIT_MODEL_INVALID
        _print_diags(diags)
        if errors(diags):
            return EXIT_MODEL_INVALID
        print(f"model {bundle.model.id}: valid ({len(bundle.model.components)} components)")
        return EXIT_OK

    if command == "impact":
        if config.prev_dir is None:
            print("usage error: 'impact' requires --prev", file=sys.stderr)
            return EXIT_USAGE
        pipeline = Pipeline(config)
        if not _load_or_exit(pipeline):
            return EXIT_MODEL_INVALID
        prev = load_prev_bundle(config.prev_dir)
        prev_trees = load_prev_trees(config.prev_dir)
        delta = diff(prev, pipeline.bundle)
        report = impact(delta, prev, ArtifactIndex.from_trees(prev_trees))
        canon.write_artifact(os.path.join(config.out_dir, "impact.json"), report)
        print(f"impacted hazards: {', '.join(report.impacted_hazards) or '-'}")
        print(f"stages to re-run: {', '.join(report.stages_to_rerun) or '-'}")
        return EXIT_OK

    pipeline = Pipeline(config)
    if not _load_or_exit(pipeline):
        return EXIT_MODEL_INVALID

    if command == "compose":
        pipeline.stage_compose()
        pipeline.write_manifest()
        _print_diags(pipeline.run.diagnostics)
        print(f"composed {len(pipeline.trees)} fault trees into {config.out_dir}")
        return EXIT_OK

    if command == "analyze":
        if not _require_fresh(pipeline, ["model_structural", "library_structural"]):
            return EXIT_STALE
        if not _load_trees(pipeline):
            return EXIT_STALE
        pipeline.stage_fta()
        for v in pipeline.verdicts:
            print(f"{v.requirement}: {v.status} (measured={v.measured!r}, bound={v.bound!r})")
        return _verdict_exit(pipeline.verdicts)

    if command == "testgen":
        if not _require_fresh(pipeline, ["model_structural", "library_structural"]):
            return EXIT_STALE
        if not _load_trees(pipeline) or not _load_analyses(pipeline):
            return EXIT_STALE
        pipeline.stage_testgen()
        _print_diags(pipeline.run.diagnostics)
        print(f"generated {sum(len(s.tests) for s in pipeline.suites.values())} tests")
        return EXIT_OK

    if command == "test":
        if config.behaviors_path is None:
            print("usage error: 'test' requires --behaviors", file=sys.stderr)
            return EXIT_USAGE
        if not _load_trees(pipeline):
            return EXIT_STALE
        for hid in sorted(pipeline.trees):
            path = os.path.join(config.out_dir, f"suite_{hid}.json")
            if not os.path.exists(path):
                print(f"stale: missing test suite for hazard {hid}", file=sys.stderr)
                return EXIT_STALE
            pipeline.suites[hid] = suite_from_canon(canon.read_artifact(path))
        pipeline.stage_execute()
        failed = [
            r.test
            for results in pipeline.test_results.values()
            for r in results
            if r.verdict == "fail"
        ]
        total = sum(len(r) for r in pipeline.test_results.values())
        print(f"executed {total} tests, {len(failed)} failed")
        return EXIT_VERDICT_FAILED if failed else EXIT_OK

    if command == "assure":
        if not _require_fresh(pipeline, ["model"]):
            return EXIT_STALE
        if not _load_trees(pipeline) or not _load_analyses(pipeline):
            return EXIT_STALE
        from .fta import check_requirements

        pipeline.verdicts = check_requirements(pipeline.bundle.model, pipeline.analyses)
        for hid in pipeline.trees:
            path = os.path.join(config.out_dir, f"results_{hid}.json")
            if os.path.exists(path):
                data = canon.read_artifact(path)
                pipeline.test_results[hid] = [_result_from_canon(r) for r in data["results"]]
        case, report = pipeline.stage_assure()
        print(f"assurance case: complete={report.complete} consistent={report.consistent}")
        if not report.complete or not report.consistent:
            return EXIT_ASSURANCE
        return EXIT_OK

    if command == "report":
        if not _load_trees(pipeline) or not _load_analyses(pipeline):
            return EXIT_STALE
        from .fta import check_requirements

        pipeline.verdicts = check_requirements(pipeline.bundle.model, pipeline.analyses)
        for hid in pipeline.trees:
            spath = os.path.join(config.out_dir, f"suite_{hid}.json")
            if os.path.exists(spath):
                pipeline.suites[hid] = suite_from_canon(canon.read_artifact(spath))
            rpath = os.path.join(config.out_dir, f"results_{hid}.json")
            if os.path.exists(rpath):
                data = canon.read_artifact(rpath)
                pipeline.test_results[hid] = [_result_from_canon(r) for r in data["results"]]
        case = case_report = None
        cpath = os.path.join(config.out_dir, "case.json")
        if os.path.exists(cpath):
            case = case_from_canon(canon.read_artifact(cpath))
            case_report = check_case(case, pipeline.bundle.model, base_dir=config.out_dir)
        text = render_report(
            pipeline.bundle.model,
            pipeline.analyses,
            pipeline.verdicts,
            pipeline.suites,
            pipeline.test_results,
            case,
            case_report,
            None,
            timestamp=config.timestamp(),
        )
        canon.write_text(os.path.join(config.out_dir, "report.txt"), text)
        print(text, end="")
        return EXIT_OK

    raise AssertionError(f"unhandled command {command!r}")


if __name__ == "__main__":
    sys.exit(main())
