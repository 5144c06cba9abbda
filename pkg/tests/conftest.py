from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures", "voter2")


@pytest.fixture(scope="session")
def voter2_paths() -> dict[str, str]:
    return {
        "model": os.path.join(FIXTURE_DIR, "model.sl"),
        "lib": os.path.join(FIXTURE_DIR, "cftlib.sl"),
        "behaviors": os.path.join(FIXTURE_DIR, "behaviors.sl"),
    }


@pytest.fixture(scope="session")
def voter2(voter2_paths):
    from safeline.cft import parse_library
    from safeline.model import parse_model
    from safeline.sim import parse_behaviors

    with open(voter2_paths["model"]) as f:
        model = parse_model(f.read())
    with open(voter2_paths["lib"]) as f:
        lib = parse_library(f.read())
    with open(voter2_paths["behaviors"]) as f:
        behaviors = parse_behaviors(f.read())
    return model, lib, behaviors


@pytest.fixture(scope="session")
def voter2_out(voter2_paths, tmp_path_factory):
    """One full fixed-timestamp pipeline run, shared by read-only tests."""
    from safeline.pipeline import PipelineConfig, run_pipeline

    out = tmp_path_factory.mktemp("voter2_out")
    cfg = PipelineConfig(
        model_path=voter2_paths["model"],
        lib_path=voter2_paths["lib"],
        behaviors_path=voter2_paths["behaviors"],
        out_dir=str(out),
        fixed_timestamp=True,
    )
    run = run_pipeline(cfg)
    return out, run
