"""Shared fixtures.

The five-state scenario is the expensive piece (hundreds of sampled
windows), so it is computed once per session and shared by the pipeline,
lead/lag, and acceptance tests. Its wall-clock time is recorded so the
end-to-end runtime budget can be asserted without a second run.
"""

from __future__ import annotations

import os
import time

import pytest

from earlywarn.detector import DetectorConfig
from earlywarn.ingest import T2EConfig
from earlywarn.pipeline import loso_scenario_posteriors, run_detection
from earlywarn.synth import ScenarioSpec, gen_multistate_scenario

WORKERS = min(8, os.cpu_count() or 1)

SCENARIO = ScenarioSpec(
    states=("AA", "BB", "CC", "DD", "EE"),
    onset_days=(35, 40, 45, 50, 55),
    proxy_leads=(("symptom_search", 14),),
    n_days=90,
    noise_sd=0.0,
    seed=11,
)


@pytest.fixture(scope="session")
def scenario_spec() -> ScenarioSpec:
    return SCENARIO


@pytest.fixture(scope="session")
def scenario_series(scenario_spec):
    return gen_multistate_scenario(scenario_spec)


@pytest.fixture(scope="session")
def scenario_cfg(scenario_spec) -> DetectorConfig:
    return DetectorConfig(seed=scenario_spec.seed)


@pytest.fixture(scope="session")
def scenario_detection(scenario_series, scenario_cfg):
    """(DetectionResult, elapsed seconds) for the five-state scenario."""
    t0 = time.perf_counter()
    detection = run_detection(scenario_series, scenario_cfg, threads=WORKERS)
    return detection, time.perf_counter() - t0


@pytest.fixture(scope="session")
def t2e_cfg() -> T2EConfig:
    return T2EConfig()


@pytest.fixture(scope="session")
def loso_posteriors(scenario_series, scenario_detection, scenario_cfg, t2e_cfg):
    detection, _ = scenario_detection
    return loso_scenario_posteriors(
        scenario_series, detection, scenario_cfg, t2e_cfg, days_before_gold=7
    )
