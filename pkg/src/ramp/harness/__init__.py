from ramp.harness.metrics import Metrics, compute_metrics, read_transcripts, write_csvs
from ramp.harness.opsapi import OpsServer, run_ops_api
from ramp.harness.orchestrator import (
    Market,
    ScenarioAborted,
    ScenarioResult,
    build_live_market,
    build_market,
    run_scenario,
)
from ramp.harness.registry import (
    LocalRegistryHandle,
    RegistryClient,
    RegistryCore,
    RegistryEntry,
    RegistryServer,
)
from ramp.harness.scenario import (
    ResourceSpec,
    ScenarioConfig,
    ScenarioError,
    WorkloadSpec,
    load_scenario,
    validate_scenario,
)

__all__ = [
    "LocalRegistryHandle",
    "Market",
    "Metrics",
    "OpsServer",
    "RegistryClient",
    "RegistryCore",
    "RegistryEntry",
    "RegistryServer",
    "ResourceSpec",
    "ScenarioAborted",
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioResult",
    "WorkloadSpec",
    "build_live_market",
    "build_market",
    "compute_metrics",
    "load_scenario",
    "read_transcripts",
    "run_ops_api",
    "run_scenario",
    "validate_scenario",
    "write_csvs",
]
