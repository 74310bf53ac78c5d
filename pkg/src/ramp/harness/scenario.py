"""Scenario files: the machine roster and workload list an experiment runs.

A scenario is JSON with two tables. `resources` names each machine, the
SWF log it replays, the offset into that log, and its price band;
`workloads` lists the requests submitted one after another, each becoming
its own single-unit auction. Harness-level knobs (rounds, round_interval,
repetitions, wall_time, deadline horizon) ride along in the same file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional

from ramp.money import parse_money
from ramp.queuesim.swf import SwfLog, parse_swf
from ramp.rfql.model import ResourceProfile


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ResourceSpec:
    name: str
    base_log: Path
    time_offset: int
    start_price: Decimal
    min_price: Decimal
    cores: int

    def profile(self) -> ResourceProfile:
        # one shared static configuration, so auctions are decided by load
        # and price rather than static constraints; only the core count
        # varies by machine
        node_cores = 8 if self.cores % 8 == 0 else 1
        return ResourceProfile(
            operating_system="linux", os_version="2.6",
            architecture="x86_64", cpu_speed=2.4, ram_per_core=2048,
            node_count=self.cores // node_cores, node_cores=node_cores,
            node_disk_space=500, inter_node_bandwidth=10)

    def load_log(self) -> SwfLog:
        return parse_swf(self.base_log.read_text())


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    cores: int
    start_delay: int
    price: Decimal
    wall_time: int = 3600
    rounds: Optional[int] = None  # falls back to the scenario setting


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    resources: tuple[ResourceSpec, ...]
    workloads: tuple[WorkloadSpec, ...]
    repetitions: int = 3
    rounds: int = 3
    round_interval: float = 15.0
    deadline_horizon: int = 86400
    opening_balance: Decimal = Decimal("1000000.00")
    heartbeat_interval: float = 10.0
    extras: dict = field(default_factory=dict, compare=False)


def scenario_from_dict(data: dict, base_dir: Path) -> ScenarioConfig:
    """Build a scenario; log paths resolve relative to base_dir."""
    try:
        resources = tuple(
            ResourceSpec(name=r["name"],
                         base_log=(base_dir / r["base_log"]).resolve(),
                         time_offset=int(r["time_offset"]),
                         start_price=parse_money(str(r["start_price"])),
                         min_price=parse_money(str(r["min_price"])),
                         cores=int(r["cores"]))
            for r in data["resources"])
        workloads = tuple(
            WorkloadSpec(name=w["name"], cores=int(w["cores"]),
                         start_delay=int(w["start_delay"]),
                         price=parse_money(str(w["price"])),
                         wall_time=int(w.get("wall_time", 3600)),
                         rounds=int(w["rounds"]) if "rounds" in w else None)
            for w in data["workloads"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario field: {exc}") from exc

    cfg = ScenarioConfig(
        name=str(data.get("name", "scenario")),
        resources=resources, workloads=workloads,
        repetitions=int(data.get("repetitions", 3)),
        rounds=int(data.get("rounds", 3)),
        round_interval=float(data.get("round_interval", 15.0)),
        deadline_horizon=int(data.get("deadline_horizon", 86400)),
        opening_balance=parse_money(str(data.get("opening_balance",
                                                 "1000000.00"))),
        heartbeat_interval=float(data.get("heartbeat_interval", 10.0)))
    validate_scenario(cfg)
    return cfg


def load_scenario(path: Path | str) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    return scenario_from_dict(data, path.parent)


def validate_scenario(cfg: ScenarioConfig) -> None:
    if not cfg.resources:
        raise ScenarioError("scenario has no resources")
    if not cfg.workloads:
        raise ScenarioError("scenario has no workloads")
    seen = set()
    for spec in cfg.resources:
        if spec.name in seen:
            raise ScenarioError(f"duplicate resource name {spec.name}")
        seen.add(spec.name)
        if spec.time_offset < 0:
            raise ScenarioError(f"{spec.name}: time offset must be >= 0")
        if spec.cores <= 0:
            raise ScenarioError(f"{spec.name}: cores must be positive")
        if spec.min_price > spec.start_price:
            raise ScenarioError(
                f"{spec.name}: min price above start price")
        if not spec.base_log.is_file():
            raise ScenarioError(f"{spec.name}: log not readable: "
                                f"{spec.base_log}")
    for w in cfg.workloads:
        if w.cores <= 0 or w.wall_time <= 0 or w.start_delay < 0:
            raise ScenarioError(f"workload {w.name}: bad shape")
    if cfg.repetitions < 1 or cfg.rounds < 1 or cfg.round_interval <= 0:
        raise ScenarioError("repetitions, rounds, round_interval must be "
                            "positive")
