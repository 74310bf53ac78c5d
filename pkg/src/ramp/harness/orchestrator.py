"""Scenario orchestration over the virtual runtime.

build_market assembles bank, registry, and one resource agent per
scenario row inside a VirtualRuntime. run_scenario then submits the
workload list one auction at a time, each from a fresh user agent,
repeated per the scenario's repetition count, and writes transcripts,
ledger, and figure CSVs when given an output directory.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Callable, Optional

from ramp.agents.bank import BankAgent, BankCore
from ramp.agents.resource import ResourceAgent, ResourceAgentConfig
from ramp.agents.user import AuctionConfig, UserAgent
from ramp.harness.metrics import Metrics, compute_metrics, write_csvs
from ramp.harness.registry import LocalRegistryHandle, RegistryCore
from ramp.harness.scenario import ScenarioConfig, WorkloadSpec
from ramp.pricing import PricingConfig
from ramp.queuesim.machine import MachineModel, SimClock
from ramp.queuesim.swf import SwfLog, parse_swf
from ramp.rfql.model import RfqDocument, RfqRequest
from ramp.runtime import LiveRuntime, VirtualRuntime
from ramp.signing import KeyStore, new_key

Runtime = VirtualRuntime | LiveRuntime

BANK = "bank"

# resources keep quoting against a three-round expectation regardless of
# how many rounds the user actually runs
ANTICIPATED_ROUNDS = 3


class ScenarioAborted(RuntimeError):
    pass


@dataclass
class Market:
    rt: Runtime
    registry: RegistryCore
    keys: KeyStore
    bank: BankCore
    machines: dict[str, MachineModel]
    scenario: ScenarioConfig

    def registry_handle(self) -> LocalRegistryHandle:
        return LocalRegistryHandle(self.registry, self.rt.now)

    def add_user(self, name: str) -> UserAgent:
        user = UserAgent(name, self.registry_handle(),
                         self.keys.key_of(name), bank=BANK)
        self.rt.add_agent(user)
        return user


def _assemble(scenario: ScenarioConfig, user_names: list[str],
              rt: Runtime) -> Market:
    registry = RegistryCore(heartbeat_interval=scenario.heartbeat_interval)
    keys = KeyStore()
    balances: dict[str, Decimal] = {}
    keys.register(BANK, new_key())
    for name in user_names:
        keys.register(name, new_key())
        balances[name] = scenario.opening_balance

    logs: dict[Path, SwfLog] = {}
    machines: dict[str, MachineModel] = {}
    for spec in scenario.resources:
        if spec.base_log not in logs:
            logs[spec.base_log] = parse_swf(spec.base_log.read_text())
        keys.register(spec.name, new_key())
        balances[spec.name] = Decimal("0.00")
        machine = MachineModel(
            total_cores=spec.cores, log=logs[spec.base_log],
            clock=SimClock(system_start=rt.now(),
                           log_offset=spec.time_offset),
            name=spec.name)
        machines[spec.name] = machine
        config = ResourceAgentConfig(
            resource_id=spec.name, profile=spec.profile(),
            pricing=PricingConfig(spec.start_price, spec.min_price,
                                  ANTICIPATED_ROUNDS),
            signing_key=keys.key_of(spec.name), bank=BANK)
        rt.add_agent(ResourceAgent(
            config, machine, LocalRegistryHandle(registry, rt.now),
            keys=keys))

    bank = BankCore(keys=keys, opening_balances=balances)
    rt.add_agent(BankAgent(BANK, bank))
    market = Market(rt=rt, registry=registry, keys=keys, bank=bank,
                    machines=machines, scenario=scenario)
    for name in user_names:
        market.add_user(name)
    return market


def build_market(scenario: ScenarioConfig, user_names: list[str],
                 rt: Optional[VirtualRuntime] = None) -> Market:
    """Bank + registry + all scenario resources, plus one user agent per
    name (balances opened at the scenario's opening_balance)."""
    rt = rt or VirtualRuntime()
    market = _assemble(scenario, user_names, rt)
    rt.run(until=rt.now() + 0.5)  # registrations before the first CFP
    return market


def build_live_market(scenario: ScenarioConfig, user_names: list[str],
                      deadline: float = 10.0) -> Market:
    """Same assembly on threaded agents; blocks until every resource has
    registered so callers can CFP immediately."""
    rt = LiveRuntime()
    market = _assemble(scenario, user_names, rt)
    rt.start()
    handle = market.registry_handle()
    limit = time.monotonic() + deadline
    while len(handle.list_alive()) < len(scenario.resources):
        if time.monotonic() > limit:
            rt.stop()
            raise ScenarioAborted("resources did not register in time")
        time.sleep(0.02)
    return market


def workload_request(w: WorkloadSpec, submit_time: float,
                     horizon: int) -> RfqRequest:
    # the deadline allows a full day beyond the earliest start
    start = int(submit_time) + w.start_delay
    return RfqRequest(cpu_hour_cost=w.price, deadline=start + horizon,
                      wall_time=w.wall_time, total_cores=w.cores,
                      start=start)


@dataclass
class PendingAuction:
    user: str
    box: dict = field(default_factory=dict)
    label: Optional[str] = None

    @property
    def auction_id(self) -> Optional[str]:
        return self.box.get("auction_id")


def start_auction(market: Market, user: str,
                  factory: Callable[[float], RfqDocument],
                  cfg: AuctionConfig, at: Optional[float] = None,
                  label: Optional[str] = None,
                  repetition: Optional[int] = None) -> PendingAuction:
    """Schedule an auction start on the user's loop at `at` (default now).

    `factory(submit_time)` builds the document, so relative starts and
    deadlines anchor to the actual submission instant."""
    pending = PendingAuction(user=user, label=label)

    def kick(agent: UserAgent, ctx) -> None:
        doc = factory(ctx.now())
        auction_id = agent.start_auction(ctx, doc, cfg)
        pending.box["auction_id"] = auction_id
        if label is not None:
            ctx.record("workload", auction_id=auction_id, workload=label,
                       repetition=repetition)

    market.rt.schedule_call(at if at is not None else market.rt.now(),
                            user, kick)
    return pending


def wait_all(market: Market, pendings: list[PendingAuction],
             guard: float) -> None:
    """Advance virtual time until every auction reaches a terminal phase."""
    rt = market.rt
    deadline = rt.now() + guard

    def unfinished() -> list[PendingAuction]:
        out = []
        for p in pendings:
            agent = rt.agent(p.user)
            snap = agent.snapshot(p.auction_id) if p.auction_id else None
            if snap is None or snap["phase"] not in ("done", "failed"):
                out.append(p)
        return out

    while rt.now() < deadline:
        if not unfinished():
            return
        rt.run(until=min(deadline, rt.now() + 5.0))
    stuck = [p.auction_id or p.user for p in unfinished()]
    if stuck:
        raise ScenarioAborted(f"auctions never terminated: {stuck}")


@dataclass
class ScenarioResult:
    scenario: ScenarioConfig
    metrics: Metrics
    transcripts: list[dict]
    ledger: list[dict]
    out_dir: Optional[Path]
    files: list[Path] = field(default_factory=list)


def run_scenario(scenario: ScenarioConfig,
                 out_dir: Optional[Path | str] = None,
                 repetitions: Optional[int] = None,
                 rounds: Optional[int] = None) -> ScenarioResult:
    reps = repetitions if repetitions is not None else scenario.repetitions
    if rounds is not None:
        scenario = replace(scenario, rounds=rounds)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    users = [f"user-r{rep}-{w.name}"
             for rep in range(1, reps + 1) for w in scenario.workloads]
    try:
        market = build_market(scenario, users)
        for rep in range(1, reps + 1):
            for w in scenario.workloads:
                cfg = AuctionConfig(rounds=w.rounds or scenario.rounds,
                                    round_interval=scenario.round_interval)
                n_rounds = cfg.rounds
                pending = start_auction(
                    market, f"user-r{rep}-{w.name}",
                    factory=lambda t, w=w: RfqDocument(w.name, (
                        workload_request(w, t, scenario.deadline_horizon),)),
                    cfg=cfg, at=market.rt.now() + 1.0,
                    label=w.name, repetition=rep)
                wait_all(market, [pending],
                         guard=n_rounds * scenario.round_interval + 300.0)
        market.rt.run(until=market.rt.now() + 10.0)  # flush settlements
    except Exception as exc:
        if out is not None:
            (out / "PARTIAL").write_text(f"aborted: {exc}\n")
        raise ScenarioAborted(str(exc)) from exc

    return _collect(market, scenario, out)


def _collect(market: Market, scenario: ScenarioConfig,
             out: Optional[Path]) -> ScenarioResult:
    metrics = compute_metrics(market.rt.transcripts)
    result = ScenarioResult(scenario=scenario, metrics=metrics,
                            transcripts=market.rt.transcripts,
                            ledger=[e.to_json() for e in market.bank.entries],
                            out_dir=out)
    if out is not None:
        with (out / "transcripts.jsonl").open("w") as fh:
            for rec in result.transcripts:
                fh.write(json.dumps(rec, default=str) + "\n")
        with (out / "ledger.jsonl").open("w") as fh:
            for entry in result.ledger:
                fh.write(json.dumps(entry, default=str) + "\n")
        result.files = write_csvs(result.metrics, out)
        result.files += [out / "transcripts.jsonl", out / "ledger.jsonl"]
    return result


def run_scenario_live(scenario: ScenarioConfig,
                      out_dir: Optional[Path | str] = None,
                      repetitions: Optional[int] = None,
                      rounds: Optional[int] = None) -> ScenarioResult:
    """run_scenario on threaded agents and the wall clock. Round timers
    tick in real time, so this is only sensible for short intervals or
    demonstrations; the virtual runner is the default for experiments."""
    reps = repetitions if repetitions is not None else scenario.repetitions
    if rounds is not None:
        scenario = replace(scenario, rounds=rounds)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    users = [f"user-r{rep}-{w.name}"
             for rep in range(1, reps + 1) for w in scenario.workloads]
    market = build_live_market(scenario, users)
    rt = market.rt
    try:
        for rep in range(1, reps + 1):
            for w in scenario.workloads:
                user = f"user-r{rep}-{w.name}"
                cfg = AuctionConfig(rounds=w.rounds or scenario.rounds,
                                    round_interval=scenario.round_interval)

                def kick(agent: UserAgent, ctx, w=w, rep=rep) -> None:
                    doc = RfqDocument(w.name, (workload_request(
                        w, ctx.now(), scenario.deadline_horizon),))
                    auction_id = agent.start_auction(ctx, doc, cfg)
                    ctx.record("workload", auction_id=auction_id,
                               workload=w.name, repetition=rep)
                    return auction_id

                auction_id = rt.call(user, kick)
                guard = time.monotonic() + cfg.rounds * cfg.round_interval + 120.0
                while True:
                    snap = rt.call(user, lambda a, ctx,
                                   i=auction_id: a.snapshot(i))
                    if snap["phase"] in ("done", "failed"):
                        break
                    if time.monotonic() > guard:
                        raise ScenarioAborted(
                            f"auction {auction_id} never terminated")
                    time.sleep(0.1)
        time.sleep(1.0)  # let settlements land
    except Exception as exc:
        if out is not None:
            (out / "PARTIAL").write_text(f"aborted: {exc}\n")
        raise
    finally:
        rt.stop()
    return _collect(market, scenario, out)
