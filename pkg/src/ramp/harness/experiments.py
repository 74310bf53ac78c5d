"""Parameter sweeps over the market: rounds, units, concurrent users.

Each sweep builds a fresh market per point so no state leaks between
measurements, runs in virtual time, and returns plain row dicts ready
for CSV export or assertions.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional

from ramp.agents.user import AuctionConfig
from ramp.harness.metrics import compute_metrics
from ramp.harness.orchestrator import (
    Market,
    build_market,
    run_scenario,
    start_auction,
    wait_all,
    workload_request,
)
from ramp.harness.scenario import ScenarioConfig, WorkloadSpec
from ramp.money import parse_money
from ramp.rfql.model import RfqDocument


def rounds_sweep(scenario: ScenarioConfig,
                 rounds: Iterable[int] = range(1, 11),
                 repetitions: int = 3,
                 workload: Optional[WorkloadSpec] = None) -> list[dict]:
    """One single-unit workload auctioned under varying round counts.

    Returns one row per (rounds, repetition) with the sale price and the
    total auction duration."""
    w = workload or scenario.workloads[0]
    rows = []
    for n in rounds:
        variant = replace(scenario, workloads=(replace(w, rounds=None),),
                          rounds=n, repetitions=repetitions)
        result = run_scenario(variant)
        for a in result.metrics.auctions:
            rows.append({"rounds": n, "repetition": a.repetition,
                         "workload": a.workload, "outcome": a.outcome,
                         "sale_price": a.winning_price,
                         "duration": a.duration})
    return rows


def summarize_rounds(rows: list[dict]) -> list[dict]:
    """Mean sale price and duration per round count (confirmed runs)."""
    by_n: dict[int, list[dict]] = {}
    for row in rows:
        by_n.setdefault(row["rounds"], []).append(row)
    out = []
    for n in sorted(by_n):
        confirmed = [r for r in by_n[n] if r["sale_price"] is not None]
        out.append({
            "rounds": n,
            "mean_sale_price": float(statistics.mean(
                parse_money(r["sale_price"]) for r in confirmed))
            if confirmed else None,
            "mean_duration": statistics.mean(
                r["duration"] for r in by_n[n]),
            "auctions": len(by_n[n]),
        })
    return out


def units_sweep(scenario: ScenarioConfig,
                units: Iterable[int] = range(1, 11),
                rounds: int = 3,
                round_interval: float = 0.5,
                workload: Optional[WorkloadSpec] = None) -> list[dict]:
    """One auction per point with U identical units in the document.

    A short round interval keeps message handling, not the timer, the
    dominant term, so per-round duration reflects the combinatorial
    load. Returns one row per unit count."""
    w = workload or scenario.workloads[0]
    rows = []
    for u in units:
        market = build_market(scenario, ["user-1"])
        cfg = AuctionConfig(rounds=rounds, round_interval=round_interval)

        def factory(t: float, u=u) -> RfqDocument:
            req = workload_request(w, t, scenario.deadline_horizon)
            return RfqDocument(f"units-{u}", (req,) * u)

        pending = start_auction(market, "user-1", factory, cfg,
                                at=market.rt.now() + 1.0)
        wait_all(market, [pending], guard=600.0)
        market.rt.run(until=market.rt.now() + 5.0)
        metrics = compute_metrics(market.rt.transcripts)
        a = metrics.auctions[0]
        rows.append({
            "units": u, "outcome": a.outcome,
            "mean_round_duration": statistics.mean(
                r.duration for r in a.rounds) if a.rounds else None,
            "round_durations": [r.duration for r in a.rounds],
            "finalize_duration": a.finalize_duration,
            "total_duration": a.duration,
        })
    return rows


def users_sweep(scenario: ScenarioConfig,
                users: Iterable[int] = range(1, 11),
                rounds: int = 3,
                workload: Optional[WorkloadSpec] = None) -> list[dict]:
    """K concurrent single-unit auctions; measures how long resources take
    to turn a message around (queue wait plus handling)."""
    w = workload or scenario.workloads[0]
    resource_names = {spec.name for spec in scenario.resources}
    rows = []
    for k in users:
        names = [f"user-{i}" for i in range(1, k + 1)]
        market = build_market(scenario, names)
        cfg = AuctionConfig(rounds=rounds,
                            round_interval=scenario.round_interval)
        at = market.rt.now() + 1.0
        pendings = [
            start_auction(
                market, name,
                factory=lambda t, name=name: RfqDocument(
                    f"{name}-doc",
                    (workload_request(w, t, scenario.deadline_horizon),)),
                cfg=cfg, at=at)
            for name in names]
        wait_all(market, pendings,
                 guard=rounds * scenario.round_interval + 300.0)
        market.rt.run(until=market.rt.now() + 5.0)
        waits = [rec["time"] - rec["delivered_at"]
                 for rec in market.rt.transcripts
                 if rec["type"] == "recv" and rec["agent"] in resource_names]
        done = [rec for rec in market.rt.transcripts
                if rec["type"] == "auction-done"]
        rows.append({
            "users": k,
            "mean_response": statistics.mean(waits),
            "max_response": max(waits),
            "messages": len(waits),
            "confirmed": sum(1 for rec in done
                             if rec["outcome"] == "AllConfirmed"),
        })
    return rows


def write_rows(rows: list[dict], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(rows[0].keys()) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path
