"""Turn raw run transcripts into per-auction metrics and figure CSVs.

Everything here is a pure function of the transcript list: feeding the
same records back in yields byte-identical CSV files. Auctions that never
reached a terminal record are flagged incomplete and left out of the
aggregates.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional

from ramp.money import parse_money


@dataclass
class RoundMetrics:
    round: int
    request_price: str
    n_offers: int
    mean_offer: Optional[str]
    best_offer: Optional[str]
    closed_at: float
    duration: float


@dataclass
class AuctionMetrics:
    auction_id: str
    user: str
    started_at: float
    workload: Optional[str] = None
    repetition: Optional[int] = None
    outcome: Optional[str] = None
    request_price: Optional[str] = None
    winning_price: Optional[str] = None
    winner: Optional[str] = None
    duration: Optional[float] = None
    finalize_duration: Optional[float] = None
    rounds: list[RoundMetrics] = field(default_factory=list)
    units: int = 1
    incomplete: bool = True


@dataclass
class OfferRow:
    time: float
    resource: str
    auction_id: str
    unit: int
    round: int
    price: str
    request_price: Optional[str]
    meets_requirements: bool
    load: float
    attractiveness: str
    proposed_start: float


@dataclass
class Metrics:
    auctions: list[AuctionMetrics]
    offers: list[OfferRow]
    attractiveness: list[dict]  # time, resource, value, load
    winner_shares: dict[str, int]
    median_offer_ratio: Optional[float]
    incomplete: list[str]


def _auction_of_conversation(conversation_id: str) -> str:
    return conversation_id.rsplit("/", 1)[0]


def compute_metrics(transcripts: list[dict]) -> Metrics:
    auctions: dict[str, AuctionMetrics] = {}
    annotations: dict[str, dict] = {}
    asks: dict[tuple[str, int, int], str] = {}  # (auction, unit, round) -> ask
    raw_offers: list[dict] = []
    attractiveness: list[dict] = []

    for rec in transcripts:
        kind = rec.get("type")
        if kind == "auction-start":
            auctions[rec["auction_id"]] = AuctionMetrics(
                auction_id=rec["auction_id"], user=rec["agent"],
                started_at=rec["time"], units=rec.get("units", 1),
                request_price=(rec.get("prices") or [None])[0])
        elif kind == "workload":
            annotations[rec["auction_id"]] = rec
        elif kind == "round-closed":
            a = auctions.get(rec["auction_id"])
            if a is None:
                continue
            asks[(rec["auction_id"], rec["unit"], rec["round"])] = \
                rec["request_price"]
            if rec["unit"] == 0:
                prev = a.rounds[-1].closed_at if a.rounds else a.started_at
                a.rounds.append(RoundMetrics(
                    round=rec["round"], request_price=rec["request_price"],
                    n_offers=rec["n_offers"], mean_offer=rec["mean_price"],
                    best_offer=rec["best_price"], closed_at=rec["time"],
                    duration=rec["time"] - prev))
        elif kind == "offer":
            raw_offers.append(rec)
        elif kind == "attractiveness":
            attractiveness.append({"time": rec["time"],
                                   "resource": rec["agent"],
                                   "value": rec["value"],
                                   "load": rec["load"]})
        elif kind == "auction-done":
            a = auctions.get(rec["auction_id"])
            if a is None:
                continue
            a.outcome = rec["outcome"]
            a.duration = rec["duration"]
            a.finalize_duration = rec.get("finalize_duration")
            a.incomplete = False
            winners = rec.get("winners") or []
            if winners:
                a.winner = winners[0]["resource"]
                a.winning_price = winners[0]["price"]

    for aid, note in annotations.items():
        a = auctions.get(aid)
        if a is not None:
            a.workload = note.get("workload")
            a.repetition = note.get("repetition")

    offers: list[OfferRow] = []
    ratios: list[float] = []
    for rec in raw_offers:
        auction_id = _auction_of_conversation(rec["conversation_id"])
        ask = asks.get((auction_id, rec["unit"], rec["round"]))
        row = OfferRow(
            time=rec["time"], resource=rec["agent"], auction_id=auction_id,
            unit=rec["unit"], round=rec["round"], price=rec["price"],
            request_price=ask,
            meets_requirements=rec["meets_requirements"],
            load=rec["load"], attractiveness=rec["attractiveness"],
            proposed_start=rec["proposed_start"])
        offers.append(row)
        if row.meets_requirements and ask is not None:
            ratios.append(float(parse_money(row.price) / parse_money(ask)))

    complete = [a for a in auctions.values() if not a.incomplete]
    for a in complete:
        if a.winning_price is not None and a.request_price is not None:
            assert parse_money(a.winning_price) <= parse_money(a.request_price)
        assert a.duration is None or a.duration >= 0

    shares: dict[str, int] = {}
    for a in complete:
        if a.winner:
            shares[a.winner] = shares.get(a.winner, 0) + 1

    return Metrics(
        auctions=sorted(auctions.values(), key=lambda a: a.started_at),
        offers=sorted(offers, key=lambda o: (o.time, o.resource)),
        attractiveness=sorted(attractiveness,
                              key=lambda r: (r["time"], r["resource"])),
        winner_shares=dict(sorted(shares.items())),
        median_offer_ratio=statistics.median(ratios) if ratios else None,
        incomplete=sorted(a.auction_id for a in auctions.values()
                          if a.incomplete))


def attractiveness_rank(metrics: Metrics, auction: AuctionMetrics,
                        at_time: Optional[float] = None) -> Optional[int]:
    """Winner's 1-based rank among the latest attractiveness samples known
    for every resource at the auction's close (or `at_time`)."""
    if auction.winner is None:
        return None
    cutoff = at_time if at_time is not None else \
        (auction.started_at + (auction.duration or 0.0))
    latest: dict[str, Decimal] = {}
    for row in metrics.attractiveness:
        if row["time"] <= cutoff:
            latest[row["resource"]] = parse_money(row["value"])
    for offer in metrics.offers:
        if offer.time <= cutoff:
            latest[offer.resource] = parse_money(offer.attractiveness)
    if auction.winner not in latest:
        return None
    better = sum(1 for v in latest.values() if v > latest[auction.winner])
    return better + 1


def offers_by_resource(metrics: Metrics,
                       auction_id: str) -> dict[tuple[str, int], list[OfferRow]]:
    """Offer rows grouped by (resource, unit), round order preserved."""
    groups: dict[tuple[str, int], list[OfferRow]] = {}
    for row in metrics.offers:
        if row.auction_id == auction_id:
            groups.setdefault((row.resource, row.unit), []).append(row)
    for rows in groups.values():
        rows.sort(key=lambda r: r.round)
    return groups


def read_transcripts(directory: Path | str) -> list[dict]:
    """Merge every *.jsonl under directory, ordered by record time."""
    records: list[dict] = []
    for path in sorted(Path(directory).glob("*.jsonl")):
        with path.open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
    records.sort(key=lambda r: r.get("time", 0.0))
    return records


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_csvs(metrics: Metrics, out_dir: Path | str) -> list[Path]:
    """One CSV per figure; returns the files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    complete = [a for a in metrics.auctions if not a.incomplete]

    _write_csv(out / "auctions.csv",
               ["auction_id", "workload", "repetition", "user", "units",
                "outcome", "request_price", "winning_price", "winner",
                "duration", "finalize_duration", "n_rounds"],
               [[a.auction_id, a.workload, a.repetition, a.user, a.units,
                 a.outcome, a.request_price, a.winning_price, a.winner,
                 a.duration, a.finalize_duration, len(a.rounds)]
                for a in complete])

    _write_csv(out / "round_prices.csv",
               ["auction_id", "workload", "round", "request_price",
                "mean_offer", "best_offer", "n_offers", "round_duration"],
               [[a.auction_id, a.workload, r.round, r.request_price,
                 r.mean_offer, r.best_offer, r.n_offers, r.duration]
                for a in complete for r in a.rounds])

    _write_csv(out / "offers.csv",
               ["time", "resource", "auction_id", "unit", "round", "price",
                "request_price", "meets_requirements", "load",
                "attractiveness", "proposed_start"],
               [[o.time, o.resource, o.auction_id, o.unit, o.round, o.price,
                 o.request_price, o.meets_requirements, o.load,
                 o.attractiveness, o.proposed_start]
                for o in metrics.offers])

    _write_csv(out / "spot_prices.csv",
               ["time", "resource", "price"],
               [[o.time, o.resource, o.price] for o in metrics.offers])

    _write_csv(out / "winner_shares.csv",
               ["resource", "wins"],
               [[name, wins] for name, wins in metrics.winner_shares.items()])

    _write_csv(out / "attractiveness.csv",
               ["time", "resource", "attractiveness", "load"],
               [[r["time"], r["resource"], r["value"], r["load"]]
                for r in metrics.attractiveness])

    summary = {
        "auctions": len(complete),
        "incomplete": metrics.incomplete,
        "median_offer_ratio": metrics.median_offer_ratio,
        "winner_shares": metrics.winner_shares,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2,
                                                 sort_keys=True) + "\n")
    return sorted(out.glob("*.csv")) + [out / "summary.json"]
