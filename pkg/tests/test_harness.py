"""Harness: scenarios, orchestration, metrics, and the ops HTTP API."""

import json
import time
import urllib.error
import urllib.request
from dataclasses import replace
from decimal import Decimal
from pathlib import Path

import pytest

from ramp.harness import (
    ResourceSpec,
    ScenarioConfig,
    ScenarioError,
    WorkloadSpec,
    build_live_market,
    load_scenario,
    run_ops_api,
    run_scenario,
    validate_scenario,
)
from ramp.harness.metrics import (
    attractiveness_rank,
    compute_metrics,
    offers_by_resource,
    read_transcripts,
    write_csvs,
)
from ramp.harness.orchestrator import workload_request
from ramp.harness.scenario import scenario_from_dict
from ramp.rfql.model import RfqDocument
from ramp.rfql.xmlio import serialize_rfq

TESTDATA = Path(__file__).resolve().parent.parent / "testdata"


def _job(job_id, submit, run, procs):
    f = [job_id, submit, 0, run, procs, -1, -1, procs, run, -1,
         1, 1, 1, 1, 1, 1, -1, 0]
    return " ".join(str(x) for x in f)


def write_logs(directory: Path) -> dict[str, Path]:
    idle = directory / "idle.swf"
    idle.write_text("; MaxProcs: 64\n")
    full = directory / "full.swf"
    full.write_text("; MaxProcs: 64\n" + _job(1, 0, 5_000_000, 64) + "\n")
    return {"idle": idle, "full": full}


def tiny_scenario(directory: Path, price="50.00") -> ScenarioConfig:
    logs = write_logs(directory)
    return ScenarioConfig(
        name="tiny",
        resources=(
            ResourceSpec("fast", logs["idle"], 0,
                         Decimal("45.00"), Decimal("25.00"), 64),
            ResourceSpec("slow", logs["full"], 0,
                         Decimal("60.00"), Decimal("30.00"), 64),
        ),
        workloads=(WorkloadSpec("w8", 8, 300, Decimal(price)),),
        repetitions=1, rounds=3, round_interval=2.0)


# --- scenario files ---

def test_default_scenario_loads():
    cfg = load_scenario(TESTDATA / "scenario_default.json")
    assert cfg.name == "twenty-machines"
    assert len(cfg.resources) == 20
    assert len(cfg.workloads) == 13
    assert cfg.rounds == 3 and cfg.repetitions == 3
    validate_scenario(cfg)  # must not raise


def test_scenario_rejects_duplicate_resource(tmp_path):
    logs = write_logs(tmp_path)
    row = {"name": "fast", "base_log": logs["idle"].name, "cores": 64,
           "time_offset": 0, "start_price": "45.00", "min_price": "25.00"}
    data = {"resources": [row, dict(row)],
            "workloads": [{"name": "w", "cores": 8, "start_delay": 0,
                           "price": "50.00"}]}
    with pytest.raises(ScenarioError, match="duplicate"):
        scenario_from_dict(data, tmp_path)


def test_scenario_rejects_floor_above_start(tmp_path):
    cfg = tiny_scenario(tmp_path)
    bad = replace(cfg.resources[0], min_price=Decimal("99.00"))
    with pytest.raises(ScenarioError, match="min price"):
        validate_scenario(replace(cfg, resources=(bad, cfg.resources[1])))


def test_scenario_rejects_missing_log(tmp_path):
    cfg = tiny_scenario(tmp_path)
    bad = replace(cfg.resources[0], base_log=tmp_path / "absent.swf")
    with pytest.raises(ScenarioError, match="not readable"):
        validate_scenario(replace(cfg, resources=(bad, cfg.resources[1])))


def test_scenario_rejects_empty_workloads(tmp_path):
    cfg = tiny_scenario(tmp_path)
    with pytest.raises(ScenarioError, match="no workloads"):
        validate_scenario(replace(cfg, workloads=()))


def test_scenario_rejects_bad_json(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text("{nope")
    with pytest.raises(ScenarioError, match="JSON"):
        load_scenario(path)


# --- orchestration ---

def test_run_scenario_idle_machine_wins(tmp_path):
    result = run_scenario(tiny_scenario(tmp_path), out_dir=tmp_path / "out")
    (auction,) = result.metrics.auctions
    assert auction.outcome == "AllConfirmed"
    assert auction.winner == "fast"
    assert auction.workload == "w8" and auction.repetition == 1
    assert Decimal(auction.winning_price) <= Decimal("50.00")
    assert len(auction.rounds) == 3
    names = {p.name for p in result.files}
    assert {"auctions.csv", "offers.csv", "summary.json",
            "transcripts.jsonl", "ledger.jsonl"} <= names
    assert len(result.ledger) == 1
    assert result.ledger[0]["kind"] == "settlement"


def test_run_scenario_below_floor_fails_with_clean_ledger(tmp_path):
    result = run_scenario(tiny_scenario(tmp_path, price="10.00"))
    (auction,) = result.metrics.auctions
    assert auction.outcome == "Failed"
    assert auction.winner is None
    assert result.ledger == []


def test_winner_ranks_first_by_attractiveness(tmp_path):
    result = run_scenario(tiny_scenario(tmp_path))
    (auction,) = result.metrics.auctions
    # idle machine concedes the most per round, so it tops the board
    assert attractiveness_rank(result.metrics, auction) == 1


def test_offer_prices_never_rise_within_auction(tmp_path):
    result = run_scenario(tiny_scenario(tmp_path))
    (auction,) = result.metrics.auctions
    for rows in offers_by_resource(result.metrics,
                                   auction.auction_id).values():
        prices = [Decimal(r.price) for r in rows]
        assert prices == sorted(prices, reverse=True)


# --- metrics ---

def test_metrics_recompute_is_byte_identical(tmp_path):
    result = run_scenario(tiny_scenario(tmp_path), out_dir=tmp_path / "a")
    again = compute_metrics(result.transcripts)
    files = write_csvs(again, tmp_path / "b")
    for fresh in files:
        first = tmp_path / "a" / fresh.name
        assert first.read_bytes() == fresh.read_bytes()


def test_read_transcripts_merges_time_sorted(tmp_path):
    (tmp_path / "x.jsonl").write_text(
        '{"time": 3.0, "agent": "a", "event": "late"}\n'
        '{"time": 1.0, "agent": "a", "event": "early"}\n')
    (tmp_path / "y.jsonl").write_text(
        '{"time": 2.0, "agent": "b", "event": "middle"}\n')
    events = [r["event"] for r in read_transcripts(tmp_path)]
    assert events == ["early", "middle", "late"]


# --- ops HTTP API ---

@pytest.fixture(scope="module")
def ops(tmp_path_factory):
    scenario = tiny_scenario(tmp_path_factory.mktemp("logs"))
    market = build_live_market(scenario, ["console"])
    server = run_ops_api(("127.0.0.1", 0), market.rt, "console",
                         registry=market.registry_handle())
    host, port = server._httpd.server_address[:2]

    def call(method, path, body=None):
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(
            f"http://{host}:{port}{path}", data=data, method=method,
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=15) as resp:
                return resp.status, json.loads(resp.read().decode())
        except urllib.error.HTTPError as err:
            return err.code, json.loads(err.read().decode())

    call.scenario = scenario
    yield call
    server.stop()
    market.rt.stop()


def post_auction(ops, config, price="50.00"):
    w = ops.scenario.workloads[0]
    request = workload_request(replace(w, price=Decimal(price)),
                               time.time(), ops.scenario.deadline_horizon)
    xml = serialize_rfq(RfqDocument("ops-test", (request,)))
    return ops("POST", "/auctions", {"rfql": xml, "config": config})


def wait_phase(ops, auction_id, phases, timeout=20.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        _, snap = ops("GET", f"/auctions/{auction_id}")
        if snap["phase"] in phases:
            return snap
        time.sleep(0.1)
    raise AssertionError(f"auction stuck; last snapshot {snap}")


def test_ops_resources_lists_registered_machines(ops):
    status, body = ops("GET", "/resources")
    assert status == 200
    names = {r["resource_id"] for r in body["resources"]}
    assert names == {"fast", "slow"}
    assert all("attractiveness" in r for r in body["resources"])


def test_ops_account_statement_and_unknowns(ops):
    status, body = ops("GET", "/accounts/console")
    assert status == 200 and body["balance"] == "1000000.00"
    assert ops("GET", "/accounts/nobody")[0] == 404
    assert ops("GET", "/auctions/missing")[0] == 404
    assert ops("GET", "/nonsense")[0] == 404


def test_ops_rejects_bad_auction_posts(ops):
    status, body = ops("POST", "/auctions", {"rfql": "<junk"})
    assert status == 400
    status, body = post_auction(ops, {"bogus": True})
    assert status == 400 and "unknown config keys" in body["error"]
    status, body = post_auction(ops, {"rounds": 0})
    assert status == 400
    status, body = ops("POST", "/auctions", {})
    assert status == 400


def test_ops_manual_auction_full_lifecycle(ops):
    status, body = post_auction(ops, {
        "rounds": 2, "round_interval": 0.5,
        "approval_mode": "manual-all", "accept_timeout": 5.0,
        "confirm_timeout": 10.0, "confirm_retry_interval": 2.0})
    assert status == 201
    auction_id = body["auction_id"]

    # approval before any offer is pending
    status, body = ops("POST", f"/auctions/{auction_id}/units/0/approve",
                       {"decision": "accept"})
    assert status == 409
    assert ops("POST", "/auctions/none/units/0/approve",
               {"decision": "accept"})[0] == 404
    assert ops("POST", f"/auctions/{auction_id}/units/0/approve",
               {"decision": "maybe"})[0] == 400

    snap = wait_phase(ops, auction_id, ("awaiting-approval",))
    pending = snap["units"][0]["pending_approval"]
    assert pending["resource"] == "fast"

    # wrong unit index: still no approval pending there
    assert ops("POST", f"/auctions/{auction_id}/units/7/approve",
               {"decision": "accept"})[0] == 409

    status, _ = ops("POST", f"/auctions/{auction_id}/units/0/approve",
                    {"decision": "accept"})
    assert status == 200
    snap = wait_phase(ops, auction_id, ("done", "failed"))
    assert snap["outcome"] == "AllConfirmed"

    status, body = ops("GET", "/auctions")
    assert status == 200
    assert any(a["auction_id"] == auction_id for a in body["auctions"])

    status, body = ops("GET", "/reservations")
    mine = [r for r in body["reservations"]
            if r["auction_id"] == auction_id]
    assert len(mine) == 1 and mine[0]["state"] == "confirmed"
    reservation_id = mine[0]["reservation_id"]

    status, body = ops("GET", "/accounts/console")
    charged = body["balance"]
    assert Decimal(charged) < Decimal("1000000.00")

    status, body = ops("POST", f"/reservations/{reservation_id}/cancel")
    assert status == 202
    assert ops("POST", "/reservations/none/cancel")[0] == 404

    deadline = time.time() + 20
    while time.time() < deadline:
        _, body = ops("GET", "/accounts/console")
        if body["balance"] == "1000000.00":
            break
        time.sleep(0.1)
    assert body["balance"] == "1000000.00"
    kinds = [e["kind"] for e in body["entries"]]
    assert "settlement" in kinds and "re-credit" in kinds

    status, body = ops("POST", f"/reservations/{reservation_id}/cancel")
    assert status == 409  # already cancelled


def test_ops_auto_auction_never_pends(ops):
    status, body = post_auction(ops, {"rounds": 1, "round_interval": 0.5})
    assert status == 201
    auction_id = body["auction_id"]
    snap = wait_phase(ops, auction_id, ("done", "failed"))
    assert snap["outcome"] == "AllConfirmed"
    status, body = ops("POST", f"/auctions/{auction_id}/units/0/approve",
                       {"decision": "accept"})
    assert status == 409 and "auction closed" in body["error"]
