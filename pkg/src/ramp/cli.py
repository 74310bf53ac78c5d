"""Command line entry points for running markets and their pieces.

`ramp sim` replays a scenario (virtual time by default is OFF; pass
--virtual-time for instant runs) and writes transcripts plus figure
CSVs. The remaining subcommands run individual services so a market can
be assembled across processes: registry, bank, resource, user, and the
ops HTTP API for the web console. Default ports: resources 7701,
bank 7702, registry 7703.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
import time
from pathlib import Path

from ramp.agents.bank import BankAgent, BankCore, credit_account, register_key
from ramp.agents.resource import ResourceAgent, ResourceAgentConfig
from ramp.agents.user import APPROVAL_MODES, AuctionConfig, UserAgent
from ramp.harness.metrics import compute_metrics, read_transcripts, write_csvs
from ramp.harness.opsapi import OpsServer
from ramp.harness.orchestrator import run_scenario, run_scenario_live
from ramp.harness.registry import RegistryClient, RegistryServer
from ramp.harness.scenario import ScenarioError, load_scenario
from ramp.money import money_str, parse_money
from ramp.pricing import PricingConfig
from ramp.queuesim.machine import MachineModel, SimClock
from ramp.queuesim.swf import parse_swf
from ramp.rfql.model import ResourceProfile
from ramp.rfql.xmlio import RfqlParseError, RfqlValidationError, parse_rfq
from ramp.runtime import LiveRuntime
from ramp.signing import KeyStore, new_key

RESOURCE_PORT = 7701
BANK_PORT = 7702
REGISTRY_PORT = 7703


def parse_address(text: str, default_port: int) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep:
        return text, default_port
    return host or "127.0.0.1", int(port)


def read_key(path: Path) -> str:
    return Path(path).read_text().strip()


def _wait_forever() -> None:
    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        stop.wait()
    except KeyboardInterrupt:
        pass


# --- sim / metrics ---

def cmd_sim(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    runner = run_scenario if args.virtual_time else run_scenario_live
    result = runner(scenario, out_dir=args.out,
                    repetitions=args.repetitions, rounds=args.rounds)
    done = sum(1 for a in result.metrics.auctions
               if a.outcome == "AllConfirmed")
    print(f"{len(result.metrics.auctions)} auctions, {done} confirmed, "
          f"{len(result.ledger)} ledger entries")
    for path in result.files:
        print(f"wrote {path}")
    return 0


def cmd_metrics(args) -> int:
    transcripts = read_transcripts(args.transcript_dir)
    if not transcripts:
        print("error: no transcript records found", file=sys.stderr)
        return 2
    metrics = compute_metrics(transcripts)
    out = Path(args.out) if args.out else Path(args.transcript_dir)
    for path in write_csvs(metrics, out):
        print(f"wrote {path}")
    return 0


# --- long-running services ---

def cmd_registry(args) -> int:
    server = RegistryServer(parse_address(args.listen, REGISTRY_PORT),
                            heartbeat_interval=args.heartbeat_interval)
    print(json.dumps({"registry": list(server.address)}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_ops_api(args) -> int:
    from ramp.harness.orchestrator import build_live_market

    scenario = load_scenario(args.scenario)
    market = build_live_market(scenario, [args.user])
    server = OpsServer(market.rt, args.user,
                       registry=market.registry_handle())
    host, port = server.start(parse_address(args.listen, 0))
    print(json.dumps({"ops_api": f"http://{host}:{port}",
                      "user": args.user,
                      "resources": len(scenario.resources)}), flush=True)
    _wait_forever()
    server.stop()
    market.rt.stop()
    return 0


def default_profile(cores: int) -> dict:
    node_cores = 8 if cores % 8 == 0 else 1
    return {"operating_system": "linux", "os_version": "2.6",
            "architecture": "x86_64", "cpu_speed": 2.4,
            "ram_per_core": 2048, "node_count": cores // node_cores,
            "node_cores": node_cores, "node_disk_space": 500,
            "inter_node_bandwidth": 10}


def cmd_resource(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    base = Path(args.config).resolve().parent
    machine_cfg = cfg["machine"]
    cores = int(machine_cfg["cores"])
    log = parse_swf((base / machine_cfg["log"]).read_text())
    machine = MachineModel(
        total_cores=cores, log=log,
        clock=SimClock(system_start=time.time(),
                       log_offset=int(machine_cfg.get("time_offset", 0))),
        name=cfg["resource_id"])

    profile = default_profile(cores)
    profile.update(cfg.get("profile", {}))
    listen = parse_address(cfg.get("listen", f"0.0.0.0:{RESOURCE_PORT}"),
                           RESOURCE_PORT)
    advertise = parse_address(cfg["advertise"], listen[1]) \
        if "advertise" in cfg else ("127.0.0.1", listen[1])

    pricing = cfg["pricing"]
    agent_cfg = ResourceAgentConfig(
        resource_id=cfg["resource_id"],
        profile=ResourceProfile(**profile),
        pricing=PricingConfig(parse_money(str(pricing["start_price"])),
                              parse_money(str(pricing["min_price"])),
                              int(pricing.get("anticipated_rounds", 3))),
        hold_timeout=float(cfg.get("hold_timeout", 60.0)),
        offer_ttl=float(cfg.get("offer_ttl", 120.0)),
        sweep_interval=float(cfg.get("sweep_interval", 1.0)),
        bank=cfg.get("bank", {}).get("name", "bank"),
        signing_key=read_key(base / cfg["signing_key"]),
        best_offer_enabled=bool(cfg.get("best_offer_enabled", True)),
        advertise_address=advertise)

    registry_cfg = cfg.get("registry", {})
    registry = RegistryClient(
        parse_address(registry_cfg.get("address", "127.0.0.1"),
                      REGISTRY_PORT),
        heartbeat_interval=float(registry_cfg.get("heartbeat_interval",
                                                  10.0)))
    keys = KeyStore.load_dir(base / cfg["keys_dir"]) \
        if cfg.get("keys_dir") else KeyStore()

    rt = LiveRuntime()
    bank_addr = cfg.get("bank", {}).get("address")
    if bank_addr:
        rt.set_address(agent_cfg.bank,
                       parse_address(bank_addr, BANK_PORT))
    rt.add_agent(ResourceAgent(agent_cfg, machine, registry, keys=keys),
                 listen=listen)
    rt.start()
    print(json.dumps({"resource": cfg["resource_id"],
                      "listen": list(rt.listen_address(cfg["resource_id"]))}),
          flush=True)
    _wait_forever()
    rt.stop()
    return 0


def cmd_bank(args) -> int:
    keys_dir = Path(args.keys)
    if args.bank_cmd == "credit":
        balance = credit_account(keys_dir, args.principal, args.amount)
        print(f"{args.principal} opening balance {money_str(balance)}")
        return 0
    if args.bank_cmd == "register-key":
        register_key(keys_dir, args.principal,
                     read_key(Path(args.keyfile)))
        print(f"registered key for {args.principal}")
        return 0

    core = BankCore(ledger_path=Path(args.ledger),
                    accounts_path=keys_dir / "accounts.json")
    rt = LiveRuntime()
    listen = parse_address(args.listen, BANK_PORT)
    rt.add_agent(BankAgent("bank", core), listen=listen)
    rt.start()
    print(json.dumps({"bank": list(rt.listen_address("bank")),
                      "accounts": sorted(core.balances)}), flush=True)
    _wait_forever()
    rt.stop()
    return 0


# --- one-shot user auction ---

def cmd_user(args) -> int:
    try:
        doc = parse_rfq(Path(args.rfq).read_text())
    except (OSError, RfqlParseError, RfqlValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg = AuctionConfig(rounds=args.rounds,
                        round_interval=args.round_interval,
                        approval_mode=args.approval,
                        accept_timeout=args.accept_timeout,
                        confirm_timeout=args.confirm_timeout)
    registry = RegistryClient(parse_address(args.registry, REGISTRY_PORT),
                              heartbeat_interval=args.heartbeat_interval)
    rt = LiveRuntime()
    rt.set_address("bank", parse_address(args.bank, BANK_PORT))
    user = UserAgent(args.name, registry, read_key(Path(args.key)))
    rt.add_agent(user)
    rt.start()

    # peers are dialed by name; seed routes from the registry view
    def refresh_routes() -> int:
        entries = registry.list_alive()
        for entry in entries:
            if entry.get("address"):
                rt.set_address(entry["resource_id"],
                               tuple(entry["address"]))
        return len(entries)

    if refresh_routes() == 0:
        print("error: no resources alive in registry", file=sys.stderr)
        rt.stop()
        return 2

    auction_id = rt.call(
        user.name, lambda a, ctx: a.start_auction(ctx, doc, cfg))
    guard = time.monotonic() + cfg.rounds * cfg.round_interval + 120.0
    snap = None
    while time.monotonic() < guard:
        snap = rt.call(user.name, lambda a, ctx: a.snapshot(auction_id))
        if snap["phase"] in ("done", "failed"):
            break
        if snap["phase"] == "awaiting-approval":
            _prompt_approvals(rt, user.name, auction_id, snap)
        else:
            time.sleep(0.2)
    time.sleep(0.5)  # allow the settlement ack to land
    rt.stop()

    records = rt.transcripts
    out = Path(args.transcript) if args.transcript else None
    text = "\n".join(json.dumps(r, default=str) for r in records) + "\n"
    if out is not None:
        out.write_text(text)
    else:
        sys.stdout.write(text)
    if snap is None or snap["phase"] != "done":
        print(f"auction {auction_id}: "
              f"{(snap or {}).get('reason') or 'did not finish'}",
              file=sys.stderr)
        return 1
    for unit in snap["units"]:
        print(f"unit {unit['index']}: {unit['resource']} "
              f"at {unit['price']} ({unit['reservation_id']})",
              file=sys.stderr)
    return 0


def _prompt_approvals(rt: LiveRuntime, user: str, auction_id: str,
                      snap: dict) -> None:
    for unit in snap["units"]:
        pending = unit.get("pending_approval")
        if pending is None:
            continue
        print(f"unit {unit['index']}: {pending['resource']} offers "
              f"{pending['price']} (meets requirements: "
              f"{pending['meets_requirements']})", file=sys.stderr)
        answer = input("accept? [y/n] ").strip().lower()
        accept = answer in ("y", "yes")
        rt.call(user, lambda a, ctx, i=unit["index"]:
                a.approve(ctx, auction_id, i, accept))


def cmd_keygen(args) -> int:
    path = Path(args.keys) / f"{args.principal}.key"
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and not args.force:
        print(f"error: {path} exists (use --force to overwrite)",
              file=sys.stderr)
        return 2
    path.write_text(new_key() + "\n")
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramp", description="compute-cycle marketplace tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="run a scenario end to end")
    p.add_argument("--scenario", required=True)
    p.add_argument("--virtual-time", action="store_true",
                   help="run on the virtual clock (instant)")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("metrics", help="recompute figure CSVs")
    p.add_argument("transcript_dir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("registry", help="run the resource registry")
    p.add_argument("--listen", default=f"0.0.0.0:{REGISTRY_PORT}")
    p.add_argument("--heartbeat-interval", type=float, default=10.0)
    p.set_defaults(func=cmd_registry)

    p = sub.add_parser("ops-api",
                       help="serve the console API over a live market")
    p.add_argument("--listen", default="127.0.0.1:7700")
    p.add_argument("--scenario", required=True)
    p.add_argument("--user", default="console")
    p.set_defaults(func=cmd_ops_api)

    p = sub.add_parser("resource", help="run one resource agent")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_resource)

    p = sub.add_parser("user", help="run one auction from an RFQ file")
    p.add_argument("--rfq", required=True)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--round-interval", type=float, default=15.0)
    p.add_argument("--approval", default="auto", choices=APPROVAL_MODES)
    p.add_argument("--registry", default=f"127.0.0.1:{REGISTRY_PORT}")
    p.add_argument("--key", required=True, help="signing key file")
    p.add_argument("--bank", default=f"127.0.0.1:{BANK_PORT}")
    p.add_argument("--name", default="user-1")
    p.add_argument("--accept-timeout", type=float, default=10.0)
    p.add_argument("--confirm-timeout", type=float, default=60.0)
    p.add_argument("--heartbeat-interval", type=float, default=10.0)
    p.add_argument("--transcript", default=None,
                   help="write JSONL here instead of stdout")
    p.set_defaults(func=cmd_user)

    p = sub.add_parser("bank", help="run the bank, or administer accounts")
    p.add_argument("--ledger", default="bank/ledger.jsonl")
    p.add_argument("--keys", default="bank", help="accounts directory")
    p.add_argument("--listen", default=f"0.0.0.0:{BANK_PORT}")
    bank_sub = p.add_subparsers(dest="bank_cmd")
    credit = bank_sub.add_parser("credit", help="raise an opening balance")
    credit.add_argument("principal")
    credit.add_argument("amount")
    register = bank_sub.add_parser("register-key",
                                   help="pin a principal's key")
    register.add_argument("principal")
    register.add_argument("keyfile")
    p.set_defaults(func=cmd_bank, bank_cmd=None)

    p = sub.add_parser("keygen", help="create a signing key file")
    p.add_argument("principal")
    p.add_argument("--keys", default="keys", help="directory for key files")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_keygen)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
