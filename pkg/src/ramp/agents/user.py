"""User agent: runs combinatorial reverse auctions and commits the result.

An auction broadcasts one CFP per document unit to every registered
resource, collects offers for round_interval seconds, revises the asking
price down to the best offer seen, and repeats for N rounds. Offers that
conform to the request are rejected between rounds (each round starts
fresh); non-binding best offers are kept aside for manual approval.

After the last round the two-phase commit runs across all units: phase
one walks each unit's ranked offers with AcceptProposal until a resource
Agrees, phase two signs and Confirms every agreed reservation. If any
unit cannot be placed, every hold and confirmation already obtained is
cancelled, so an auction either yields all units or none.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Optional

from ramp.money import money_str
from ramp.protocol.codec import new_conversation_id, new_message_id
from ramp.protocol.messages import (
    AclMessage,
    AcceptContent,
    AgreeContent,
    BalanceContent,
    BankUpdateContent,
    CancelContent,
    ConfirmContent,
    Offer,
    OfferContent,
    Performative,
    RfqContent,
)
from ramp.rfql.model import RfqDocument, RfqRequest, request_to_terms, validate_rfq
from ramp.runtime.core import Agent, Context
from ramp.signing import SignedDocument, canonical_payload, rfq_digest, sign_document

APPROVAL_MODES = ("auto", "manual-all", "manual-best-offer-only")


@dataclass(frozen=True)
class AuctionConfig:
    rounds: int = 3
    round_interval: float = 15.0
    approval_mode: str = "auto"
    accept_timeout: float = 10.0
    confirm_timeout: float = 60.0
    confirm_retry_interval: float = 5.0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.round_interval <= 0:
            raise ValueError("round_interval must be positive")
        if self.approval_mode not in APPROVAL_MODES:
            raise ValueError(f"unknown approval_mode {self.approval_mode!r}")


def rank_offers(offers: Iterable[Offer], wall_time: int = 0,
                arrival_ids: Optional[dict] = None) -> list[Offer]:
    """Total order over conforming offers: ascending price, then earlier
    completion (proposed_start + wall_time), then arrival order
    (received_at, then message id). Deterministic under permutation."""
    ids = arrival_ids or {}

    def key(offer: Offer):
        received = offer.received_at if offer.received_at is not None else 0.0
        return (offer.price, offer.proposed_start + wall_time, received,
                ids.get(offer.offer_id, offer.offer_id))

    return sorted(offers, key=key)


@dataclass
class _Unit:
    index: int
    request: RfqRequest          # current (revised) ask
    conversation_id: str
    state: str = "bidding"       # bidding|pending-approval|accepting|agreed|
                                 # confirming|confirmed|failed|cancelled
    round_offers: dict[str, Offer] = field(default_factory=dict)
    best_offers: dict[str, Offer] = field(default_factory=dict)
    arrival_ids: dict[str, str] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    ranked: list[Offer] = field(default_factory=list)
    pointer: int = 0
    tried_best: set = field(default_factory=set)
    approval_offer: Optional[Offer] = None
    current_offer: Optional[Offer] = None
    reservation_id: Optional[str] = None
    resource: Optional[str] = None
    agreed_price: Optional[Decimal] = None
    proposed_start: Optional[float] = None
    document: Optional[SignedDocument] = None
    accept_timer: Optional[int] = None
    confirm_timer: Optional[int] = None
    confirm_deadline: float = 0.0


@dataclass
class _Auction:
    auction_id: str
    doc: RfqDocument
    cfg: AuctionConfig
    units: list[_Unit]
    resources: list[str]
    started_at: float
    round: int = 1
    phase: str = "bidding"  # bidding|awaiting-approval|phase-one|phase-two|done|failed
    round_timer: Optional[int] = None
    bidding_closed_at: float = 0.0
    outcome: Optional[str] = None
    reason: Optional[str] = None


@dataclass
class _Purchase:
    reservation_id: str
    auction_id: str
    unit_index: int
    resource: str
    price: Decimal
    proposed_start: float
    state: str = "confirmed"  # confirmed|cancel-requested|cancelled


class UserAgent(Agent):
    def __init__(self, name: str, registry, signing_key: str,
                 bank: str = "bank"):
        super().__init__(name)
        self.registry = registry
        self.signing_key = signing_key
        self.bank = bank
        self._auctions: dict[str, _Auction] = {}
        self._conversations: dict[str, tuple[_Auction, _Unit]] = {}
        self._purchases: dict[str, _Purchase] = {}
        self._pending_cancels: dict[str, str] = {}  # message_id -> reservation_id
        self._auction_counter = 0
        self._balance_counter = 0
        self.last_statement: Optional[dict] = None

    # --- auction lifecycle ---

    def start_auction(self, ctx: Context, doc: RfqDocument,
                      cfg: AuctionConfig) -> str:
        violations = validate_rfq(doc)
        if violations:
            raise ValueError("invalid RFQ: " +
                             "; ".join(str(v) for v in violations))
        self._auction_counter += 1
        auction_id = f"{self.name}-a{self._auction_counter}"
        resources = [e["resource_id"] for e in self.registry.list_alive()]
        units = [_Unit(index=i, request=req,
                       conversation_id=new_conversation_id(auction_id, i))
                 for i, req in enumerate(doc.requests)]
        auction = _Auction(auction_id=auction_id, doc=doc, cfg=cfg,
                           units=units, resources=resources,
                           started_at=ctx.now())
        self._auctions[auction_id] = auction
        for unit in units:
            self._conversations[unit.conversation_id] = (auction, unit)
        ctx.record("auction-start", auction_id=auction_id, units=len(units),
                   rounds=cfg.rounds, round_interval=cfg.round_interval,
                   approval_mode=cfg.approval_mode, resources=len(resources),
                   prices=[money_str(u.request.cpu_hour_cost) for u in units])
        if not resources:
            self._finish(ctx, auction, "Failed", reason="no resources")
            return auction_id
        for unit in units:
            self._broadcast(ctx, auction, unit)
        auction.round_timer = ctx.set_timer(cfg.round_interval,
                                            ("round", auction_id))
        return auction_id

    def _broadcast(self, ctx: Context, auction: _Auction, unit: _Unit) -> None:
        for resource in auction.resources:
            ctx.send(AclMessage(
                performative=Performative.CFP, sender=self.name,
                receiver=resource, conversation_id=unit.conversation_id,
                message_id=new_message_id(),
                content=RfqContent(request=unit.request,
                                   unit_index=unit.index, round=auction.round),
                sent_at=ctx.now()))

    def on_timer(self, ctx: Context, timer_id: int, payload: object) -> None:
        if not isinstance(payload, tuple):
            return
        kind = payload[0]
        if kind == "round":
            auction = self._auctions.get(payload[1])
            if auction is not None and auction.phase == "bidding":
                self._close_round(ctx, auction)
        elif kind == "accept-timeout":
            self._on_accept_timeout(ctx, *payload[1:])
        elif kind == "confirm-retry":
            self._on_confirm_retry(ctx, *payload[1:])

    # --- bidding ---

    def _close_round(self, ctx: Context, auction: _Auction) -> None:
        cfg = auction.cfg
        last = auction.round >= cfg.rounds
        for unit in auction.units:
            offers = list(unit.round_offers.values())
            best = rank_offers(offers, unit.request.wall_time,
                               unit.arrival_ids)[0] if offers else None
            unit.history.append({
                "round": auction.round,
                "request_price": money_str(unit.request.cpu_hour_cost),
                "offers": [self._offer_view(o) for o in offers],
                "best_offers": [self._offer_view(o)
                                for o in unit.best_offers.values()],
                "best_price": money_str(best.price) if best else None,
            })
            ctx.record("round-closed", auction_id=auction.auction_id,
                       unit=unit.index, round=auction.round,
                       n_offers=len(offers),
                       best_price=money_str(best.price) if best else None,
                       mean_price=money_str(statistics.mean(
                           o.price for o in offers)) if offers else None,
                       request_price=money_str(unit.request.cpu_hour_cost))
            if not last:
                if best is not None and \
                        best.price < unit.request.cpu_hour_cost:
                    unit.request = unit.request.with_price(best.price)
                for offer in offers:
                    self._reject(ctx, unit, offer)
                unit.round_offers = {}
        if not last:
            auction.round += 1
            for unit in auction.units:
                self._broadcast(ctx, auction, unit)
            auction.round_timer = ctx.set_timer(cfg.round_interval,
                                                ("round", auction.auction_id))
        else:
            self._begin_finalize(ctx, auction)

    @staticmethod
    def _offer_view(offer: Offer) -> dict:
        return {"resource": offer.resource_id, "price": money_str(offer.price),
                "proposed_start": offer.proposed_start,
                "meets_requirements": offer.meets_requirements}

    def _handle_offer(self, ctx: Context, auction: _Auction, unit: _Unit,
                      msg: AclMessage) -> None:
        if auction.phase != "bidding":
            return  # stragglers after close compete no further
        offer = msg.content.offer.received(at=ctx.now())
        unit.arrival_ids[offer.offer_id] = msg.message_id
        if offer.meets_requirements:
            if offer.price > unit.request.cpu_hour_cost:
                # above the current ask: out of band, reject straight away
                self._reject(ctx, unit, offer)
                return
            unit.round_offers[offer.resource_id] = offer
        else:
            # keep the freshest at equal-or-better price: every new CFP
            # supersedes the resource's previous quote, so an old offer
            # id is no longer acceptable to its maker
            kept = unit.best_offers.get(offer.resource_id)
            if kept is None or offer.price <= kept.price:
                unit.best_offers[offer.resource_id] = offer
        ctx.record("offer-received", auction_id=auction.auction_id,
                   unit=unit.index, round=auction.round,
                   resource=offer.resource_id, offer_id=offer.offer_id,
                   price=money_str(offer.price),
                   meets_requirements=offer.meets_requirements,
                   proposed_start=offer.proposed_start)

    def _reject(self, ctx: Context, unit: _Unit, offer: Offer) -> None:
        ctx.send(AclMessage(
            performative=Performative.REJECT_PROPOSAL, sender=self.name,
            receiver=offer.resource_id, conversation_id=unit.conversation_id,
            message_id=new_message_id(),
            content=AcceptContent(offer_id=offer.offer_id), sent_at=ctx.now()))

    # --- finalize: approval gate and phase one ---

    def _begin_finalize(self, ctx: Context, auction: _Auction) -> None:
        auction.bidding_closed_at = ctx.now()
        mode = auction.cfg.approval_mode
        for unit in auction.units:
            unit.ranked = rank_offers(unit.round_offers.values(),
                                      unit.request.wall_time, unit.arrival_ids)
        pending = False
        for unit in auction.units:
            if unit.ranked:
                if mode == "manual-all":
                    pending = True
                    self._pend_approval(ctx, auction, unit, unit.ranked[0])
                else:
                    unit.state = "accepting"
            else:
                cheapest = self._cheapest_best_offer(unit)
                if cheapest is not None and mode != "auto":
                    pending = True
                    self._pend_approval(ctx, auction, unit, cheapest)
                else:
                    self._fail_auction(ctx, auction,
                                       reason=f"no acceptable offers for "
                                              f"unit {unit.index}")
                    return
        if pending:
            auction.phase = "awaiting-approval"
        else:
            self._start_phase_one(ctx, auction)

    def _cheapest_best_offer(self, unit: _Unit) -> Optional[Offer]:
        fresh = [o for o in unit.best_offers.values()
                 if o.offer_id not in unit.tried_best]
        ranked = rank_offers(fresh, unit.request.wall_time, unit.arrival_ids)
        return ranked[0] if ranked else None

    def _pend_approval(self, ctx: Context, auction: _Auction, unit: _Unit,
                       offer: Offer) -> None:
        unit.state = "pending-approval"
        unit.approval_offer = offer
        ctx.record("approval-pending", auction_id=auction.auction_id,
                   unit=unit.index, offer_id=offer.offer_id,
                   resource=offer.resource_id, price=money_str(offer.price),
                   meets_requirements=offer.meets_requirements)

    def approve(self, ctx: Context, auction_id: str, unit_index: int,
                accept: bool) -> None:
        auction = self._auctions.get(auction_id)
        if auction is None:
            raise ValueError(f"unknown auction {auction_id}")
        if auction.phase in ("done", "failed"):
            raise ValueError("auction closed")
        unit = auction.units[unit_index] \
            if 0 <= unit_index < len(auction.units) else None
        if unit is None or unit.state != "pending-approval":
            raise ValueError("no approval pending for this unit")
        offer = unit.approval_offer
        unit.approval_offer = None
        ctx.record("approval", auction_id=auction_id, unit=unit_index,
                   accepted=accept, offer_id=offer.offer_id,
                   price=money_str(offer.price))
        if not accept:
            self._fail_auction(ctx, auction,
                               reason=f"unit {unit_index} approval rejected")
            return
        if not offer.meets_requirements:
            unit.tried_best.add(offer.offer_id)
            unit.ranked = unit.ranked + [offer]
        unit.state = "accepting"
        if auction.phase == "awaiting-approval":
            if all(u.state != "pending-approval" for u in auction.units):
                self._start_phase_one(ctx, auction)
        else:
            self._accept_next(ctx, auction, unit)

    def _start_phase_one(self, ctx: Context, auction: _Auction) -> None:
        auction.phase = "phase-one"
        for unit in auction.units:
            self._accept_next(ctx, auction, unit)

    def _accept_next(self, ctx: Context, auction: _Auction,
                     unit: _Unit) -> None:
        if unit.pointer >= len(unit.ranked):
            self._unit_exhausted(ctx, auction, unit)
            return
        offer = unit.ranked[unit.pointer]
        unit.current_offer = offer
        unit.state = "accepting"
        ctx.send(AclMessage(
            performative=Performative.ACCEPT_PROPOSAL, sender=self.name,
            receiver=offer.resource_id, conversation_id=unit.conversation_id,
            message_id=new_message_id(),
            content=AcceptContent(offer_id=offer.offer_id), sent_at=ctx.now()))
        unit.accept_timer = ctx.set_timer(
            auction.cfg.accept_timeout,
            ("accept-timeout", auction.auction_id, unit.index, offer.offer_id))

    def _on_accept_timeout(self, ctx: Context, auction_id: str,
                           unit_index: int, offer_id: str) -> None:
        auction = self._auctions.get(auction_id)
        if auction is None or auction.phase != "phase-one":
            return
        unit = auction.units[unit_index]
        if unit.state != "accepting" or unit.current_offer is None or \
                unit.current_offer.offer_id != offer_id:
            return
        # unreachable resource counts as a refusal
        ctx.record("accept-timeout", auction_id=auction_id, unit=unit_index,
                   offer_id=offer_id)
        unit.pointer += 1
        self._accept_next(ctx, auction, unit)

    def _unit_exhausted(self, ctx: Context, auction: _Auction,
                        unit: _Unit) -> None:
        if auction.cfg.approval_mode != "auto":
            cheapest = self._cheapest_best_offer(unit)
            if cheapest is not None:
                self._pend_approval(ctx, auction, unit, cheapest)
                return
        self._fail_auction(ctx, auction,
                           reason=f"unit {unit.index} exhausted all bids")

    # --- phase two ---

    def _start_phase_two(self, ctx: Context, auction: _Auction) -> None:
        auction.phase = "phase-two"
        for unit in auction.units:
            unit.document = self._settlement_document(auction, unit)
            unit.state = "confirming"
            unit.confirm_deadline = ctx.now() + auction.cfg.confirm_timeout
            self._send_confirm(ctx, auction, unit)

    def _settlement_document(self, auction: _Auction,
                             unit: _Unit) -> SignedDocument:
        terms = request_to_terms(unit.request)
        payload = {
            "kind": "settlement",
            "reservation_id": unit.reservation_id,
            "user": self.name,
            "resource": unit.resource,
            "price": money_str(unit.agreed_price),
            "cores": unit.request.cores(),
            "wall_time": unit.request.wall_time,
            "proposed_start": unit.proposed_start,
            "terms": terms,
            "rfq_digest": rfq_digest(canonical_payload(terms)),
            "auction_id": auction.auction_id,
            "unit": unit.index,
        }
        return sign_document(SignedDocument(canonical_payload(payload)),
                             self.name, self.signing_key)

    def _send_confirm(self, ctx: Context, auction: _Auction,
                      unit: _Unit) -> None:
        ctx.send(AclMessage(
            performative=Performative.CONFIRM, sender=self.name,
            receiver=unit.resource, conversation_id=unit.conversation_id,
            message_id=new_message_id(),
            content=ConfirmContent(signed_document=unit.document),
            sent_at=ctx.now()))
        unit.confirm_timer = ctx.set_timer(
            auction.cfg.confirm_retry_interval,
            ("confirm-retry", auction.auction_id, unit.index))

    def _on_confirm_retry(self, ctx: Context, auction_id: str,
                          unit_index: int) -> None:
        auction = self._auctions.get(auction_id)
        if auction is None or auction.phase != "phase-two":
            return
        unit = auction.units[unit_index]
        if unit.state != "confirming":
            return
        if ctx.now() >= unit.confirm_deadline:
            # the hold has expired by now; the whole purchase fails
            self._fail_auction(ctx, auction,
                               reason=f"unit {unit_index} confirm timed out")
            return
        self._send_confirm(ctx, auction, unit)

    # --- inbound replies ---

    def handle_message(self, ctx: Context, msg: AclMessage) -> None:
        if msg.in_reply_to is not None and \
                msg.in_reply_to in self._pending_cancels:
            self._on_cancel_ack(ctx, msg)
            return
        routed = self._conversations.get(msg.conversation_id)
        if routed is not None:
            self._on_unit_message(ctx, *routed, msg)
            return
        if msg.sender == self.bank:
            self._on_bank_message(ctx, msg)
            return
        ctx.record("ignored", performative=msg.performative.value,
                   sender=msg.sender, conversation_id=msg.conversation_id)

    def _on_unit_message(self, ctx: Context, auction: _Auction, unit: _Unit,
                         msg: AclMessage) -> None:
        performative = msg.performative
        if performative is Performative.PROPOSE and \
                isinstance(msg.content, OfferContent):
            self._handle_offer(ctx, auction, unit, msg)
        elif performative is Performative.AGREE:
            self._on_agree(ctx, auction, unit, msg)
        elif performative is Performative.REFUSE:
            self._on_refuse(ctx, auction, unit, msg)
        elif performative is Performative.CONFIRM:
            self._on_confirmed(ctx, auction, unit, msg)
        elif performative is Performative.CANCEL:
            self._on_resource_cancel(ctx, auction, unit, msg)
        # anything else on a unit conversation is noise; CFPs answered with
        # Refuse already landed in _on_refuse

    def _on_agree(self, ctx: Context, auction: _Auction, unit: _Unit,
                  msg: AclMessage) -> None:
        rid = getattr(msg.content, "reservation_id", None)
        if unit.state == "accepting" and unit.current_offer is not None and \
                msg.sender == unit.current_offer.resource_id:
            if unit.accept_timer is not None:
                ctx.cancel_timer(unit.accept_timer)
                unit.accept_timer = None
            unit.state = "agreed"
            unit.reservation_id = rid
            unit.resource = msg.sender
            unit.agreed_price = unit.current_offer.price
            unit.proposed_start = unit.current_offer.proposed_start
            ctx.record("unit-agreed", auction_id=auction.auction_id,
                       unit=unit.index, resource=msg.sender,
                       reservation_id=rid,
                       price=money_str(unit.agreed_price))
            if all(u.state == "agreed" for u in auction.units):
                self._start_phase_two(ctx, auction)
            return
        if rid is not None and rid not in self._purchases and \
                rid != unit.reservation_id:
            # late Agree for a hold this auction no longer wants
            self._send_cancel(ctx, msg.sender, unit.conversation_id, rid)

    def _on_refuse(self, ctx: Context, auction: _Auction, unit: _Unit,
                   msg: AclMessage) -> None:
        reason = getattr(msg.content, "reason", "")
        if auction.phase == "bidding":
            ctx.record("cfp-refused", auction_id=auction.auction_id,
                       unit=unit.index, resource=msg.sender, reason=reason)
            return
        if unit.state == "accepting" and unit.current_offer is not None and \
                msg.sender == unit.current_offer.resource_id:
            if unit.accept_timer is not None:
                ctx.cancel_timer(unit.accept_timer)
                unit.accept_timer = None
            ctx.record("bid-refused", auction_id=auction.auction_id,
                       unit=unit.index, resource=msg.sender, reason=reason)
            unit.pointer += 1
            self._accept_next(ctx, auction, unit)
            return
        if unit.state == "confirming":
            # the resource rejected our signed document outright
            self._fail_auction(ctx, auction,
                               reason=f"unit {unit.index} confirm refused: "
                                      f"{reason}")

    def _on_confirmed(self, ctx: Context, auction: _Auction, unit: _Unit,
                      msg: AclMessage) -> None:
        if unit.state != "confirming" or msg.sender != unit.resource:
            return
        if unit.confirm_timer is not None:
            ctx.cancel_timer(unit.confirm_timer)
            unit.confirm_timer = None
        unit.state = "confirmed"
        unit.document = msg.content.signed_document
        self._purchases[unit.reservation_id] = _Purchase(
            reservation_id=unit.reservation_id,
            auction_id=auction.auction_id, unit_index=unit.index,
            resource=unit.resource, price=unit.agreed_price,
            proposed_start=unit.proposed_start)
        ctx.record("unit-confirmed", auction_id=auction.auction_id,
                   unit=unit.index, resource=unit.resource,
                   reservation_id=unit.reservation_id,
                   price=money_str(unit.agreed_price),
                   proposed_start=unit.proposed_start)
        if all(u.state == "confirmed" for u in auction.units):
            self._finish(ctx, auction, "AllConfirmed")

    def _on_resource_cancel(self, ctx: Context, auction: _Auction,
                            unit: _Unit, msg: AclMessage) -> None:
        if unit.state == "confirming" and msg.sender == unit.resource:
            # hold expired before our Confirm landed
            self._fail_auction(ctx, auction,
                               reason=f"unit {unit.index} hold expired")

    # --- cancellation and failure ---

    def _fail_auction(self, ctx: Context, auction: _Auction,
                      reason: str) -> None:
        if auction.phase in ("done", "failed"):
            return
        for unit in auction.units:
            for timer in (unit.accept_timer, unit.confirm_timer):
                if timer is not None:
                    ctx.cancel_timer(timer)
            unit.accept_timer = unit.confirm_timer = None
            if unit.reservation_id is not None and \
                    unit.state in ("agreed", "confirming", "confirmed"):
                document = None
                if unit.state in ("confirming", "confirmed"):
                    # the resource may hold a settled deal; give it a
                    # countersignable cancellation for the re-credit
                    document = self._cancellation_document(unit)
                self._send_cancel(ctx, unit.resource, unit.conversation_id,
                                  unit.reservation_id, document)
                purchase = self._purchases.get(unit.reservation_id)
                if purchase is not None:
                    purchase.state = "cancel-requested"
            for offer in unit.ranked[unit.pointer:]:
                if unit.current_offer is None or \
                        offer.offer_id != unit.current_offer.offer_id:
                    self._reject(ctx, unit, offer)
            unit.state = "failed"
        self._finish(ctx, auction, "Failed", reason=reason)

    def _cancellation_document(self, unit: _Unit) -> SignedDocument:
        payload = {"kind": "cancellation",
                   "reservation_id": unit.reservation_id,
                   "user": self.name, "resource": unit.resource}
        return sign_document(SignedDocument(canonical_payload(payload)),
                             self.name, self.signing_key)

    def _send_cancel(self, ctx: Context, resource: str, conversation: str,
                     reservation_id: str,
                     document: Optional[SignedDocument] = None,
                     reason: str = "purchase cancelled") -> None:
        message_id = new_message_id()
        self._pending_cancels[message_id] = reservation_id
        ctx.send(AclMessage(
            performative=Performative.CANCEL, sender=self.name,
            receiver=resource, conversation_id=conversation,
            message_id=message_id,
            content=CancelContent(reason=reason, reservation_id=reservation_id,
                                  document=document),
            sent_at=ctx.now()))

    def cancel_purchase(self, ctx: Context, reservation_id: str) -> None:
        purchase = self._purchases.get(reservation_id)
        if purchase is None:
            raise ValueError(f"unknown reservation {reservation_id}")
        if purchase.state != "confirmed":
            raise ValueError(f"reservation {reservation_id} is "
                             f"{purchase.state}")
        auction = self._auctions[purchase.auction_id]
        unit = auction.units[purchase.unit_index]
        purchase.state = "cancel-requested"
        self._send_cancel(ctx, purchase.resource, unit.conversation_id,
                          reservation_id, self._cancellation_document(unit),
                          reason="user cancellation")

    def _on_cancel_ack(self, ctx: Context, msg: AclMessage) -> None:
        reservation_id = self._pending_cancels.pop(msg.in_reply_to)
        ok = msg.performative is Performative.AGREE
        purchase = self._purchases.get(reservation_id)
        if purchase is not None:
            purchase.state = "cancelled" if ok else "confirmed"
        ctx.record("purchase-cancelled" if ok else "cancel-refused",
                   reservation_id=reservation_id,
                   reason=getattr(msg.content, "reason", None))

    # --- bank traffic ---

    def request_balance(self, ctx: Context) -> None:
        self._balance_counter += 1
        payload = {"kind": "balance-request", "principal": self.name,
                   "nonce": new_message_id()}
        document = sign_document(SignedDocument(canonical_payload(payload)),
                                 self.name, self.signing_key)
        ctx.send(AclMessage(
            performative=Performative.REQUEST, sender=self.name,
            receiver=self.bank,
            conversation_id=f"balance/{self.name}/{self._balance_counter}",
            message_id=new_message_id(),
            content=BankUpdateContent(signed_document=document),
            sent_at=ctx.now()))

    def _on_bank_message(self, ctx: Context, msg: AclMessage) -> None:
        if isinstance(msg.content, BalanceContent):
            self.last_statement = msg.content.statement
            ctx.record("balance", statement=msg.content.statement)
        elif isinstance(msg.content, AgreeContent):
            ctx.record("re-credited",
                       reservation_id=msg.content.reservation_id)
        else:
            ctx.record("bank-refused",
                       reason=getattr(msg.content, "reason", None))

    # --- bookkeeping ---

    def _finish(self, ctx: Context, auction: _Auction, outcome: str,
                reason: Optional[str] = None) -> None:
        auction.phase = "done" if outcome == "AllConfirmed" else "failed"
        auction.outcome = outcome
        auction.reason = reason
        if auction.round_timer is not None:
            ctx.cancel_timer(auction.round_timer)
            auction.round_timer = None
        now = ctx.now()
        winners = [{"unit": u.index, "resource": u.resource,
                    "reservation_id": u.reservation_id,
                    "price": money_str(u.agreed_price)}
                   for u in auction.units if u.state == "confirmed"]
        ctx.record("auction-done", auction_id=auction.auction_id,
                   outcome=outcome, reason=reason,
                   duration=now - auction.started_at,
                   finalize_duration=(now - auction.bidding_closed_at)
                   if auction.bidding_closed_at else None,
                   winners=winners)

    def snapshot(self, auction_id: str) -> Optional[dict]:
        auction = self._auctions.get(auction_id)
        if auction is None:
            return None
        return {
            "auction_id": auction.auction_id,
            "phase": auction.phase,
            "outcome": auction.outcome,
            "reason": auction.reason,
            "round": auction.round,
            "rounds": auction.cfg.rounds,
            "approval_mode": auction.cfg.approval_mode,
            "units": [{
                "index": u.index,
                "state": u.state,
                "request_price": money_str(u.request.cpu_hour_cost),
                "history": [dict(row) for row in u.history],
                "pending_approval": self._offer_view(u.approval_offer)
                if u.approval_offer is not None else None,
                "reservation_id": u.reservation_id,
                "resource": u.resource,
                "price": money_str(u.agreed_price)
                if u.agreed_price is not None else None,
            } for u in auction.units],
        }

    def snapshots(self) -> list[dict]:
        return [self.snapshot(auction_id) for auction_id in self._auctions]

    def purchases(self) -> list[dict]:
        return [{"reservation_id": p.reservation_id,
                 "auction_id": p.auction_id, "unit": p.unit_index,
                 "resource": p.resource, "price": money_str(p.price),
                 "proposed_start": p.proposed_start, "state": p.state}
                for p in self._purchases.values()]
