"""Resource agent: sells machine time on a simulated batch queue.

A CFP is evaluated in two steps: static requirements against the
advertised profile, then an earliest-feasible-start search over the
admissible window. Conforming requests get a load-priced bid; requests
priced below the floor get a non-binding best offer at the floor. The
spot load that drives pricing is the peak occupancy over the next
wall_time seconds at bid time, so a busy machine concedes little.

Reservations follow the two-phase commit: Accept places a tentative
hold with a deadline, Confirm (against a verifying user signature)
locks it in and triggers the doubly-signed bank settlement. Tentative
holds past their deadline are expired by a periodic sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from ramp.money import money_str
from ramp.pricing import (
    BestOffer,
    Bid,
    LoadSnapshot,
    PricingConfig,
    attractiveness,
    make_offer,
)
from ramp.protocol.codec import new_message_id
from ramp.protocol.messages import (
    AclMessage,
    AcceptContent,
    AgreeContent,
    BankUpdateContent,
    CancelContent,
    ConfirmContent,
    Offer,
    OfferContent,
    Performative,
    RfqContent,
)
from ramp.queuesim.machine import MachineModel, ReservationRefused
from ramp.rfql.model import (
    ResourceProfile,
    RfqRequest,
    match_static,
    request_to_terms,
)
from ramp.runtime.core import Agent, Context
from ramp.signing import (
    KeyStore,
    SignedDocument,
    canonical_payload,
    rfq_digest,
    sign_document,
    verify_document,
)


@dataclass
class ResourceAgentConfig:
    resource_id: str
    profile: ResourceProfile
    pricing: PricingConfig
    hold_timeout: float = 60.0
    offer_ttl: float = 120.0
    sweep_interval: float = 1.0
    bank: str = "bank"
    signing_key: str = ""
    best_offer_enabled: bool = True
    bank_retry_interval: float = 5.0
    bank_max_retries: int = 3
    sample_window: int = 3600  # pricing window for heartbeat samples
    advertise_address: Optional[tuple[str, int]] = None  # published via registry

    def __post_init__(self):
        if self.hold_timeout <= 0:
            raise ValueError("hold_timeout must be positive")


@dataclass
class _OfferState:
    offer: Offer
    request: RfqRequest
    user: str
    conversation_id: str
    expires_at: float
    open: bool = True


@dataclass
class _Deal:
    reservation_id: str
    offer_id: str
    conversation_id: str
    user: str
    request: RfqRequest
    price: Decimal
    cores: int
    wall_time: int
    proposed_start: float
    hold_deadline: float
    state: str = "agreed"  # agreed|confirmed|settled|cancelled|expired|flagged
    document: Optional[SignedDocument] = None
    cancel_document: Optional[SignedDocument] = None


@dataclass
class _BankCall:
    deal: _Deal
    document: SignedDocument
    attempts: int = 1
    timer_id: Optional[int] = None


class ResourceAgent(Agent):
    def __init__(self, config: ResourceAgentConfig, machine: MachineModel,
                 registry, keys: Optional[KeyStore] = None):
        super().__init__(config.resource_id)
        self.config = config
        self.machine = machine
        self.registry = registry
        self.keys = keys or KeyStore()
        self._offers: dict[str, _OfferState] = {}
        self._open_by_conversation: dict[str, str] = {}
        self._deals: dict[str, _Deal] = {}
        self._bank_calls: dict[str, _BankCall] = {}  # conversation -> call
        self._offer_counter = 0

    # --- lifecycle ---

    def on_start(self, ctx: Context) -> None:
        load, sample = self._sample(ctx)
        self.registry.register(self.name, self.config.advertise_address,
                               attractiveness=sample)
        ctx.record("attractiveness", value=sample, load=load)
        ctx.set_timer(self.registry.heartbeat_interval, ("heartbeat",))
        ctx.set_timer(self.config.sweep_interval, ("sweep",))

    def on_timer(self, ctx: Context, timer_id: int, payload: object) -> None:
        kind = payload[0] if isinstance(payload, tuple) else None
        if kind == "heartbeat":
            load, sample = self._sample(ctx)
            if not self.registry.heartbeat(self.name, attractiveness=sample):
                # registry restarted or expired us; re-announce
                self.registry.register(self.name,
                                       self.config.advertise_address,
                                       attractiveness=sample)
            ctx.record("attractiveness", value=sample, load=load)
            ctx.set_timer(self.registry.heartbeat_interval, ("heartbeat",))
        elif kind == "sweep":
            self._expire_holds(ctx)
            ctx.set_timer(self.config.sweep_interval, ("sweep",))
        elif kind == "bank-retry":
            self._retry_bank(ctx, payload[1])

    def _sample(self, ctx: Context) -> tuple[float, str]:
        load = self._spot_load(ctx.now(), 1, self.config.sample_window)
        value = attractiveness(self.config.pricing, LoadSnapshot(load))
        return load, money_str(value)

    def _spot_load(self, now: float, cores: int, duration: int) -> float:
        at = self.machine.clock.log_time(now)
        snap = self.machine.snapshot_load(at, cores, duration)
        return min(1.0, snap.load)  # defensive: a malformed log cannot explode pricing

    def _expire_holds(self, ctx: Context) -> None:
        now = ctx.now()
        for deal in self._deals.values():
            if deal.state == "agreed" and deal.hold_deadline < now:
                self.machine.expire_reservation(deal.reservation_id)
                deal.state = "expired"
                ctx.record("hold-expired", reservation_id=deal.reservation_id,
                           conversation_id=deal.conversation_id)
        self.machine.assert_capacity_safe()

    # --- message dispatch ---

    def handle_message(self, ctx: Context, msg: AclMessage) -> None:
        performative, content = msg.performative, msg.content
        if performative is Performative.CFP and isinstance(content, RfqContent):
            self._handle_cfp(ctx, msg)
        elif performative is Performative.ACCEPT_PROPOSAL and \
                isinstance(content, AcceptContent):
            self._handle_accept(ctx, msg)
        elif performative is Performative.REJECT_PROPOSAL and \
                isinstance(content, AcceptContent):
            self._handle_reject(ctx, msg)
        elif performative is Performative.CONFIRM and \
                isinstance(content, ConfirmContent):
            self._handle_confirm(ctx, msg)
        elif performative is Performative.CANCEL and \
                isinstance(content, CancelContent):
            self._handle_cancel(ctx, msg)
        elif msg.conversation_id in self._bank_calls and \
                performative in (Performative.AGREE, Performative.REFUSE):
            self._handle_bank_reply(ctx, msg)
        else:
            ctx.record("ignored", performative=performative.value,
                       sender=msg.sender)

    # --- bidding ---

    def _handle_cfp(self, ctx: Context, msg: AclMessage) -> None:
        req: RfqRequest = msg.content.request
        now = ctx.now()
        if not match_static(self.config.profile, req):
            self._refuse(ctx, msg, "static requirements not met")
            return
        window = self._admissible_window(req, now)
        if window is None:
            self._refuse(ctx, msg, "window cannot fit wall time")
            return
        clock = self.machine.clock
        found = self.machine.earliest_feasible_start(
            clock.log_time(window[0]), clock.log_time(window[1]),
            req.cores(), req.wall_time)
        if found is None:
            self._refuse(ctx, msg, "no feasible start before deadline")
            return
        start_log, _ = found
        load = self._spot_load(now, req.cores(), req.wall_time)
        decision = make_offer(self.config.pricing, LoadSnapshot(load),
                              req.cpu_hour_cost)
        if isinstance(decision, Bid):
            price, meets = decision.price, True
        elif isinstance(decision, BestOffer) and self.config.best_offer_enabled:
            price, meets = decision.price, False
        else:
            self._refuse(ctx, msg, "requested price below the floor")
            return
        self._offer_counter += 1
        offer = Offer(offer_id=f"{self.name}-o{self._offer_counter}",
                      resource_id=self.name, unit_index=msg.content.unit_index,
                      price=price, proposed_start=clock.wall_time(start_log),
                      meets_requirements=meets, round=msg.content.round)
        self._supersede(msg.conversation_id)
        self._offers[offer.offer_id] = _OfferState(
            offer=offer, request=req, user=msg.sender,
            conversation_id=msg.conversation_id,
            expires_at=now + self.config.offer_ttl)
        self._open_by_conversation[msg.conversation_id] = offer.offer_id
        self._reply(ctx, msg, Performative.PROPOSE, OfferContent(offer=offer))
        ctx.record("offer", offer_id=offer.offer_id,
                   conversation_id=msg.conversation_id,
                   unit=offer.unit_index, round=offer.round,
                   price=money_str(price), meets_requirements=meets,
                   load=load, attractiveness=self._sample(ctx)[1],
                   proposed_start=offer.proposed_start)

    def _admissible_window(self, req: RfqRequest,
                           now: float) -> Optional[tuple[float, float]]:
        earliest = max(float(req.start) if req.start is not None else now, now)
        latest = float(req.deadline - req.wall_time)
        if latest < earliest:
            return None
        return earliest, latest

    def _supersede(self, conversation_id: str) -> None:
        previous = self._open_by_conversation.pop(conversation_id, None)
        if previous is not None and previous in self._offers:
            self._offers[previous].open = False

    def _handle_reject(self, ctx: Context, msg: AclMessage) -> None:
        state = self._offers.get(msg.content.offer_id)
        if state is not None:
            state.open = False
            if self._open_by_conversation.get(state.conversation_id) == \
                    state.offer.offer_id:
                del self._open_by_conversation[state.conversation_id]
            ctx.record("offer-rejected", offer_id=state.offer.offer_id)

    # --- voting phase ---

    def _handle_accept(self, ctx: Context, msg: AclMessage) -> None:
        now = ctx.now()
        state = self._offers.get(msg.content.offer_id)
        if state is None or not state.open:
            self._refuse(ctx, msg, "unknown or consumed offer")
            return
        if msg.sender != state.user:
            self._refuse(ctx, msg, "offer was not made to you")
            return
        state.open = False  # single use, consumed by this accept
        if self._open_by_conversation.get(state.conversation_id) == \
                state.offer.offer_id:
            del self._open_by_conversation[state.conversation_id]
        if now > state.expires_at:
            self._refuse(ctx, msg, "offer expired")
            return
        req = state.request
        window = self._admissible_window(req, now)
        if window is None:
            self._refuse(ctx, msg, "window cannot fit wall time")
            return
        clock = self.machine.clock
        found = self.machine.earliest_feasible_start(
            clock.log_time(window[0]), clock.log_time(window[1]),
            req.cores(), req.wall_time)
        if found is None:
            self._refuse(ctx, msg, "capacity no longer available")
            return
        start_log, _ = found
        try:
            rid = self.machine.place_reservation(
                start_log, req.cores(), req.wall_time,
                hold_deadline=now + self.config.hold_timeout)
        except ReservationRefused:
            self._refuse(ctx, msg, "capacity no longer available")
            return
        deal = _Deal(reservation_id=rid, offer_id=state.offer.offer_id,
                     conversation_id=msg.conversation_id, user=state.user,
                     request=req, price=state.offer.price, cores=req.cores(),
                     wall_time=req.wall_time,
                     proposed_start=clock.wall_time(start_log),
                     hold_deadline=now + self.config.hold_timeout)
        self._deals[rid] = deal
        self._reply(ctx, msg, Performative.AGREE,
                    AgreeContent(reservation_id=rid))
        ctx.record("agree", reservation_id=rid, offer_id=deal.offer_id,
                   conversation_id=msg.conversation_id,
                   hold_deadline=deal.hold_deadline)
        self.machine.assert_capacity_safe()

    # --- commit phase ---

    def _handle_confirm(self, ctx: Context, msg: AclMessage) -> None:
        doc = msg.content.signed_document
        try:
            payload = doc.payload_dict()
        except (ValueError, UnicodeDecodeError):
            self._refuse(ctx, msg, "malformed settlement document")
            return
        rid = payload.get("reservation_id", "")
        deal = self._deals.get(rid)
        if deal is None or deal.state in ("expired", "cancelled"):
            self._reply(ctx, msg, Performative.CANCEL,
                        CancelContent(reason="reservation expired or unknown",
                                      reservation_id=rid))
            return
        if deal.state in ("confirmed", "settled", "flagged"):
            # duplicate Confirm: idempotent acknowledgement
            self._reply(ctx, msg, Performative.CONFIRM,
                        ConfirmContent(signed_document=deal.document))
            return
        now = ctx.now()
        if now > deal.hold_deadline:
            self.machine.expire_reservation(rid)
            deal.state = "expired"
            self._reply(ctx, msg, Performative.CANCEL,
                        CancelContent(reason="hold expired", reservation_id=rid))
            return
        if not self._settlement_matches(payload, deal, msg.sender) or \
                not verify_document(doc, self.keys, (deal.user,)):
            self._refuse(ctx, msg, "settlement document does not verify")
            return
        self.machine.mark_held(rid)
        self.machine.confirm_reservation(rid)
        deal.state = "confirmed"
        deal.document = sign_document(doc, self.name, self.config.signing_key)
        self._reply(ctx, msg, Performative.CONFIRM,
                    ConfirmContent(signed_document=deal.document))
        ctx.record("confirmed", reservation_id=rid, price=money_str(deal.price),
                   conversation_id=msg.conversation_id)
        self._send_bank(ctx, deal, deal.document, f"settle/{rid}")
        self.machine.assert_capacity_safe()

    def _settlement_matches(self, payload: dict, deal: _Deal,
                            sender: str) -> bool:
        if not (payload.get("kind") == "settlement"
                and payload.get("user") == deal.user == sender
                and payload.get("resource") == self.name
                and payload.get("price") == money_str(deal.price)
                and payload.get("cores") == deal.cores
                and payload.get("wall_time") == deal.wall_time):
            return False
        digest = payload.get("rfq_digest")
        if digest is None:
            return True
        # when the payload names the request, it must be the one we bid on
        ours = rfq_digest(canonical_payload(request_to_terms(deal.request)))
        return digest == ours

    # --- cancellation ---

    def _handle_cancel(self, ctx: Context, msg: AclMessage) -> None:
        rid = msg.content.reservation_id
        deal = self._deals.get(rid) if rid else None
        if deal is None:
            self._refuse(ctx, msg, "unknown reservation")
            return
        if msg.sender != deal.user:
            self._refuse(ctx, msg, "not the reservation owner")
            return
        if deal.state == "agreed":
            self.machine.cancel_reservation(rid)
            deal.state = "cancelled"
            self._reply(ctx, msg, Performative.AGREE,
                        AgreeContent(reservation_id=rid))
            ctx.record("cancelled", reservation_id=rid, stage="agreed")
        elif deal.state in ("confirmed", "settled", "flagged"):
            if deal.proposed_start <= ctx.now():
                self._refuse(ctx, msg, "reservation already started")
                return
            doc = msg.content.document
            if doc is None or not self._cancellation_ok(doc, deal):
                self._refuse(ctx, msg, "cancellation document does not verify")
                return
            was_settled = deal.state == "settled"
            self.machine.cancel_reservation(rid)
            deal.state = "cancelled"
            deal.cancel_document = sign_document(doc, self.name,
                                                 self.config.signing_key)
            self._reply(ctx, msg, Performative.AGREE,
                        AgreeContent(reservation_id=rid))
            ctx.record("cancelled", reservation_id=rid, stage="confirmed")
            if was_settled:
                self._send_bank(ctx, deal, deal.cancel_document,
                                f"cancel/{rid}")
            # else: the re-credit is forwarded once the settlement lands
        else:
            self._refuse(ctx, msg, "reservation not active")
        self.machine.assert_capacity_safe()

    def _cancellation_ok(self, doc: SignedDocument, deal: _Deal) -> bool:
        try:
            payload = doc.payload_dict()
        except (ValueError, UnicodeDecodeError):
            return False
        return (payload.get("kind") == "cancellation"
                and payload.get("reservation_id") == deal.reservation_id
                and payload.get("user") == deal.user
                and payload.get("resource") == self.name
                and verify_document(doc, self.keys, (deal.user,)))

    # --- bank notification with bounded retry ---

    def _send_bank(self, ctx: Context, deal: _Deal, document: SignedDocument,
                   conversation: str) -> None:
        call = _BankCall(deal=deal, document=document)
        self._bank_calls[conversation] = call
        self._post_bank(ctx, conversation, document)
        call.timer_id = ctx.set_timer(self.config.bank_retry_interval,
                                      ("bank-retry", conversation))

    def _post_bank(self, ctx: Context, conversation: str,
                   document: SignedDocument) -> None:
        ctx.send(AclMessage(
            performative=Performative.REQUEST, sender=self.name,
            receiver=self.config.bank, conversation_id=conversation,
            message_id=new_message_id(),
            content=BankUpdateContent(signed_document=document),
            sent_at=ctx.now()))

    def _retry_bank(self, ctx: Context, conversation: str) -> None:
        call = self._bank_calls.get(conversation)
        if call is None:
            return
        if call.attempts >= 1 + self.config.bank_max_retries:
            del self._bank_calls[conversation]
            call.deal.state = "flagged"
            ctx.record("flagged", reservation_id=call.deal.reservation_id,
                       reason="bank unreachable")
            return
        call.attempts += 1
        self._post_bank(ctx, conversation, call.document)
        call.timer_id = ctx.set_timer(self.config.bank_retry_interval,
                                      ("bank-retry", conversation))

    def _handle_bank_reply(self, ctx: Context, msg: AclMessage) -> None:
        conversation = msg.conversation_id
        call = self._bank_calls.pop(conversation, None)
        if call is None:
            return
        if call.timer_id is not None:
            ctx.cancel_timer(call.timer_id)
        deal = call.deal
        if msg.performative is Performative.AGREE:
            if conversation.startswith("settle/"):
                settled_then_cancelled = deal.state == "cancelled"
                if deal.state == "confirmed":
                    deal.state = "settled"
                ctx.record("settled", reservation_id=deal.reservation_id)
                if settled_then_cancelled and deal.cancel_document is not None:
                    # cancellation raced ahead of settlement: re-credit now
                    self._send_bank(ctx, deal, deal.cancel_document,
                                    f"cancel/{deal.reservation_id}")
            else:
                ctx.record("re-credited", reservation_id=deal.reservation_id)
        else:
            reason = getattr(msg.content, "reason", "refused")
            if deal.state == "confirmed":
                deal.state = "flagged"
            ctx.record("flagged", reservation_id=deal.reservation_id,
                       reason=reason)

    # --- replies ---

    def _refuse(self, ctx: Context, msg: AclMessage, reason: str) -> None:
        self._reply(ctx, msg, Performative.REFUSE, CancelContent(reason=reason))
        ctx.record("refuse", reason=reason, conversation_id=msg.conversation_id,
                   performative=msg.performative.value)

    def _reply(self, ctx: Context, msg: AclMessage, performative: Performative,
               content) -> None:
        ctx.send(AclMessage(
            performative=performative, sender=self.name, receiver=msg.sender,
            conversation_id=msg.conversation_id, message_id=new_message_id(),
            content=content, sent_at=ctx.now(), in_reply_to=msg.message_id))
