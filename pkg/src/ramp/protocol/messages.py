"""Message structure: performatives, content ontology, offers.

The performative set is a closed enumeration; each performative admits a
fixed set of content variants (the negotiation ontology is built around
the RFQ term vocabulary). received_at on an Offer is receiver-assigned
and never travels on the wire.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import Decimal
from enum import Enum
from typing import Optional, Union

from ..rfql import RfqRequest
from ..signing import SignedDocument


class Performative(str, Enum):
    CFP = "cfp"
    PROPOSE = "propose"
    REFUSE = "refuse"
    REJECT_PROPOSAL = "reject-proposal"
    ACCEPT_PROPOSAL = "accept-proposal"
    AGREE = "agree"
    CONFIRM = "confirm"
    CANCEL = "cancel"
    REQUEST = "request"


@dataclass(frozen=True)
class Offer:
    """A resource's bid on one unit of a request."""

    offer_id: str
    resource_id: str
    unit_index: int
    price: Decimal
    proposed_start: float
    meets_requirements: bool
    round: int
    received_at: Optional[float] = None

    def received(self, at: float) -> "Offer":
        return replace(self, received_at=at)


@dataclass(frozen=True)
class RfqContent:
    request: RfqRequest
    unit_index: int
    round: int


@dataclass(frozen=True)
class OfferContent:
    offer: Offer


@dataclass(frozen=True)
class AcceptContent:
    offer_id: str


@dataclass(frozen=True)
class AgreeContent:
    reservation_id: str


@dataclass(frozen=True)
class ConfirmContent:
    signed_document: SignedDocument


@dataclass(frozen=True)
class CancelContent:
    reason: str
    reservation_id: Optional[str] = None
    document: Optional[SignedDocument] = None


@dataclass(frozen=True)
class BankUpdateContent:
    signed_document: SignedDocument


@dataclass(frozen=True)
class BalanceContent:
    statement: dict


Content = Union[
    RfqContent,
    OfferContent,
    AcceptContent,
    AgreeContent,
    ConfirmContent,
    CancelContent,
    BankUpdateContent,
    BalanceContent,
]

_ALLOWED: dict[Performative, tuple[type, ...]] = {
    Performative.CFP: (RfqContent,),
    Performative.PROPOSE: (OfferContent,),
    Performative.REFUSE: (CancelContent,),
    Performative.REJECT_PROPOSAL: (AcceptContent,),
    Performative.ACCEPT_PROPOSAL: (AcceptContent,),
    Performative.AGREE: (AgreeContent, BalanceContent),
    Performative.CONFIRM: (ConfirmContent,),
    Performative.CANCEL: (CancelContent,),
    Performative.REQUEST: (BankUpdateContent,),
}


def allowed_content(performative: Performative) -> tuple[type, ...]:
    return _ALLOWED[performative]


@dataclass(frozen=True)
class AclMessage:
    performative: Performative
    sender: str
    receiver: str
    conversation_id: str
    message_id: str
    content: Content
    sent_at: float = 0.0
    in_reply_to: Optional[str] = None
    ontology: str = "ramp-rfq-v1"

    def is_consistent(self) -> bool:
        return isinstance(self.content, _ALLOWED[self.performative])
