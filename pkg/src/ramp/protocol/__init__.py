"""Inter-agent messaging: performatives, ontology payloads, wire codec,
and transport endpoints."""

from .codec import (
    ONTOLOGY,
    EncodeError,
    FrameDecoder,
    NeedMoreData,
    ProtocolError,
    decode_message,
    decode_stream,
    encode_message,
    new_conversation_id,
)
from .messages import (
    AcceptContent,
    AclMessage,
    AgreeContent,
    BalanceContent,
    BankUpdateContent,
    CancelContent,
    ConfirmContent,
    Offer,
    OfferContent,
    Performative,
    RfqContent,
    allowed_content,
)

__all__ = [
    "ONTOLOGY",
    "EncodeError",
    "FrameDecoder",
    "NeedMoreData",
    "ProtocolError",
    "decode_message",
    "decode_stream",
    "encode_message",
    "new_conversation_id",
    "AcceptContent",
    "AclMessage",
    "AgreeContent",
    "BalanceContent",
    "BankUpdateContent",
    "CancelContent",
    "ConfirmContent",
    "Offer",
    "OfferContent",
    "Performative",
    "RfqContent",
    "allowed_content",
]
