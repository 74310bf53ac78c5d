"""Wire codec: 4-byte big-endian length prefix + UTF-8 JSON body.

Truncated input raises NeedMoreData (wait for more bytes); anything
structurally wrong — unknown performative, zero-length frame, malformed
JSON, content/performative mismatch — raises ProtocolError, which is
connection-fatal.
"""

from __future__ import annotations

import base64
import json
import struct
import uuid
from decimal import Decimal, InvalidOperation

from ..money import money_str
from ..rfql import request_from_terms, request_to_terms
from ..signing import Signature, SignedDocument
from .messages import (
    AcceptContent,
    AclMessage,
    AgreeContent,
    BalanceContent,
    BankUpdateContent,
    CancelContent,
    ConfirmContent,
    Content,
    Offer,
    OfferContent,
    Performative,
    RfqContent,
    allowed_content,
)

ONTOLOGY = "ramp-rfq-v1"
_HEADER = struct.Struct("!I")
MAX_FRAME = 16 * 1024 * 1024


class EncodeError(ValueError):
    pass


class ProtocolError(ValueError):
    """Connection-fatal wire violation."""


class NeedMoreData(Exception):
    """The buffer holds only part of a frame."""


def new_message_id() -> str:
    return uuid.uuid4().hex


def new_conversation_id(auction_id: str, unit_index: int) -> str:
    """Stable across rounds; unique per (auction, unit)."""
    return f"{auction_id}/u{unit_index}"


# --- content serialization ---

def doc_to_json(doc: SignedDocument) -> dict:
    """JSON form of a signed document (payload base64 plus signatures)."""
    return _doc_to_json(doc)


def doc_from_json(data: dict) -> SignedDocument:
    return _doc_from_json(data)


def _doc_to_json(doc: SignedDocument) -> dict:
    return {
        "payload_b64": base64.b64encode(doc.payload).decode("ascii"),
        "signatures": [{"signer_id": s.signer_id, "signature": s.signature}
                       for s in doc.signatures],
    }


def _doc_from_json(data: dict) -> SignedDocument:
    try:
        payload = base64.b64decode(data["payload_b64"], validate=True)
        sigs = tuple(Signature(s["signer_id"], s["signature"]) for s in data["signatures"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad signed document: {exc}") from exc
    return SignedDocument(payload=payload, signatures=sigs)


def _offer_to_json(offer: Offer) -> dict:
    return {
        "offer_id": offer.offer_id,
        "resource_id": offer.resource_id,
        "unit_index": offer.unit_index,
        "price": money_str(offer.price),
        "proposed_start": offer.proposed_start,
        "meets_requirements": offer.meets_requirements,
        "round": offer.round,
    }


def _offer_from_json(data: dict) -> Offer:
    try:
        return Offer(
            offer_id=data["offer_id"],
            resource_id=data["resource_id"],
            unit_index=int(data["unit_index"]),
            price=Decimal(data["price"]),
            proposed_start=float(data["proposed_start"]),
            meets_requirements=bool(data["meets_requirements"]),
            round=int(data["round"]),
        )
    except (KeyError, TypeError, ValueError, InvalidOperation) as exc:
        raise ProtocolError(f"bad offer: {exc}") from exc


def _content_to_json(content: Content) -> dict:
    if isinstance(content, RfqContent):
        return {"type": "rfq", "request": request_to_terms(content.request),
                "unit_index": content.unit_index, "round": content.round}
    if isinstance(content, OfferContent):
        return {"type": "offer", "offer": _offer_to_json(content.offer)}
    if isinstance(content, AcceptContent):
        return {"type": "accept", "offer_id": content.offer_id}
    if isinstance(content, AgreeContent):
        return {"type": "agree", "reservation_id": content.reservation_id}
    if isinstance(content, ConfirmContent):
        return {"type": "confirm", "document": _doc_to_json(content.signed_document)}
    if isinstance(content, CancelContent):
        out: dict = {"type": "cancel", "reason": content.reason}
        if content.reservation_id is not None:
            out["reservation_id"] = content.reservation_id
        if content.document is not None:
            out["document"] = _doc_to_json(content.document)
        return out
    if isinstance(content, BankUpdateContent):
        return {"type": "bank-update", "document": _doc_to_json(content.signed_document)}
    if isinstance(content, BalanceContent):
        return {"type": "balance", "statement": content.statement}
    raise EncodeError(f"unknown content type {type(content).__name__}")


def _content_from_json(data: dict) -> Content:
    if not isinstance(data, dict) or "type" not in data:
        raise ProtocolError("content must be an object with a type tag")
    kind = data["type"]
    try:
        if kind == "rfq":
            request, violations = request_from_terms(dict(data["request"]))
            if request is None:
                raise ProtocolError(f"bad rfq terms: {violations[0]}")
            return RfqContent(request=request, unit_index=int(data["unit_index"]),
                              round=int(data["round"]))
        if kind == "offer":
            return OfferContent(offer=_offer_from_json(data["offer"]))
        if kind == "accept":
            return AcceptContent(offer_id=data["offer_id"])
        if kind == "agree":
            return AgreeContent(reservation_id=data["reservation_id"])
        if kind == "confirm":
            return ConfirmContent(signed_document=_doc_from_json(data["document"]))
        if kind == "cancel":
            doc = data.get("document")
            return CancelContent(reason=data["reason"],
                                 reservation_id=data.get("reservation_id"),
                                 document=_doc_from_json(doc) if doc is not None else None)
        if kind == "bank-update":
            return BankUpdateContent(signed_document=_doc_from_json(data["document"]))
        if kind == "balance":
            return BalanceContent(statement=dict(data["statement"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ProtocolError):
            raise
        raise ProtocolError(f"bad {kind} content: {exc}") from exc
    raise ProtocolError(f"unknown content type {kind!r}")


# --- framing ---

def encode_message(msg: AclMessage) -> bytes:
    if not msg.is_consistent():
        raise EncodeError(
            f"{msg.performative.value} cannot carry {type(msg.content).__name__}")
    body = json.dumps({
        "performative": msg.performative.value,
        "sender": msg.sender,
        "receiver": msg.receiver,
        "conversation_id": msg.conversation_id,
        "in_reply_to": msg.in_reply_to,
        "message_id": msg.message_id,
        "ontology": msg.ontology,
        "sent_at": msg.sent_at,
        "content": _content_to_json(msg.content),
    }, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(len(body)) + body


def _decode_body(body: bytes) -> AclMessage:
    try:
        data = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed JSON body: {exc}") from exc
    if not isinstance(data, dict):
        raise ProtocolError("body must be a JSON object")
    try:
        performative_name = data["performative"]
    except KeyError:
        raise ProtocolError("missing performative") from None
    try:
        performative = Performative(performative_name)
    except ValueError:
        raise ProtocolError(f"unknown performative {performative_name!r}") from None
    if data.get("ontology") != ONTOLOGY:
        raise ProtocolError(f"unknown ontology {data.get('ontology')!r}")
    content = _content_from_json(data.get("content"))
    if not isinstance(content, allowed_content(performative)):
        raise ProtocolError(
            f"{performative.value} cannot carry {type(content).__name__}")
    try:
        return AclMessage(
            performative=performative,
            sender=data["sender"],
            receiver=data["receiver"],
            conversation_id=data["conversation_id"],
            in_reply_to=data.get("in_reply_to"),
            message_id=data["message_id"],
            ontology=data["ontology"],
            sent_at=float(data["sent_at"]),
            content=content,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"missing or bad field: {exc}") from exc


def decode_body(body: bytes) -> AclMessage:
    """Decode one frame body (the bytes after the length prefix)."""
    return _decode_body(body)


def _frame_length(buf: bytes) -> int:
    if len(buf) < _HEADER.size:
        raise NeedMoreData()
    (length,) = _HEADER.unpack_from(buf)
    if length == 0:
        raise ProtocolError("zero-length frame")
    if length > MAX_FRAME:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    if len(buf) < _HEADER.size + length:
        raise NeedMoreData()
    return length


def decode_message(buf: bytes) -> AclMessage:
    """Decode exactly one frame; trailing bytes are a protocol error."""
    length = _frame_length(buf)
    if len(buf) != _HEADER.size + length:
        raise ProtocolError("trailing bytes after frame")
    return _decode_body(buf[_HEADER.size:])


def decode_stream(buf: bytes) -> list[AclMessage]:
    """Decode a buffer of whole frames, in order."""
    out = []
    offset = 0
    view = memoryview(buf)
    while offset < len(buf):
        length = _frame_length(view[offset:])
        out.append(_decode_body(bytes(view[offset + _HEADER.size:offset + _HEADER.size + length])))
        offset += _HEADER.size + length
    return out


class FrameDecoder:
    """Incremental decoder for a byte stream; feed() returns completed
    messages and buffers the rest."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[AclMessage]:
        self._buf.extend(data)
        out = []
        while True:
            try:
                length = _frame_length(bytes(self._buf))
            except NeedMoreData:
                return out
            body = bytes(self._buf[_HEADER.size:_HEADER.size + length])
            del self._buf[:_HEADER.size + length]
            out.append(_decode_body(body))

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
