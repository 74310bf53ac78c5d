"""Banking agent: accounts, doubly-signed settlements, append-only ledger.

Money only moves on a verifying document. A settlement debits the user
and credits the resource; a cancellation re-credits by reversing the
settled amount exactly once. Every ledger entry embeds the document
that justified it and the hash of the previous entry, so the ledger
file is its own audit store and tamper check.

Amounts follow price x cores x (wall_time / 3600), computed exactly and
rounded to cents at the boundary. Overdrafts are allowed; balance signs
are policy, not enforcement.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Optional

from ramp.money import as_fraction, money_str, parse_money, to_money
from ramp.protocol.codec import doc_from_json, doc_to_json, new_message_id
from ramp.protocol.messages import (
    AclMessage,
    AgreeContent,
    BalanceContent,
    BankUpdateContent,
    CancelContent,
    Performative,
)
from ramp.runtime.core import Agent, Context
from ramp.signing import KeyStore, SignedDocument, verify_document

GENESIS_HASH = "0" * 64

ACCOUNTS_FILE = "accounts.json"
LEDGER_FILE = "ledger.jsonl"


class LedgerError(RuntimeError):
    """Ledger file fails its chain or signature audit."""


def compute_amount(price: Decimal, cores: int, wall_time: int) -> Decimal:
    """price x cores x hours, exact internally, cents at the boundary."""
    if price <= 0:
        raise ValueError("price must be positive")
    if cores <= 0 or wall_time <= 0:
        raise ValueError("cores and wall_time must be positive")
    exact = as_fraction(price) * cores * Fraction(int(wall_time), 3600)
    return to_money(exact)


@dataclass(frozen=True)
class LedgerEntry:
    tx_id: str
    kind: str  # settlement | re-credit
    debit_account: str
    credit_account: str
    amount: Decimal
    reservation_id: str
    rfq_digest: str
    timestamp: float
    prev_hash: str
    document: dict

    def to_json(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "kind": self.kind,
            "debit_account": self.debit_account,
            "credit_account": self.credit_account,
            "amount": money_str(self.amount),
            "reservation_id": self.reservation_id,
            "rfq_digest": self.rfq_digest,
            "timestamp": self.timestamp,
            "prev_hash": self.prev_hash,
            "document": self.document,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LedgerEntry":
        return cls(
            tx_id=data["tx_id"],
            kind=data["kind"],
            debit_account=data["debit_account"],
            credit_account=data["credit_account"],
            amount=parse_money(data["amount"]),
            reservation_id=data["reservation_id"],
            rfq_digest=data["rfq_digest"],
            timestamp=float(data["timestamp"]),
            prev_hash=data["prev_hash"],
            document=data["document"],
        )

    def line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def entry_hash(self) -> str:
        return hashlib.sha256(self.line().encode("utf-8")).hexdigest()


class BankCore:
    """Transport-free bank state: keys, balances, hash-chained ledger.

    Pass state_dir to persist; restart replays the ledger over the
    accounts file and refuses to start on a broken chain or a
    non-verifying embedded document.
    """

    def __init__(self, keys: Optional[KeyStore] = None,
                 opening_balances: Optional[dict[str, Decimal]] = None,
                 state_dir: Optional[Path] = None,
                 ledger_path: Optional[Path] = None,
                 accounts_path: Optional[Path] = None):
        self.keys = keys or KeyStore()
        self.opening_balances: dict[str, Decimal] = {
            k: to_money(v) for k, v in (opening_balances or {}).items()}
        self.balances: dict[str, Decimal] = dict(self.opening_balances)
        self.entries: list[LedgerEntry] = []
        self._settled: dict[str, LedgerEntry] = {}
        self._recredited: set[str] = set()
        self._tip = GENESIS_HASH
        if state_dir is not None:
            ledger_path = ledger_path or Path(state_dir) / LEDGER_FILE
            accounts_path = accounts_path or Path(state_dir) / ACCOUNTS_FILE
        self._ledger_path = Path(ledger_path) if ledger_path else None
        self._accounts_path = Path(accounts_path) if accounts_path else None
        if self._ledger_path or self._accounts_path:
            self._load_state()

    # --- persistence ---

    def _load_state(self) -> None:
        accounts = self._accounts_path
        if accounts is not None and accounts.exists():
            data = json.loads(accounts.read_text())
            for principal, info in data.get("accounts", {}).items():
                if info.get("key"):
                    self.keys.register(principal, info["key"])
                opening = parse_money(info.get("opening_balance", "0.00"))
                self.opening_balances[principal] = opening
            self.balances = dict(self.opening_balances)
        ledger = self._ledger_path
        if ledger is not None and ledger.exists():
            for lineno, line in enumerate(ledger.read_text().splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    entry = LedgerEntry.from_json(json.loads(line))
                except (KeyError, ValueError, json.JSONDecodeError) as exc:
                    raise LedgerError(f"ledger line {lineno}: {exc}") from exc
                if entry.prev_hash != self._tip:
                    raise LedgerError(f"ledger line {lineno}: hash chain broken")
                if entry.line() != line:
                    raise LedgerError(f"ledger line {lineno}: non-canonical entry")
                self._audit_document(entry, lineno)
                self._apply(entry)

    def _audit_document(self, entry: LedgerEntry, lineno: int) -> None:
        # both settlement and cancellation docs are signed user-then-resource
        doc = doc_from_json(entry.document)
        payload = doc.payload_dict()
        signers = (payload.get("user"), payload.get("resource"))
        if not verify_document(doc, self.keys, signers):
            raise LedgerError(f"ledger line {lineno}: document does not verify")

    def _apply(self, entry: LedgerEntry) -> None:
        self.entries.append(entry)
        self.balances[entry.debit_account] = (
            self.balances.get(entry.debit_account, Decimal("0.00")) - entry.amount)
        self.balances[entry.credit_account] = (
            self.balances.get(entry.credit_account, Decimal("0.00")) + entry.amount)
        if entry.kind == "settlement":
            self._settled[entry.reservation_id] = entry
        else:
            self._recredited.add(entry.reservation_id)
        self._tip = entry.entry_hash()

    def _append(self, entry: LedgerEntry) -> None:
        self._apply(entry)
        if self._ledger_path is not None:
            self._ledger_path.parent.mkdir(parents=True, exist_ok=True)
            with self._ledger_path.open("a", encoding="utf-8") as fh:
                fh.write(entry.line() + "\n")

    def _next_tx_id(self) -> str:
        return f"tx-{len(self.entries) + 1:06d}"

    # --- operations ---

    def settle(self, doc: SignedDocument, now: float
               ) -> tuple[bool, str, Optional[LedgerEntry]]:
        try:
            payload = doc.payload_dict()
        except (ValueError, UnicodeDecodeError):
            return False, "malformed document", None
        if payload.get("kind") != "settlement":
            return False, "not a settlement document", None
        required = ("reservation_id", "user", "resource", "price",
                    "cores", "wall_time", "rfq_digest")
        if any(field not in payload for field in required):
            return False, "missing settlement fields", None
        user, resource = payload["user"], payload["resource"]
        if self.keys.key_of(user) is None or self.keys.key_of(resource) is None:
            return False, "unknown principal", None
        reservation_id = payload["reservation_id"]
        if reservation_id in self._settled:
            return True, "duplicate settlement (idempotent)", None
        if not verify_document(doc, self.keys, (user, resource)):
            return False, "signature verification failed", None
        try:
            amount = compute_amount(parse_money(payload["price"]),
                                    int(payload["cores"]),
                                    int(payload["wall_time"]))
        except (ValueError, TypeError):
            return False, "bad amount fields", None
        entry = LedgerEntry(
            tx_id=self._next_tx_id(), kind="settlement",
            debit_account=user, credit_account=resource, amount=amount,
            reservation_id=reservation_id, rfq_digest=payload["rfq_digest"],
            timestamp=now, prev_hash=self._tip, document=doc_to_json(doc))
        self._append(entry)
        return True, "settled", entry

    def recredit(self, doc: SignedDocument, now: float
                 ) -> tuple[bool, str, Optional[LedgerEntry]]:
        try:
            payload = doc.payload_dict()
        except (ValueError, UnicodeDecodeError):
            return False, "malformed document", None
        if payload.get("kind") != "cancellation":
            return False, "not a cancellation document", None
        reservation_id = payload.get("reservation_id")
        settlement = self._settled.get(reservation_id)
        if settlement is None:
            return False, "reservation never settled", None
        if reservation_id in self._recredited:
            return False, "already re-credited", None
        user, resource = payload.get("user"), payload.get("resource")
        if (user, resource) != (settlement.debit_account,
                                settlement.credit_account):
            return False, "parties do not match settlement", None
        if not verify_document(doc, self.keys, (user, resource)):
            return False, "signature verification failed", None
        entry = LedgerEntry(
            tx_id=self._next_tx_id(), kind="re-credit",
            debit_account=resource, credit_account=user,
            amount=settlement.amount, reservation_id=reservation_id,
            rfq_digest=settlement.rfq_digest, timestamp=now,
            prev_hash=self._tip, document=doc_to_json(doc))
        self._append(entry)
        return True, "re-credited", entry

    def statement(self, principal: str, last: int = 10) -> dict:
        touching = [e for e in self.entries
                    if principal in (e.debit_account, e.credit_account)]
        return {
            "principal": principal,
            "balance": money_str(self.balances.get(principal, Decimal("0.00"))),
            "entries": [
                {"tx_id": e.tx_id, "kind": e.kind,
                 "amount": money_str(e.amount),
                 "direction": "debit" if e.debit_account == principal else "credit",
                 "reservation_id": e.reservation_id, "timestamp": e.timestamp}
                for e in touching[-last:]
            ],
        }

    def verify_balance_request(self, doc: SignedDocument) -> tuple[bool, str]:
        try:
            payload = doc.payload_dict()
        except (ValueError, UnicodeDecodeError):
            return False, "malformed document"
        if payload.get("kind") != "balance-request":
            return False, "not a balance request"
        principal = payload.get("principal", "")
        if self.keys.key_of(principal) is None:
            return False, "unknown principal"
        if not verify_document(doc, self.keys, (principal,)):
            return False, "signature verification failed"
        return True, principal


# --- offline administration (state dir, bank not running) ---

def _read_accounts(state_dir: Path) -> dict:
    path = Path(state_dir) / ACCOUNTS_FILE
    if path.exists():
        return json.loads(path.read_text())
    return {"accounts": {}}


def _write_accounts(state_dir: Path, data: dict) -> None:
    path = Path(state_dir) / ACCOUNTS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def register_key(state_dir: Path, principal: str, key: str) -> None:
    data = _read_accounts(state_dir)
    account = data["accounts"].setdefault(principal, {"opening_balance": "0.00"})
    if account.get("key") and account["key"] != key:
        raise ValueError(f"{principal}: key already registered and immutable")
    account["key"] = key
    _write_accounts(state_dir, data)


def credit_account(state_dir: Path, principal: str, amount: str) -> Decimal:
    """Add to a principal's opening balance; returns the new opening."""
    value = parse_money(amount)
    data = _read_accounts(state_dir)
    account = data["accounts"].setdefault(principal, {"opening_balance": "0.00"})
    new_balance = parse_money(account.get("opening_balance", "0.00")) + value
    account["opening_balance"] = money_str(new_balance)
    _write_accounts(state_dir, data)
    return new_balance


class BankAgent(Agent):
    """Message front for a BankCore."""

    def __init__(self, name: str, core: BankCore):
        super().__init__(name)
        self.core = core

    def handle_message(self, ctx: Context, msg: AclMessage) -> None:
        if msg.performative is not Performative.REQUEST or \
                not isinstance(msg.content, BankUpdateContent):
            ctx.record("bank-ignored", performative=msg.performative.value,
                       sender=msg.sender)
            return
        doc = msg.content.signed_document
        try:
            kind = doc.payload_dict().get("kind")
        except (ValueError, UnicodeDecodeError):
            kind = None
        if kind == "settlement":
            ok, reason, entry = self.core.settle(doc, ctx.now())
            self._reply_outcome(ctx, msg, ok, reason, entry,
                                doc, record="settlement")
        elif kind == "cancellation":
            ok, reason, entry = self.core.recredit(doc, ctx.now())
            self._reply_outcome(ctx, msg, ok, reason, entry,
                                doc, record="cancellation")
            if ok and entry is not None:
                # tell the re-credited party as well; the sender got the reply
                other = entry.credit_account
                if other != msg.sender:
                    ctx.send(self._make(ctx, msg, Performative.AGREE,
                                        AgreeContent(reservation_id=entry.reservation_id),
                                        receiver=other))
        elif kind == "balance-request":
            ok, who = self.core.verify_balance_request(doc)
            if ok:
                ctx.send(self._make(ctx, msg, Performative.AGREE,
                                    BalanceContent(statement=self.core.statement(who))))
            else:
                ctx.send(self._make(ctx, msg, Performative.REFUSE,
                                    CancelContent(reason=who)))
        else:
            ctx.send(self._make(ctx, msg, Performative.REFUSE,
                                CancelContent(reason="unknown document kind")))

    def _reply_outcome(self, ctx: Context, msg: AclMessage, ok: bool,
                       reason: str, entry, doc: SignedDocument,
                       record: str) -> None:
        reservation_id = None
        try:
            reservation_id = doc.payload_dict().get("reservation_id")
        except (ValueError, UnicodeDecodeError):
            pass
        ctx.record(f"bank-{record}", ok=ok, reason=reason,
                   reservation_id=reservation_id,
                   tx_id=entry.tx_id if entry else None)
        if ok:
            ctx.send(self._make(ctx, msg, Performative.AGREE,
                                AgreeContent(reservation_id=reservation_id or "")))
        else:
            ctx.send(self._make(ctx, msg, Performative.REFUSE,
                                CancelContent(reason=reason,
                                              reservation_id=reservation_id)))

    def _make(self, ctx: Context, msg: AclMessage, performative: Performative,
              content, receiver: Optional[str] = None) -> AclMessage:
        return AclMessage(
            performative=performative, sender=self.name,
            receiver=receiver or msg.sender,
            conversation_id=msg.conversation_id,
            message_id=new_message_id(), content=content,
            sent_at=ctx.now(), in_reply_to=msg.message_id)
