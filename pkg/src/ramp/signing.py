"""Digital signatures over negotiation documents.

The scheme is pluggable; the default is an HMAC-SHA256 authenticator over
canonical JSON payload bytes, with verification keys registered per
principal in a KeyStore. This stands in for certificate-based identities
at desk scale: the bank (and any verifying party) holds the keys.

Payloads are canonical JSON (sorted keys, compact separators) so that
signing and verification agree byte-for-byte across processes.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence


@dataclass(frozen=True)
class Signature:
    signer_id: str
    signature: str  # hex


@dataclass(frozen=True)
class SignedDocument:
    payload: bytes
    signatures: tuple[Signature, ...] = ()

    def payload_dict(self) -> dict:
        return json.loads(self.payload.decode("utf-8"))

    def signer_ids(self) -> tuple[str, ...]:
        return tuple(s.signer_id for s in self.signatures)


class SignatureScheme(Protocol):
    name: str

    def sign(self, key: str, payload: bytes) -> str: ...

    def verify(self, key: str, payload: bytes, signature: str) -> bool: ...


class HmacSha256Scheme:
    name = "hmac-sha256"

    def sign(self, key: str, payload: bytes) -> str:
        return hmac.new(bytes.fromhex(key), payload, hashlib.sha256).hexdigest()

    def verify(self, key: str, payload: bytes, signature: str) -> bool:
        try:
            expected = self.sign(key, payload)
        except ValueError:
            return False
        return hmac.compare_digest(expected, signature)


DEFAULT_SCHEME = HmacSha256Scheme()


def new_key() -> str:
    return secrets.token_hex(32)


def canonical_payload(data: dict) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")


def rfq_digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


class KeyStore:
    """principal id -> verification key (hex). Optionally file-backed:
    one <principal>.key file per principal under a directory."""

    def __init__(self, keys: Optional[dict[str, str]] = None):
        self._keys: dict[str, str] = dict(keys or {})

    def register(self, principal: str, key: str) -> None:
        self._keys[principal] = key

    def key_of(self, principal: str) -> Optional[str]:
        return self._keys.get(principal)

    def principals(self) -> list[str]:
        return sorted(self._keys)

    def as_dict(self) -> dict[str, str]:
        return dict(self._keys)

    @classmethod
    def load_dir(cls, path: Path) -> "KeyStore":
        store = cls()
        for key_file in sorted(Path(path).glob("*.key")):
            store.register(key_file.stem, key_file.read_text().strip())
        return store

    def save_dir(self, path: Path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        for principal, key in self._keys.items():
            (path / f"{principal}.key").write_text(key + "\n")


def sign_document(doc: SignedDocument, signer_id: str, key: str,
                  scheme: SignatureScheme = DEFAULT_SCHEME) -> SignedDocument:
    """Append signer's signature over the payload bytes."""
    sig = Signature(signer_id=signer_id, signature=scheme.sign(key, doc.payload))
    return SignedDocument(payload=doc.payload, signatures=doc.signatures + (sig,))


def verify_document(doc: SignedDocument, keys: KeyStore,
                    expected_signers: Optional[Sequence[str]] = None,
                    scheme: SignatureScheme = DEFAULT_SCHEME) -> bool:
    """All signatures verify against registered keys; when expected_signers
    is given, the signer list must match it exactly (order included)."""
    if expected_signers is not None and doc.signer_ids() != tuple(expected_signers):
        return False
    if not doc.signatures:
        return False
    for sig in doc.signatures:
        key = keys.key_of(sig.signer_id)
        if key is None or not scheme.verify(key, doc.payload, sig.signature):
            return False
    return True
