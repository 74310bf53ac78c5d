"""Request-for-Quotation language: document model, XML io, validation,
and static matching against resource profiles."""

from .model import (
    TERM_NAMES,
    ResourceProfile,
    RfqDocument,
    RfqRequest,
    Violation,
    match_static,
    request_from_terms,
    request_to_terms,
    validate_rfq,
)
from .xmlio import RfqlParseError, RfqlValidationError, parse_rfq, serialize_rfq

__all__ = [
    "TERM_NAMES",
    "ResourceProfile",
    "RfqDocument",
    "RfqRequest",
    "Violation",
    "match_static",
    "request_from_terms",
    "request_to_terms",
    "validate_rfq",
    "RfqlParseError",
    "RfqlValidationError",
    "parse_rfq",
    "serialize_rfq",
]
