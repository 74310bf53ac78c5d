"""RFQL XML parsing and serialization.

Root element <RFQL id="...">, one <Request id="..."> per unit, term
elements from the closed vocabulary. Element order on output follows the
schema order; parsing accepts any order. The published schema ships as
rfql.xsd next to this module (structure and types; cross-term rules are
enforced by the validator).
"""

from __future__ import annotations

import hashlib
import xml.etree.ElementTree as ET

from .model import (
    TERM_NAMES,
    RfqDocument,
    RfqRequest,
    Violation,
    request_from_terms,
    request_to_terms,
    validate_rfq,
)


class RfqlParseError(ValueError):
    """Malformed XML; message carries line/column info."""


class RfqlValidationError(ValueError):
    """Structurally sound XML that breaks the RFQL rules."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def parse_rfq(text: str) -> RfqDocument:
    """Parse and validate an RFQL document.

    Raises RfqlParseError for malformed XML, RfqlValidationError (with the
    full violation list) for unknown/duplicate/ill-typed terms or broken
    request invariants.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise RfqlParseError(f"malformed XML at line {line}, column {column}: {exc.msg}") from exc

    violations: list[Violation] = []
    if root.tag != "RFQL":
        raise RfqlValidationError([Violation(None, root.tag, "root element must be RFQL")])

    requests: list[RfqRequest] = []
    index = 0
    for child in root:
        if child.tag != "Request":
            violations.append(Violation(None, child.tag, "only Request elements may appear under RFQL"))
            continue
        terms: dict = {}
        for term_el in child:
            name = term_el.tag
            if name not in TERM_NAMES:
                violations.append(Violation(index, name, "unknown term"))
                continue
            if name in terms:
                violations.append(Violation(index, name, "duplicate term"))
                continue
            terms[name] = (term_el.text or "").strip()
        req, term_violations = request_from_terms(terms, index)
        violations.extend(term_violations)
        if req is not None:
            requests.append(req)
        index += 1

    if violations:
        raise RfqlValidationError(violations)

    document_id = root.get("id") or _derived_id(requests)
    doc = RfqDocument(document_id=document_id, requests=tuple(requests))
    violations = validate_rfq(doc)
    if violations:
        raise RfqlValidationError(violations)
    return doc


def serialize_rfq(doc: RfqDocument) -> str:
    """Canonical RFQL text: schema element order, ISO-8601 UTC dates."""
    root = ET.Element("RFQL", {"id": doc.document_id})
    for i, req in enumerate(doc.requests):
        req_el = ET.SubElement(root, "Request", {"id": str(i)})
        terms = request_to_terms(req)
        for name in TERM_NAMES:
            if name in terms:
                el = ET.SubElement(req_el, name)
                el.text = str(terms[name])
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _derived_id(requests: list[RfqRequest]) -> str:
    blob = "|".join(repr(sorted(request_to_terms(r).items())) for r in requests)
    return "rfq-" + hashlib.sha256(blob.encode()).hexdigest()[:12]
