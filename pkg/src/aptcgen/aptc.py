"""Abstract penetration test cases: typed metamodel, wire format, and schema.

The wire format is a JSON object with the keys ``CAWE``,
``violatedSecurityProperty``, ``Threat``, and ``AttackVector`` (``Name``,
optional ``Connector``, ``EntryPoint``, ``Asset``), plus the optional
extensions ``id``, ``applicability``, and ``missingInformation``. A batch
is a JSON array of such objects.

``parse_aptc`` and the bundled JSON schema accept exactly the same set of
documents; the schema carries the one cross-field rule plain JSON Schema
cannot express (``Connector`` present iff the two steps target different
components) as an ``x-`` keyword enforced by :func:`validate_against_schema`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Any

import jsonschema

from .errors import MalformedWeaknessId, SchemaError

# Accepted wire spelling of a weakness id. The same pattern string is used
# verbatim inside the JSON schema, keeping parser and schema aligned.
WEAKNESS_WIRE_PATTERN = r"^\s*[Cc][Aa]?[Ww][Ee]-([0-9]{1,5})\s*$"
_WEAKNESS_WIRE_RE = re.compile(WEAKNESS_WIRE_PATTERN)
_CANONICAL_ID_RE = re.compile(r"^CWE-[0-9]{1,5}$")

SCHEMA_RESOURCE = "data/aptc.schema.json"


class SecurityProperty(Enum):
    CONFIDENTIALITY = "Confidentiality"
    INTEGRITY = "Integrity"
    AVAILABILITY = "Availability"
    AUTHENTICITY = "Authenticity"


class Applicability(Enum):
    APPLICABLE = "applicable"
    UNCERTAIN = "uncertain"
    NOT_APPLICABLE = "not_applicable"


_PROPERTY_VALUES = tuple(p.value for p in SecurityProperty)
_APPLICABILITY_VALUES = tuple(a.value for a in Applicability)


@dataclass(frozen=True)
class Threat:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("threat name must be non-empty")


@dataclass(frozen=True)
class WeaknessRef:
    id: str
    name: str = ""

    def __post_init__(self):
        if not _CANONICAL_ID_RE.match(self.id):
            raise ValueError(f"weakness id '{self.id}' is not of the form CWE-<digits>")


@dataclass(frozen=True)
class AttackStep:
    identifier: str
    executed_on: str

    def __post_init__(self):
        if not self.executed_on:
            raise ValueError("attack step must name the component it executes on")


@dataclass(frozen=True)
class AttackVector:
    name: str
    entry_point: AttackStep
    asset: AttackStep
    connector: str | None = None

    def __post_init__(self):
        crosses = self.entry_point.executed_on != self.asset.executed_on
        if crosses and not self.connector:
            raise ValueError("a connector is required when entry point and asset differ")
        if not crosses and self.connector:
            raise ValueError("a connector is forbidden when entry point and asset coincide")


@dataclass(frozen=True)
class PenTestCase:
    identifier: str
    violated_security_properties: frozenset[SecurityProperty]
    assessed_threat: Threat
    related_weaknesses: tuple[WeaknessRef, ...]
    used_attack_vector: AttackVector
    applicability: Applicability = Applicability.APPLICABLE
    missing_information: str | None = None

    def __post_init__(self):
        if not self.identifier:
            raise ValueError("test case identifier must be non-empty")
        if not self.violated_security_properties:
            raise ValueError("at least one violated security property is required")
        if not self.related_weaknesses:
            raise ValueError("at least one related weakness is required")
        if self.applicability is not Applicability.APPLICABLE and not self.missing_information:
            raise ValueError(
                f"applicability '{self.applicability.value}' requires missingInformation"
            )


def normalize_weakness_id(raw: str) -> str:
    """Canonicalize a CWE/CAWE spelling to ``CWE-<digits>``.

    Accepts the ``CWE-`` and ``CAWE-`` prefixes case-insensitively with
    surrounding whitespace; anything else raises MalformedWeaknessId.
    """
    if not isinstance(raw, str):
        raise MalformedWeaknessId(f"weakness id must be a string, got {type(raw).__name__}")
    match = _WEAKNESS_WIRE_RE.match(raw)
    if not match:
        raise MalformedWeaknessId(f"'{raw}' is not an accepted CWE/CAWE identifier")
    return f"CWE-{match.group(1)}"


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def synthesize_case_id(weakness_id: str, vector_name: str) -> str:
    """Deterministic test-case id for documents that do not carry one."""
    slug = _slug(vector_name)
    base = weakness_id.lower()
    return f"{base}-{slug}" if slug else base


class _Findings:
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, path: str, message: str) -> None:
        self.items.append((path, message))

    def __bool__(self):
        return bool(self.items)


def _parse_weaknesses(doc: dict, findings: _Findings) -> list[WeaknessRef]:
    raw = doc["CAWE"]
    values: list[tuple[str, Any]]
    if isinstance(raw, str):
        values = [("/CAWE", raw)]
    elif isinstance(raw, list):
        if not raw:
            findings.add("/CAWE", "weakness list must not be empty")
            return []
        values = [(f"/CAWE/{i}", item) for i, item in enumerate(raw)]
    else:
        findings.add("/CAWE", "expected a CWE identifier string or an array of them")
        return []
    refs: list[WeaknessRef] = []
    seen: set[str] = set()
    for path, item in values:
        try:
            canonical = normalize_weakness_id(item)
        except MalformedWeaknessId:
            findings.add(path, f"{item!r} is not an accepted CWE/CAWE identifier")
            continue
        if canonical not in seen:
            seen.add(canonical)
            refs.append(WeaknessRef(id=canonical))
    return refs


def _parse_properties(doc: dict, findings: _Findings) -> frozenset[SecurityProperty]:
    raw = doc["violatedSecurityProperty"]
    if isinstance(raw, str):
        values = [("/violatedSecurityProperty", raw)]
    elif isinstance(raw, list):
        if not raw:
            findings.add("/violatedSecurityProperty", "property list must not be empty")
            return frozenset()
        values = [(f"/violatedSecurityProperty/{i}", item) for i, item in enumerate(raw)]
    else:
        findings.add(
            "/violatedSecurityProperty",
            "expected a security property string or an array of them",
        )
        return frozenset()
    out: set[SecurityProperty] = set()
    for path, item in values:
        if not isinstance(item, str) or item not in _PROPERTY_VALUES:
            findings.add(
                path,
                f"{item!r} is not one of {', '.join(_PROPERTY_VALUES)}",
            )
            continue
        out.add(SecurityProperty(item))
    return frozenset(out)


def _parse_vector(doc: dict, findings: _Findings) -> tuple[str, str | None, str, str] | None:
    raw = doc["AttackVector"]
    if not isinstance(raw, dict):
        findings.add("/AttackVector", "expected an object")
        return None
    allowed = ("Name", "Connector", "EntryPoint", "Asset")
    for key in raw:
        if key not in allowed:
            findings.add(f"/AttackVector/{key}", f"unknown key '{key}'")
    for key in ("Name", "EntryPoint", "Asset"):
        if key not in raw:
            findings.add("/AttackVector", f"'{key}' is a required property")
    ok = True
    name = raw.get("Name")
    if "Name" in raw and not isinstance(name, str):
        findings.add("/AttackVector/Name", "expected a string")
        ok = False
    entry = raw.get("EntryPoint")
    asset = raw.get("Asset")
    for key, value in (("EntryPoint", entry), ("Asset", asset)):
        if key in raw and (not isinstance(value, str) or not value):
            findings.add(f"/AttackVector/{key}", "expected a non-empty string")
            ok = False
    connector = raw.get("Connector")
    if "Connector" in raw and (not isinstance(connector, str) or not connector):
        findings.add("/AttackVector/Connector", "expected a non-empty string")
        ok = False
    if not ok or any(key not in raw for key in ("Name", "EntryPoint", "Asset")):
        return None
    if entry == asset and "Connector" in raw:
        findings.add(
            "/AttackVector/Connector",
            "a connector is forbidden when EntryPoint equals Asset",
        )
        return None
    if entry != asset and "Connector" not in raw:
        findings.add(
            "/AttackVector",
            "a connector is required when EntryPoint differs from Asset",
        )
        return None
    return name, connector if "Connector" in raw else None, entry, asset


def parse_aptc(document: Any) -> PenTestCase:
    """Parse one wire-format document into a PenTestCase.

    Raises SchemaError carrying every violated constraint; accepts exactly
    the documents the bundled JSON schema accepts.
    """
    findings = _Findings()
    if not isinstance(document, dict):
        raise SchemaError([("", "test case document must be a JSON object")])

    allowed = (
        "CAWE",
        "violatedSecurityProperty",
        "Threat",
        "AttackVector",
        "id",
        "applicability",
        "missingInformation",
    )
    for key in document:
        if key not in allowed:
            findings.add(f"/{key}", f"unknown key '{key}'")
    for key in ("CAWE", "violatedSecurityProperty", "Threat", "AttackVector"):
        if key not in document:
            findings.add("", f"'{key}' is a required property")

    weaknesses: list[WeaknessRef] = []
    if "CAWE" in document:
        weaknesses = _parse_weaknesses(document, findings)
    properties: frozenset[SecurityProperty] = frozenset()
    if "violatedSecurityProperty" in document:
        properties = _parse_properties(document, findings)
    if "Threat" in document:
        threat_raw = document["Threat"]
        if not isinstance(threat_raw, str) or not threat_raw:
            findings.add("/Threat", "expected a non-empty string")
    vector_parts = None
    if "AttackVector" in document:
        vector_parts = _parse_vector(document, findings)

    explicit_id = document.get("id")
    if "id" in document and (not isinstance(explicit_id, str) or not explicit_id):
        findings.add("/id", "expected a non-empty string")
        explicit_id = None

    applicability = Applicability.APPLICABLE
    if "applicability" in document:
        raw_app = document["applicability"]
        if not isinstance(raw_app, str) or raw_app not in _APPLICABILITY_VALUES:
            findings.add(
                "/applicability",
                f"{raw_app!r} is not one of {', '.join(_APPLICABILITY_VALUES)}",
            )
        else:
            applicability = Applicability(raw_app)

    missing_information = document.get("missingInformation")
    if "missingInformation" in document and (
        not isinstance(missing_information, str) or not missing_information
    ):
        findings.add("/missingInformation", "expected a non-empty string")
        missing_information = None
    if applicability is not Applicability.APPLICABLE and "missingInformation" not in document:
        findings.add(
            "",
            f"'missingInformation' is required when applicability is '{applicability.value}'",
        )

    if findings:
        raise SchemaError(findings.items)

    assert vector_parts is not None
    vector_name, connector, entry, asset = vector_parts
    case_id = explicit_id or synthesize_case_id(weaknesses[0].id, vector_name)
    vector = AttackVector(
        name=vector_name,
        entry_point=AttackStep(identifier=f"{case_id}/entry", executed_on=entry),
        asset=AttackStep(identifier=f"{case_id}/asset", executed_on=asset),
        connector=connector,
    )
    return PenTestCase(
        identifier=case_id,
        violated_security_properties=properties,
        assessed_threat=Threat(document["Threat"]),
        related_weaknesses=tuple(weaknesses),
        used_attack_vector=vector,
        applicability=applicability,
        missing_information=missing_information,
    )


_PROPERTY_ORDER = {p: i for i, p in enumerate(SecurityProperty)}


def emit_aptc(case: PenTestCase) -> dict:
    """Emit the wire document for a case; parse(emit(x)) equals x."""
    weakness_ids = [w.id for w in case.related_weaknesses]
    properties = sorted(case.violated_security_properties, key=_PROPERTY_ORDER.get)
    doc: dict[str, Any] = {
        "CAWE": weakness_ids[0] if len(weakness_ids) == 1 else weakness_ids,
        "violatedSecurityProperty": (
            properties[0].value if len(properties) == 1 else [p.value for p in properties]
        ),
        "Threat": case.assessed_threat.name,
    }
    vector = case.used_attack_vector
    av: dict[str, Any] = {"Name": vector.name}
    if vector.connector is not None:
        av["Connector"] = vector.connector
    av["EntryPoint"] = vector.entry_point.executed_on
    av["Asset"] = vector.asset.executed_on
    doc["AttackVector"] = av
    doc["id"] = case.identifier
    if case.applicability is not Applicability.APPLICABLE:
        doc["applicability"] = case.applicability.value
    if case.missing_information is not None:
        doc["missingInformation"] = case.missing_information
    return doc


def as_batch(value: Any) -> list[Any]:
    """Coerce an extracted generation payload to a list of case documents."""
    if isinstance(value, list):
        return value
    return [value]


@lru_cache(maxsize=1)
def aptc_schema_text() -> str:
    """The bundled, versioned schema file, byte-for-byte."""
    return resources.files("aptcgen").joinpath(SCHEMA_RESOURCE).read_text(encoding="utf-8")


def aptc_json_schema() -> dict:
    """The schema document equivalent to parse_aptc's acceptance set."""
    return json.loads(aptc_schema_text())


def _connector_iff_distinct(validator, value, instance, schema):
    if not value or not isinstance(instance, dict):
        return
    entry = instance.get("EntryPoint")
    asset = instance.get("Asset")
    if not isinstance(entry, str) or not isinstance(asset, str) or not entry or not asset:
        return
    if entry == asset and "Connector" in instance:
        yield jsonschema.ValidationError(
            "a connector is forbidden when EntryPoint equals Asset"
        )
    if entry != asset and "Connector" not in instance:
        yield jsonschema.ValidationError(
            "a connector is required when EntryPoint differs from Asset"
        )


@lru_cache(maxsize=1)
def _schema_validator() -> jsonschema.protocols.Validator:
    extended = jsonschema.validators.extend(
        jsonschema.Draft202012Validator,
        {"x-connector-iff-distinct-endpoints": _connector_iff_distinct},
    )
    return extended(aptc_json_schema())


def schema_findings(document: Any) -> list[tuple[str, str]]:
    """All schema violations for a document as (json pointer, message) pairs."""
    out = []
    for error in _schema_validator().iter_errors(document):
        pointer = "/" + "/".join(str(part) for part in error.absolute_path)
        out.append((pointer if pointer != "/" else "", error.message))
    return sorted(out)


def validate_against_schema(document: Any) -> bool:
    """True iff the document satisfies the bundled schema (x- rules included)."""
    return not schema_findings(document)
