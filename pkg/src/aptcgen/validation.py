"""Semantic validation of test cases against an architecture model.

Each check returns findings rather than raising: unknown names, wrong
connectors, infeasible vectors, and out-of-catalog weaknesses are error
findings that flip the per-category booleans of a ValidationReport, while
the property-plausibility heuristic only ever emits info findings.

A report's ``correctness_auto`` covers the mechanically checkable part of
correctness (format, grounding, feasibility, weakness set). It is necessary
but not sufficient for a full correctness judgment: whether a case truly
matches the intended weakness semantically stays a human call, recorded in
the score file handled by the evaluation module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Any, Sequence

from .aptc import PenTestCase, SecurityProperty, parse_aptc
from .archmodel import ArchitectureModel, deployment_linked, reachable
from .catalog import CatalogEntry, allowed_weaknesses
from .errors import SchemaError, UnallocatedComponent

EXPECTATIONS_RESOURCE = "data/property_expectations.json"


class FindingCode(Enum):
    SCHEMA_VIOLATION = "SchemaViolation"
    UNKNOWN_COMPONENT = "UnknownComponent"
    UNKNOWN_CONNECTOR = "UnknownConnector"
    CONNECTOR_MISMATCH = "ConnectorMismatch"
    INFEASIBLE_VECTOR = "InfeasibleVector"
    WEAKNESS_OUT_OF_SET = "WeaknessOutOfSet"
    PROPERTY_IMPLAUSIBLE = "PropertyImplausible"


_GROUNDING_CODES = (
    FindingCode.UNKNOWN_COMPONENT,
    FindingCode.UNKNOWN_CONNECTOR,
    FindingCode.CONNECTOR_MISMATCH,
)


@dataclass(frozen=True)
class Finding:
    code: FindingCode
    severity: str  # "error" | "info"
    message: str
    path: str  # JSON pointer into the offending document

    def __post_init__(self):
        if self.severity not in ("error", "info"):
            raise ValueError(f"invalid severity '{self.severity}'")
        if self.code is FindingCode.PROPERTY_IMPLAUSIBLE and self.severity != "info":
            raise ValueError("property plausibility findings are always info severity")

    def to_dict(self) -> dict:
        return {
            "code": self.code.value,
            "severity": self.severity,
            "message": self.message,
            "path": self.path,
        }


@dataclass(frozen=True)
class ValidationReport:
    aptc_id: str
    findings: tuple[Finding, ...]
    schema_ok: bool
    grounding_ok: bool
    feasibility_ok: bool
    weakness_ok: bool

    @property
    def correctness_auto(self) -> bool:
        return self.schema_ok and self.grounding_ok and self.feasibility_ok and self.weakness_ok

    def to_dict(self) -> dict:
        return {
            "aptcId": self.aptc_id,
            "findings": [f.to_dict() for f in self.findings],
            "schemaOk": self.schema_ok,
            "groundingOk": self.grounding_ok,
            "feasibilityOk": self.feasibility_ok,
            "weaknessOk": self.weakness_ok,
            "correctnessAuto": self.correctness_auto,
        }


@lru_cache(maxsize=1)
def default_property_expectations() -> dict[str, frozenset[SecurityProperty]]:
    """Bundled weakness to plausible-property table for the info-only heuristic."""
    text = resources.files("aptcgen").joinpath(EXPECTATIONS_RESOURCE).read_text(encoding="utf-8")
    doc = json.loads(text)
    return {
        weakness: frozenset(SecurityProperty(p) for p in properties)
        for weakness, properties in doc.items()
    }


def check_grounding(case: PenTestCase, model: ArchitectureModel) -> list[Finding]:
    """Flag every architectural name the case uses that the model does not define."""
    findings: list[Finding] = []
    names = {c.name for c in model.components}
    vector = case.used_attack_vector
    steps = (
        ("/AttackVector/EntryPoint", vector.entry_point.executed_on),
        ("/AttackVector/Asset", vector.asset.executed_on),
    )
    for path, name in steps:
        if name not in names:
            findings.append(
                Finding(
                    code=FindingCode.UNKNOWN_COMPONENT,
                    severity="error",
                    message=f"unknown component '{name}'",
                    path=path,
                )
            )
    if vector.connector is not None:
        connector = next((c for c in model.connectors if c.name == vector.connector), None)
        if connector is None:
            findings.append(
                Finding(
                    code=FindingCode.UNKNOWN_CONNECTOR,
                    severity="error",
                    message=f"unknown connector '{vector.connector}'",
                    path="/AttackVector/Connector",
                )
            )
        elif not findings:
            # Endpoint comparison is only meaningful once both components resolve.
            expected = frozenset((vector.entry_point.executed_on, vector.asset.executed_on))
            if connector.endpoints() != expected:
                findings.append(
                    Finding(
                        code=FindingCode.CONNECTOR_MISMATCH,
                        severity="error",
                        message=(
                            f"connector '{connector.name}' joins "
                            f"'{connector.from_component}' and '{connector.to_component}', "
                            f"not the case's entry point and asset"
                        ),
                        path="/AttackVector/Connector",
                    )
                )
    return findings


def check_feasibility(
    case: PenTestCase,
    model: ArchitectureModel,
    *,
    strict_deployment: bool = False,
) -> list[Finding]:
    """Flag cross-component vectors with no connector path between the steps.

    Same-component vectors are always feasible. When a step names a
    component outside the model the check is skipped with an info finding;
    grounding already reports the real problem.
    """
    entry = case.used_attack_vector.entry_point.executed_on
    asset = case.used_attack_vector.asset.executed_on
    names = {c.name for c in model.components}
    if entry not in names or asset not in names:
        return [
            Finding(
                code=FindingCode.INFEASIBLE_VECTOR,
                severity="info",
                message="feasibility not checked: the vector references unknown components",
                path="/AttackVector",
            )
        ]
    if entry == asset:
        return []
    findings: list[Finding] = []
    if not reachable(model, entry, asset):
        findings.append(
            Finding(
                code=FindingCode.INFEASIBLE_VECTOR,
                severity="error",
                message=f"no connector path joins '{entry}' and '{asset}'",
                path="/AttackVector",
            )
        )
    if strict_deployment and not findings:
        try:
            if not deployment_linked(model, entry, asset):
                findings.append(
                    Finding(
                        code=FindingCode.INFEASIBLE_VECTOR,
                        severity="error",
                        message=(
                            f"'{entry}' and '{asset}' share no container and no "
                            f"network link between their containers"
                        ),
                        path="/AttackVector",
                    )
                )
        except UnallocatedComponent as exc:
            findings.append(
                Finding(
                    code=FindingCode.INFEASIBLE_VECTOR,
                    severity="info",
                    message=f"deployment check skipped: {exc}",
                    path="/AttackVector",
                )
            )
    return findings


def check_weakness_set(case: PenTestCase, catalog: Sequence[CatalogEntry]) -> list[Finding]:
    """Flag every weakness id outside the allowed catalog."""
    allowed = {entry.id for entry in catalog}
    findings: list[Finding] = []
    for i, weakness in enumerate(case.related_weaknesses):
        if weakness.id not in allowed:
            findings.append(
                Finding(
                    code=FindingCode.WEAKNESS_OUT_OF_SET,
                    severity="error",
                    message=f"weakness '{weakness.id}' is outside the allowed set",
                    path=f"/CAWE/{i}" if len(case.related_weaknesses) > 1 else "/CAWE",
                )
            )
    return findings


def check_property_plausibility(
    case: PenTestCase,
    expectations: dict[str, frozenset[SecurityProperty]] | None = None,
) -> list[Finding]:
    """Info-only heuristic: do the violated properties fit the weakness at all?

    Fires when none of the case's properties intersect the expected set for
    any of its weaknesses. Never contributes to correctness_auto.
    """
    table = expectations if expectations is not None else default_property_expectations()
    findings: list[Finding] = []
    for weakness in case.related_weaknesses:
        expected = table.get(weakness.id)
        if expected is None:
            continue
        if not (case.violated_security_properties & expected):
            claimed = ", ".join(sorted(p.value for p in case.violated_security_properties))
            plausible = ", ".join(sorted(p.value for p in expected))
            findings.append(
                Finding(
                    code=FindingCode.PROPERTY_IMPLAUSIBLE,
                    severity="info",
                    message=(
                        f"{weakness.id} typically violates {plausible}; "
                        f"the case claims {claimed}"
                    ),
                    path="/violatedSecurityProperty",
                )
            )
    return findings


def _booleans(findings: Sequence[Finding]) -> tuple[bool, bool, bool, bool]:
    def clean(codes: tuple[FindingCode, ...] | FindingCode) -> bool:
        members = codes if isinstance(codes, tuple) else (codes,)
        return not any(f.code in members and f.severity == "error" for f in findings)

    return (
        clean(FindingCode.SCHEMA_VIOLATION),
        clean(_GROUNDING_CODES),
        clean(FindingCode.INFEASIBLE_VECTOR),
        clean(FindingCode.WEAKNESS_OUT_OF_SET),
    )


def validate_case(
    case: PenTestCase,
    model: ArchitectureModel,
    catalog: Sequence[CatalogEntry] | None = None,
    *,
    expectations: dict[str, frozenset[SecurityProperty]] | None = None,
    strict_deployment: bool = False,
) -> ValidationReport:
    """Validate one already-parsed case."""
    active_catalog = catalog if catalog is not None else allowed_weaknesses()
    findings: list[Finding] = []
    findings += check_grounding(case, model)
    findings += check_feasibility(case, model, strict_deployment=strict_deployment)
    findings += check_weakness_set(case, active_catalog)
    findings += check_property_plausibility(case, expectations)
    schema_ok, grounding_ok, feasibility_ok, weakness_ok = _booleans(findings)
    return ValidationReport(
        aptc_id=case.identifier,
        findings=tuple(findings),
        schema_ok=schema_ok,
        grounding_ok=grounding_ok,
        feasibility_ok=feasibility_ok,
        weakness_ok=weakness_ok,
    )


def validate_batch(
    documents: Sequence[Any],
    model: ArchitectureModel,
    catalog: Sequence[CatalogEntry] | None = None,
    *,
    expectations: dict[str, frozenset[SecurityProperty]] | None = None,
    strict_deployment: bool = False,
) -> list[ValidationReport]:
    """One report per wire document, in input order.

    Documents that fail parsing get a report whose findings are the parse
    stage's schema violations; semantic checks then run only on cases that
    parsed.
    """
    reports: list[ValidationReport] = []
    for index, document in enumerate(documents):
        try:
            case = parse_aptc(document)
        except SchemaError as exc:
            findings = tuple(
                Finding(
                    code=FindingCode.SCHEMA_VIOLATION,
                    severity="error",
                    message=message,
                    path=path,
                )
                for path, message in exc.findings
            )
            fallback_id = ""
            if isinstance(document, dict) and isinstance(document.get("id"), str):
                fallback_id = document["id"]
            reports.append(
                ValidationReport(
                    aptc_id=fallback_id or f"aptc[{index}]",
                    findings=findings,
                    schema_ok=False,
                    grounding_ok=True,
                    feasibility_ok=True,
                    weakness_ok=True,
                )
            )
            continue
        reports.append(
            validate_case(
                case,
                model,
                catalog,
                expectations=expectations,
                strict_deployment=strict_deployment,
            )
        )
    return reports


def summarize_reports(reports: Sequence[ValidationReport]) -> str:
    """Human-readable one-line-per-case summary."""
    lines = []
    for report in reports:
        status = "ok" if report.correctness_auto else "FAIL"
        flags = []
        for label, value in (
            ("schema", report.schema_ok),
            ("grounding", report.grounding_ok),
            ("feasibility", report.feasibility_ok),
            ("weakness", report.weakness_ok),
        ):
            if not value:
                flags.append(label)
        suffix = f" ({', '.join(flags)})" if flags else ""
        lines.append(f"{status:4s} {report.aptc_id}{suffix}")
        for finding in report.findings:
            lines.append(f"     - [{finding.severity}] {finding.code.value}: {finding.message}")
    passed = sum(1 for r in reports if r.correctness_auto)
    lines.append(f"{passed}/{len(reports)} cases pass all automatic checks")
    return "\n".join(lines)
