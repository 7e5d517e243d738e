"""Deterministic security-analysis text view of an architecture model.

The view linearizes a model into three fixed sections for LLM consumption:
an overview, the interfaces and dependencies of each component, and the
resource environment. Every identifier is reproduced verbatim; equal models
always serialize to byte-identical text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .archmodel import ArchitectureModel

OVERVIEW_HEADER = "## Overview"
DEPENDENCIES_HEADER = "## Interfaces and Dependencies"
ENVIRONMENT_HEADER = "## Resource Environment"


@dataclass(frozen=True)
class SecurityView:
    overview: str
    interfaces_and_dependencies: str
    resource_environments: str
    full_text: str


def serialize_security_view(model: ArchitectureModel, *, include_operations: bool = True) -> SecurityView:
    """Render the three-section security view of a valid model.

    Elements are sorted lexicographically by name within each section;
    identifiers are never abbreviated, re-cased, or pluralized.
    """
    overview = _overview_section(model)
    dependencies = _dependencies_section(model, include_operations)
    environment = _environment_section(model)
    full_text = (
        f"{OVERVIEW_HEADER}\n{overview}\n"
        f"\n{DEPENDENCIES_HEADER}\n{dependencies}\n"
        f"\n{ENVIRONMENT_HEADER}\n{environment}\n"
    )
    return SecurityView(
        overview=overview,
        interfaces_and_dependencies=dependencies,
        resource_environments=environment,
        full_text=full_text,
    )


def _count(n: int, noun: str) -> str:
    return f"{n} {noun}" if n == 1 else f"{n} {noun}s"


def _overview_section(model: ArchitectureModel) -> str:
    lines = [f"Architecture: {model.name}"]
    lines.append(
        "This architecture contains "
        f"{_count(len(model.components), 'component')}, "
        f"{_count(len(model.interfaces), 'interface')}, "
        f"{_count(len(model.connectors), 'connector')}, "
        f"{_count(len(model.containers), 'container')}, "
        f"{_count(len(model.links), 'link')}, and "
        f"{_count(len(model.allocations), 'allocation')}."
    )
    if model.components:
        lines.append("Components:")
        for comp in sorted(model.components, key=lambda c: c.name):
            if comp.asset_note:
                lines.append(f"- {comp.name} (asset: {comp.asset_note})")
            else:
                lines.append(f"- {comp.name}")
    return "\n".join(lines)


def _dependencies_section(model: ArchitectureModel, include_operations: bool) -> str:
    lines: list[str] = []
    if model.interfaces:
        lines.append("Interfaces:")
        for iface in sorted(model.interfaces, key=lambda i: i.name):
            if include_operations and iface.operations:
                lines.append(f"- {iface.name}: {', '.join(iface.operations)}")
            else:
                lines.append(f"- {iface.name}")
    for comp in sorted(model.components, key=lambda c: c.name):
        lines.append(f"Component: {comp.name}")
        provided = ", ".join(sorted(comp.provides)) if comp.provides else "(none)"
        required = ", ".join(sorted(comp.requires)) if comp.requires else "(none)"
        lines.append(f"  Provides: {provided}")
        lines.append(f"  Requires: {required}")
        incident = sorted(
            (c for c in model.connectors if comp.name in (c.from_component, c.to_component)),
            key=lambda c: c.name,
        )
        if incident:
            lines.append("  Connectors:")
            for conn in incident:
                if conn.from_component == comp.name:
                    lines.append(
                        f"  - {conn.name}: calls {conn.to_component} through interface {conn.interface}"
                    )
                else:
                    lines.append(
                        f"  - {conn.name}: called by {conn.from_component} through interface {conn.interface}"
                    )
    return "\n".join(lines)


def _environment_section(model: ArchitectureModel) -> str:
    lines: list[str] = []
    if model.containers:
        lines.append("Containers:")
        for container in sorted(model.containers, key=lambda c: c.name):
            lines.append(f"- {container.name}")
    if model.links:
        lines.append("Links:")
        for link in sorted(model.links, key=lambda l: l.name):
            lines.append(f"- {link.name}: connects {', '.join(sorted(link.containers))}")
    if model.allocations:
        lines.append("Allocations:")
        for alloc in sorted(model.allocations, key=lambda a: (a.component, a.container)):
            lines.append(f"- {alloc.component} runs on {alloc.container}")
    return "\n".join(lines)


def _name_present(name: str, text: str) -> bool:
    # Word-boundary match so that e.g. "Machine" is not counted as present
    # just because "MachineTerminal" appears.
    pattern = rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])"
    return re.search(pattern, text) is not None


def extract_identifiers(view: SecurityView, model: ArchitectureModel) -> tuple[set[str], set[str]]:
    """Partition the model's identifiers into (present, missing) w.r.t. the view text."""
    present: set[str] = set()
    missing: set[str] = set()
    for name in model.identifier_names():
        if _name_present(name, view.full_text):
            present.add(name)
        else:
            missing.add(name)
    return present, missing
