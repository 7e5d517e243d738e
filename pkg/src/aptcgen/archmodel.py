"""Component-based architecture models: loading, integrity checks, and graph queries.

The canonical input is a UTF-8 JSON document with the top-level keys
``name``, ``components``, ``interfaces``, ``connectors``, ``containers``,
``links``, and ``allocations``. All values are immutable after load and
every operation here is a pure function, so models can be shared freely
across threads.
"""

from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, IO, Iterable

from .errors import IntegrityError, ParseError, UnallocatedComponent, UnknownComponent


@dataclass(frozen=True)
class Component:
    name: str
    provides: tuple[str, ...] = ()
    requires: tuple[str, ...] = ()
    asset_note: str | None = None


@dataclass(frozen=True)
class InterfaceDef:
    name: str
    operations: tuple[str, ...] = ()


@dataclass(frozen=True)
class Connector:
    name: str
    from_component: str
    to_component: str
    interface: str

    def endpoints(self) -> frozenset[str]:
        return frozenset((self.from_component, self.to_component))


@dataclass(frozen=True)
class ResourceContainer:
    name: str


@dataclass(frozen=True)
class LinkingResource:
    name: str
    containers: tuple[str, ...]


@dataclass(frozen=True)
class Allocation:
    component: str
    container: str


@dataclass(frozen=True)
class ArchitectureModel:
    name: str
    components: tuple[Component, ...] = ()
    interfaces: tuple[InterfaceDef, ...] = ()
    connectors: tuple[Connector, ...] = ()
    containers: tuple[ResourceContainer, ...] = ()
    links: tuple[LinkingResource, ...] = ()
    allocations: tuple[Allocation, ...] = ()

    def component(self, name: str) -> Component:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise UnknownComponent(f"unknown component '{name}' in model '{self.name}'")

    def container_of(self, component_name: str) -> str:
        self.component(component_name)
        for alloc in self.allocations:
            if alloc.component == component_name:
                return alloc.container
        raise UnallocatedComponent(
            f"component '{component_name}' is not allocated to any container"
        )

    def identifier_names(self) -> tuple[str, ...]:
        """All model identifiers: components, interfaces, connectors, containers, links."""
        names: list[str] = [c.name for c in self.components]
        names += [i.name for i in self.interfaces]
        names += [c.name for c in self.connectors]
        names += [c.name for c in self.containers]
        names += [l.name for l in self.links]
        return tuple(names)


_TOP_LEVEL_KEYS = (
    "name",
    "components",
    "interfaces",
    "connectors",
    "containers",
    "links",
    "allocations",
)


class UnknownKeyWarning(UserWarning):
    """Unknown document key tolerated in lenient mode."""


def _reject_unknown_keys(obj: dict, allowed: Iterable[str], location: str, lenient: bool) -> None:
    unknown = [k for k in obj.keys() if k not in allowed]
    for key in unknown:
        if lenient:
            warnings.warn(f"{location}: ignoring unknown key '{key}'", UnknownKeyWarning)
        else:
            raise IntegrityError(f"unknown key '{key}'", location)


def _require_str(obj: dict, key: str, location: str, *, optional: bool = False) -> str | None:
    if key not in obj:
        if optional:
            return None
        raise ParseError(f"{location}: missing required key '{key}'")
    value = obj[key]
    if not isinstance(value, str):
        raise ParseError(f"{location}.{key}: expected a string")
    return value


def _require_str_list(obj: dict, key: str, location: str, *, default: list | None = None) -> list[str]:
    if key not in obj:
        if default is not None:
            return default
        raise ParseError(f"{location}: missing required key '{key}'")
    value = obj[key]
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise ParseError(f"{location}.{key}: expected a list of strings")
    return value


def _object_list(doc: dict, key: str) -> list[dict]:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise ParseError(f"{key}: expected a list")
    for i, item in enumerate(value):
        if not isinstance(item, dict):
            raise ParseError(f"{key}[{i}]: expected an object")
    return value


def _read_source(source: str | Path | bytes | bytearray | IO) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        try:
            return Path(source).read_bytes()
        except OSError as exc:
            raise ParseError(f"cannot read architecture file: {exc}") from exc
    if hasattr(source, "read"):
        data = source.read()
        return data.encode("utf-8") if isinstance(data, str) else bytes(data)
    raise ParseError(f"unsupported architecture source type: {type(source).__name__}")


def load_architecture(source: str | Path | bytes | bytearray | IO, *, lenient: bool = False) -> ArchitectureModel:
    """Load and fully validate an architecture document.

    Raises ParseError on malformed input and IntegrityError (with a
    location) on dangling references, duplicate names, self-connectors,
    or unknown keys in strict mode. A model is never partially built:
    either every invariant holds or the load fails.
    """
    raw = _read_source(source)
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"not a valid UTF-8 JSON document: {exc}") from exc
    return architecture_from_document(doc, lenient=lenient)


def architecture_from_document(doc: Any, *, lenient: bool = False) -> ArchitectureModel:
    """Build a validated model from an already-parsed JSON value."""
    if not isinstance(doc, dict):
        raise ParseError("architecture document must be a JSON object")
    _reject_unknown_keys(doc, _TOP_LEVEL_KEYS, "document", lenient)
    name = _require_str(doc, "name", "document")

    interfaces = []
    for i, obj in enumerate(_object_list(doc, "interfaces")):
        loc = f"interfaces[{i}]"
        _reject_unknown_keys(obj, ("name", "operations"), loc, lenient)
        interfaces.append(
            InterfaceDef(
                name=_require_str(obj, "name", loc),
                operations=tuple(_require_str_list(obj, "operations", loc, default=[])),
            )
        )

    components = []
    for i, obj in enumerate(_object_list(doc, "components")):
        loc = f"components[{i}]"
        _reject_unknown_keys(obj, ("name", "provides", "requires", "assetNote"), loc, lenient)
        note = obj.get("assetNote")
        if note is not None and not isinstance(note, str):
            raise ParseError(f"{loc}.assetNote: expected a string")
        components.append(
            Component(
                name=_require_str(obj, "name", loc),
                provides=tuple(_require_str_list(obj, "provides", loc, default=[])),
                requires=tuple(_require_str_list(obj, "requires", loc, default=[])),
                asset_note=note,
            )
        )

    connectors = []
    for i, obj in enumerate(_object_list(doc, "connectors")):
        loc = f"connectors[{i}]"
        _reject_unknown_keys(obj, ("name", "from", "to", "interface"), loc, lenient)
        connectors.append(
            Connector(
                name=_require_str(obj, "name", loc),
                from_component=_require_str(obj, "from", loc),
                to_component=_require_str(obj, "to", loc),
                interface=_require_str(obj, "interface", loc),
            )
        )

    containers = []
    for i, obj in enumerate(_object_list(doc, "containers")):
        loc = f"containers[{i}]"
        _reject_unknown_keys(obj, ("name",), loc, lenient)
        containers.append(ResourceContainer(name=_require_str(obj, "name", loc)))

    links = []
    for i, obj in enumerate(_object_list(doc, "links")):
        loc = f"links[{i}]"
        _reject_unknown_keys(obj, ("name", "containers"), loc, lenient)
        links.append(
            LinkingResource(
                name=_require_str(obj, "name", loc),
                containers=tuple(_require_str_list(obj, "containers", loc)),
            )
        )

    allocations = []
    for i, obj in enumerate(_object_list(doc, "allocations")):
        loc = f"allocations[{i}]"
        _reject_unknown_keys(obj, ("component", "container"), loc, lenient)
        allocations.append(
            Allocation(
                component=_require_str(obj, "component", loc),
                container=_require_str(obj, "container", loc),
            )
        )

    model = ArchitectureModel(
        name=name,
        components=tuple(components),
        interfaces=tuple(interfaces),
        connectors=tuple(connectors),
        containers=tuple(containers),
        links=tuple(links),
        allocations=tuple(allocations),
    )
    _check_integrity(model)
    return model


def _check_unique(names: Iterable[str], kind: str) -> None:
    seen: set[str] = set()
    for i, name in enumerate(names):
        if not name:
            raise IntegrityError(f"empty {kind} name", f"{kind}s[{i}].name")
        if name in seen:
            raise IntegrityError(f"duplicate {kind} name '{name}'", f"{kind}s[{i}].name")
        seen.add(name)


def _check_integrity(model: ArchitectureModel) -> None:
    _check_unique((c.name for c in model.components), "component")
    _check_unique((i.name for i in model.interfaces), "interface")
    _check_unique((c.name for c in model.connectors), "connector")
    _check_unique((c.name for c in model.containers), "container")
    _check_unique((l.name for l in model.links), "link")

    component_names = {c.name for c in model.components}
    interface_names = {i.name for i in model.interfaces}
    container_names = {c.name for c in model.containers}

    for i, comp in enumerate(model.components):
        loc = f"components[{i}]"
        for attr in ("provides", "requires"):
            names = getattr(comp, attr)
            if len(set(names)) != len(names):
                raise IntegrityError(f"duplicate interface in {attr}", f"{loc}.{attr}")
            for iface in names:
                if iface not in interface_names:
                    raise IntegrityError(
                        f"component '{comp.name}' references unknown interface '{iface}'",
                        f"{loc}.{attr}",
                    )

    components_by_name = {c.name: c for c in model.components}
    for i, conn in enumerate(model.connectors):
        loc = f"connectors[{i}]"
        for side, ref in (("from", conn.from_component), ("to", conn.to_component)):
            if ref not in component_names:
                raise IntegrityError(
                    f"connector '{conn.name}' references unknown component '{ref}'",
                    f"{loc}.{side}",
                )
        if conn.from_component == conn.to_component:
            raise IntegrityError(
                f"connector '{conn.name}' connects component '{conn.from_component}' to itself",
                loc,
            )
        if conn.interface not in components_by_name[conn.to_component].provides:
            raise IntegrityError(
                f"connector '{conn.name}' interface '{conn.interface}' is not provided by '{conn.to_component}'",
                f"{loc}.interface",
            )
        if conn.interface not in components_by_name[conn.from_component].requires:
            raise IntegrityError(
                f"connector '{conn.name}' interface '{conn.interface}' is not required by '{conn.from_component}'",
                f"{loc}.interface",
            )

    for i, link in enumerate(model.links):
        loc = f"links[{i}]"
        if len(link.containers) < 2:
            raise IntegrityError(f"link '{link.name}' must reference at least 2 containers", loc)
        if len(set(link.containers)) != len(link.containers):
            raise IntegrityError(f"link '{link.name}' lists a container twice", loc)
        for ref in link.containers:
            if ref not in container_names:
                raise IntegrityError(
                    f"link '{link.name}' references unknown container '{ref}'",
                    f"{loc}.containers",
                )

    allocated: set[str] = set()
    for i, alloc in enumerate(model.allocations):
        loc = f"allocations[{i}]"
        if alloc.component not in component_names:
            raise IntegrityError(f"allocation references unknown component '{alloc.component}'", loc)
        if alloc.container not in container_names:
            raise IntegrityError(f"allocation references unknown container '{alloc.container}'", loc)
        if alloc.component in allocated:
            raise IntegrityError(f"component '{alloc.component}' allocated more than once", loc)
        allocated.add(alloc.component)


def emit_architecture(model: ArchitectureModel) -> dict:
    """Emit the canonical JSON document; load(emit(m)) is structurally equal to m."""
    doc: dict[str, Any] = {"name": model.name}
    doc["components"] = []
    for comp in model.components:
        obj: dict[str, Any] = {
            "name": comp.name,
            "provides": list(comp.provides),
            "requires": list(comp.requires),
        }
        if comp.asset_note is not None:
            obj["assetNote"] = comp.asset_note
        doc["components"].append(obj)
    doc["interfaces"] = [
        {"name": i.name, "operations": list(i.operations)} for i in model.interfaces
    ]
    doc["connectors"] = [
        {"name": c.name, "from": c.from_component, "to": c.to_component, "interface": c.interface}
        for c in model.connectors
    ]
    doc["containers"] = [{"name": c.name} for c in model.containers]
    doc["links"] = [{"name": l.name, "containers": list(l.containers)} for l in model.links]
    doc["allocations"] = [
        {"component": a.component, "container": a.container} for a in model.allocations
    ]
    return doc


def component_names(model: ArchitectureModel) -> set[str]:
    """Exact set of component names, no normalization."""
    return {c.name for c in model.components}


def directly_connected(model: ArchitectureModel, a: str, b: str) -> Connector | None:
    """The connector joining a and b, ignoring direction; None if there is none.

    Several parallel connectors tie-break by lexicographic connector name.
    """
    model.component(a)
    model.component(b)
    matches = [c for c in model.connectors if c.endpoints() == frozenset((a, b))]
    if not matches:
        return None
    return min(matches, key=lambda c: c.name)


def _adjacency(model: ArchitectureModel) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {c.name: set() for c in model.components}
    for conn in model.connectors:
        adj[conn.from_component].add(conn.to_component)
        adj[conn.to_component].add(conn.from_component)
    return adj


def reachable(model: ArchitectureModel, a: str, b: str) -> bool:
    """True iff a path of connectors joins a and b; every component reaches itself."""
    model.component(a)
    model.component(b)
    if a == b:
        return True
    adj = _adjacency(model)
    seen = {a}
    queue = deque([a])
    while queue:
        current = queue.popleft()
        for neighbor in adj[current]:
            if neighbor == b:
                return True
            if neighbor not in seen:
                seen.add(neighbor)
                queue.append(neighbor)
    return False


def deployment_linked(model: ArchitectureModel, a: str, b: str) -> bool:
    """True iff a and b share a container or their containers share a link."""
    container_a = model.container_of(a)
    container_b = model.container_of(b)
    if container_a == container_b:
        return True
    for link in model.links:
        if container_a in link.containers and container_b in link.containers:
            return True
    return False
