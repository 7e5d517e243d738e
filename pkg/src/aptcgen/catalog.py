"""The allowed-weakness catalog used for generation and validation.

The default catalog ships as bundled data and is deliberately small: the
five authorization and access-control weaknesses the generator targets.
It is data-driven so a broader catalog can be swapped in without code
changes (``load_catalog``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .aptc import normalize_weakness_id
from .errors import ParseError

CATALOG_RESOURCE = "data/cawe_catalog.json"


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    name: str
    summary: str = ""


def _entries_from_doc(doc, origin: str) -> tuple[CatalogEntry, ...]:
    if not isinstance(doc, list):
        raise ParseError(f"{origin}: catalog must be a JSON array")
    entries: list[CatalogEntry] = []
    seen: set[str] = set()
    for i, obj in enumerate(doc):
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
            raise ParseError(f"{origin}[{i}]: catalog entry must be an object with an 'id'")
        entry = CatalogEntry(
            id=normalize_weakness_id(obj["id"]),
            name=str(obj.get("name", "")),
            summary=str(obj.get("summary", "")),
        )
        if entry.id in seen:
            raise ParseError(f"{origin}[{i}]: duplicate catalog id '{entry.id}'")
        seen.add(entry.id)
        entries.append(entry)
    return tuple(entries)


@lru_cache(maxsize=1)
def allowed_weaknesses() -> tuple[CatalogEntry, ...]:
    """The bundled catalog, in its fixed generation order."""
    text = resources.files("aptcgen").joinpath(CATALOG_RESOURCE).read_text(encoding="utf-8")
    return _entries_from_doc(json.loads(text), CATALOG_RESOURCE)


def load_catalog(path: str | Path) -> tuple[CatalogEntry, ...]:
    """Load a replacement catalog from a JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read catalog file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"catalog file is not valid JSON: {exc}") from exc
    return _entries_from_doc(doc, str(path))


def lookup(weakness_id: str, catalog: tuple[CatalogEntry, ...] | None = None) -> CatalogEntry | None:
    """Entry for a (possibly CAWE-spelled) id, or None when outside the catalog."""
    canonical = normalize_weakness_id(weakness_id)
    for entry in catalog if catalog is not None else allowed_weaknesses():
        if entry.id == canonical:
            return entry
    return None
