"""End-to-end run orchestration: serialize, prompt, generate, validate, persist.

A run executes every (architecture x provider x strategy) cell, isolates
per-cell failures, and persists every intermediate artifact under a
content-addressed run directory so each stage can be re-run and diffed.
Run directories are append-only; re-running never mutates an existing one.
"""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import gateway
from .aptc import as_batch
from .archmodel import ArchitectureModel, load_architecture
from .catalog import CatalogEntry, allowed_weaknesses, load_catalog
from .errors import AptcError, ParseError
from .gateway import ProviderConfig, Transport, extract_json
from .prompting import Strategy, build_prompt, default_exemplars
from .serializer import serialize_security_view
from .validation import ValidationReport, validate_batch

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class RunConfig:
    architecture_paths: tuple[str, ...]
    providers: tuple[ProviderConfig, ...]
    strategies: tuple[Strategy, ...]
    output_dir: str
    catalog_path: str | None = None
    shots: int = 3
    include_operations: bool = True
    strict_deployment: bool = False
    lenient: bool = False
    parallelism: int = 4

    def __post_init__(self):
        if not self.architecture_paths:
            raise ValueError("at least one architecture path is required")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if not self.providers:
            raise ValueError("at least one provider is required")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def _provider_from_doc(doc: dict) -> ProviderConfig:
    kind_aliases = {
        "openai": gateway.OPENAI_KIND,
        gateway.OPENAI_KIND: gateway.OPENAI_KIND,
        gateway.GEMINI_KIND: gateway.GEMINI_KIND,
        gateway.REPLAY_KIND: gateway.REPLAY_KIND,
    }
    kind = kind_aliases.get(doc.get("kind", ""))
    if kind is None:
        raise ParseError(f"unknown provider kind '{doc.get('kind')}'")
    return ProviderConfig(
        provider_kind=kind,
        model_id=doc["model"],
        endpoint_url=doc.get("endpoint"),
        credential_ref=doc.get("credential"),
        temperature=float(doc.get("temperature", 0.0)),
        max_output_tokens=int(doc.get("maxOutputTokens", 4096)),
        timeout_s=float(doc.get("timeout", 60.0)),
        max_retries=int(doc.get("maxRetries", 2)),
        fixtures_path=doc.get("fixtures"),
    )


def load_run_config(path: str | Path) -> RunConfig:
    """Read a run config JSON file."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read run config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"run config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("run config must be a JSON object")
    try:
        return RunConfig(
            architecture_paths=tuple(doc["architectures"]),
            providers=tuple(_provider_from_doc(p) for p in doc["providers"]),
            strategies=tuple(Strategy.from_label(s) for s in doc["strategies"]),
            output_dir=doc["outputDir"],
            catalog_path=doc.get("catalog"),
            shots=int(doc.get("shots", 3)),
            include_operations=bool(doc.get("includeOperations", True)),
            strict_deployment=bool(doc.get("strictDeployment", False)),
            lenient=bool(doc.get("lenient", False)),
            parallelism=int(doc.get("parallelism", 4)),
        )
    except KeyError as exc:
        raise ParseError(f"run config is missing required key {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"invalid run config: {exc}") from exc


@dataclass
class CellResult:
    case_study: str
    provider_kind: str
    model_id: str
    strategy: Strategy
    status: str = "ok"
    error: str | None = None
    request_key: str | None = None
    artifacts: dict[str, str] = field(default_factory=dict)
    digests: dict[str, str] = field(default_factory=dict)
    reports: list[ValidationReport] = field(default_factory=list)


def _sanitize(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", label)


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _run_digest(config: RunConfig, architecture_bytes: dict[str, bytes]) -> str:
    basis = {
        "architectures": {
            name: _sha256_bytes(data) for name, data in sorted(architecture_bytes.items())
        },
        "providers": [
            {"kind": p.provider_kind, "model": p.model_id, "temperature": p.temperature}
            for p in config.providers
        ],
        "strategies": [s.value for s in config.strategies],
        "catalog": config.catalog_path or "",
        "shots": config.shots,
        "includeOperations": config.include_operations,
        "strictDeployment": config.strict_deployment,
    }
    encoded = json.dumps(basis, sort_keys=True).encode("utf-8")
    return _sha256_bytes(encoded)[:12]


def _write_artifact(cell_dir: Path, name: str, content: str, cell: CellResult, run_dir: Path) -> None:
    path = cell_dir / name
    path.write_text(content, encoding="utf-8")
    cell.artifacts[name] = str(path.relative_to(run_dir))
    cell.digests[name] = _sha256_bytes(content.encode("utf-8"))


def _execute_cell(
    cell: CellResult,
    model: ArchitectureModel,
    provider: ProviderConfig,
    strategy: Strategy,
    config: RunConfig,
    catalog: Sequence[CatalogEntry],
    run_dir: Path,
    transport: Transport | None,
) -> None:
    cell_dir = run_dir / "cells" / _sanitize(
        f"{model.name}__{provider.provider_kind}__{provider.model_id}__{strategy.value}"
    )
    cell_dir.mkdir(parents=True, exist_ok=True)
    view = serialize_security_view(model, include_operations=config.include_operations)
    _write_artifact(cell_dir, "view.txt", view.full_text, cell, run_dir)

    exemplars = default_exemplars(strategy, shots=config.shots)
    bundle = build_prompt(view, strategy, list(catalog), exemplars, catalog=catalog)
    prompt_doc = {
        "strategy": strategy.value,
        "targetWeaknesses": list(bundle.target_weaknesses),
        "systemMessage": bundle.system_message,
        "userMessage": bundle.user_message,
    }
    _write_artifact(
        cell_dir, "prompt.json", json.dumps(prompt_doc, indent=2) + "\n", cell, run_dir
    )

    record = gateway.generate(bundle, provider, case_study=model.name, transport=transport)
    cell.request_key = record.request_key
    record_doc = {
        "requestKey": record.request_key,
        "promptSha256": record.prompt_sha256,
        "rawResponse": record.raw_response,
        "latencyMs": record.latency_ms,
        "timestamp": record.timestamp,
    }
    _write_artifact(
        cell_dir, "generation.json", json.dumps(record_doc, indent=2) + "\n", cell, run_dir
    )

    value = extract_json(
        record.raw_response, take_last=strategy is Strategy.CHAIN_OF_THOUGHT
    )
    batch = as_batch(value)
    _write_artifact(cell_dir, "batch.json", json.dumps(batch, indent=2) + "\n", cell, run_dir)

    reports = validate_batch(
        batch, model, catalog, strict_deployment=config.strict_deployment
    )
    cell.reports = reports
    reports_doc = [report.to_dict() for report in reports]
    _write_artifact(
        cell_dir, "reports.json", json.dumps(reports_doc, indent=2) + "\n", cell, run_dir
    )


def run_pipeline(config: RunConfig, *, transport: Transport | None = None) -> Path:
    """Execute the full matrix and return the created run directory.

    Cells run concurrently up to config.parallelism; one cell's failure is
    recorded in the manifest and does not abort the others. Results are
    deterministic at any parallelism level.
    """
    architecture_bytes = {path: Path(path).read_bytes() for path in config.architecture_paths}
    models = [
        load_architecture(data, lenient=config.lenient)
        for data in architecture_bytes.values()
    ]
    catalog = (
        load_catalog(config.catalog_path) if config.catalog_path else allowed_weaknesses()
    )

    digest = _run_digest(config, architecture_bytes)
    base = Path(config.output_dir)
    run_dir = base / f"run-{digest}"
    suffix = 1
    while run_dir.exists():
        suffix += 1
        run_dir = base / f"run-{digest}-{suffix}"
    run_dir.mkdir(parents=True)

    cells: list[tuple[CellResult, ArchitectureModel, ProviderConfig, Strategy]] = []
    for model in models:
        for provider in config.providers:
            for strategy in config.strategies:
                cells.append(
                    (
                        CellResult(
                            case_study=model.name,
                            provider_kind=provider.provider_kind,
                            model_id=provider.model_id,
                            strategy=strategy,
                        ),
                        model,
                        provider,
                        strategy,
                    )
                )

    def work(item: tuple[CellResult, ArchitectureModel, ProviderConfig, Strategy]) -> None:
        cell, model, provider, strategy = item
        try:
            _execute_cell(cell, model, provider, strategy, config, catalog, run_dir, transport)
        except AptcError as exc:
            cell.status = "error"
            cell.error = f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        list(pool.map(work, cells))

    manifest = {
        "runId": f"run-{digest}",
        "createdAt": datetime.now(timezone.utc).isoformat(),
        "digest": digest,
        "cells": [
            {
                "caseStudy": cell.case_study,
                "provider": cell.provider_kind,
                "model": cell.model_id,
                "strategy": cell.strategy.value,
                "status": cell.status,
                "error": cell.error,
                "requestKey": cell.request_key,
                "artifacts": cell.artifacts,
                "digests": cell.digests,
                "correctnessAuto": {
                    "pass": sum(1 for r in cell.reports if r.correctness_auto),
                    "fail": sum(1 for r in cell.reports if not r.correctness_auto),
                },
            }
            for cell, _, _, _ in sorted(
                cells,
                key=lambda item: (item[0].case_study, item[0].model_id, item[0].strategy.value),
            )
        ],
    }
    (run_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return run_dir


def run_has_validation_failures(run_dir: Path) -> bool:
    manifest = json.loads((run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    for cell in manifest["cells"]:
        if cell["status"] != "ok" or cell["correctnessAuto"]["fail"]:
            return True
    return False
