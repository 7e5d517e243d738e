"""Expert score ingestion and aggregation into the summary metrics table.

Scores are binary correctness/usefulness judgments per generated test case,
keyed by (model label, strategy, case study, weakness). Multiple raters are
unified into one bit per metric (AND by default), then aggregated into
per-case-study counts, totals, and success rates. Success rates use
round-half-up at one decimal.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import warnings
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import IO, Iterable, Sequence

from .aptc import normalize_weakness_id
from .catalog import CatalogEntry, allowed_weaknesses
from .errors import DuplicateScore, MalformedWeaknessId, ScoreFormatError, UnknownLabel
from .prompting import Strategy

SCORE_HEADER = (
    "model",
    "strategy",
    "case_study",
    "weakness",
    "metric_correctness",
    "metric_usefulness",
    "rater",
    "method",
)
METHODS = ("expert", "llm-assisted")
METRICS = ("Correctness", "Usefulness")
DEFAULT_CASE_STUDIES = ("Maintenance", "PowerGrid", "Bank")
_STRATEGY_RENDER_ORDER = tuple(s.value for s in Strategy)

SCORES_RESOURCE = "data/expert_scores.csv"


class CoverageWarning(UserWarning):
    """A metrics row is missing scores; the gaps count as failures."""


@dataclass(frozen=True)
class ScoreRef:
    model_label: str
    strategy: str
    case_study: str
    weakness_id: str


@dataclass(frozen=True)
class ExpertScore:
    ref: ScoreRef
    correctness: int
    usefulness: int
    rater: str
    method: str


@dataclass(frozen=True)
class UnifiedScore:
    ref: ScoreRef
    correctness: int
    usefulness: int


@dataclass(frozen=True)
class MetricsRow:
    model_label: str
    strategy: str
    metric: str
    per_case: tuple[int, ...]
    total: int
    success_rate: str


@dataclass(frozen=True)
class MetricsTable:
    case_studies: tuple[str, ...]
    per_case_denominator: int
    total_denominator: int
    rows: tuple[MetricsRow, ...]


def success_rate(total: int, denominator: int) -> str:
    """Percentage with one decimal, rounded half-up, e.g. '86.7'."""
    if denominator <= 0:
        return "0.0"
    rate = (Decimal(100) * Decimal(total) / Decimal(denominator)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )
    return str(rate)


def bundled_scores_path() -> Path:
    from importlib import resources

    return Path(str(resources.files("aptcgen").joinpath(SCORES_RESOURCE)))


def _parse_bit(value: str, column: str, line: int) -> int:
    if value not in ("0", "1"):
        raise ScoreFormatError(f"line {line}: {column} must be 0 or 1, got '{value}'")
    return int(value)


def ingest_scores(
    source: str | Path | IO[str],
    *,
    catalog: Sequence[CatalogEntry] | None = None,
    case_studies: Sequence[str] = DEFAULT_CASE_STUDIES,
) -> list[ExpertScore]:
    """Read and validate a score CSV file.

    Rejects malformed rows, duplicate (ref, rater) pairs, and labels outside
    the known strategy/case-study/weakness sets.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return []
    if tuple(rows[0]) != SCORE_HEADER:
        raise ScoreFormatError(
            f"bad header: expected {','.join(SCORE_HEADER)}, got {','.join(rows[0])}"
        )
    known_weaknesses = {e.id for e in (catalog if catalog is not None else allowed_weaknesses())}
    known_strategies = {s.value for s in Strategy}
    known_cases = set(case_studies)
    scores: list[ExpertScore] = []
    seen: set[tuple[ScoreRef, str]] = set()
    for line, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(SCORE_HEADER):
            raise ScoreFormatError(f"line {line}: expected {len(SCORE_HEADER)} fields, got {len(row)}")
        model, strategy, case, weakness, correctness, usefulness, rater, method = row
        if not model or not rater:
            raise ScoreFormatError(f"line {line}: model and rater must be non-empty")
        if strategy not in known_strategies:
            raise UnknownLabel(f"line {line}: unknown strategy '{strategy}'")
        if case not in known_cases:
            raise UnknownLabel(f"line {line}: unknown case study '{case}'")
        try:
            weakness_id = normalize_weakness_id(weakness)
        except MalformedWeaknessId as exc:
            raise ScoreFormatError(f"line {line}: {exc}") from exc
        if weakness_id not in known_weaknesses:
            raise UnknownLabel(f"line {line}: weakness '{weakness_id}' is not in the catalog")
        if method not in METHODS:
            raise ScoreFormatError(
                f"line {line}: method must be one of {', '.join(METHODS)}, got '{method}'"
            )
        ref = ScoreRef(model, strategy, case, weakness_id)
        if (ref, rater) in seen:
            raise DuplicateScore(
                f"line {line}: duplicate score for {model}/{strategy}/{case}/{weakness_id} by '{rater}'"
            )
        seen.add((ref, rater))
        scores.append(
            ExpertScore(
                ref=ref,
                correctness=_parse_bit(correctness, "metric_correctness", line),
                usefulness=_parse_bit(usefulness, "metric_usefulness", line),
                rater=rater,
                method=method,
            )
        )
    return scores


def _unify_bits(bits: list[int], rule: str) -> int:
    if rule == "and":
        return int(all(bits))
    if rule == "or":
        return int(any(bits))
    if rule == "majority":
        return int(sum(bits) > len(bits) / 2)
    raise ValueError(f"unknown unification rule '{rule}'")


def unify_scores(scores: Iterable[ExpertScore], rule: str = "and") -> list[UnifiedScore]:
    """Merge all raters and methods into one binary per metric per case.

    The default AND rule is conservative: every rater must approve. Output
    order follows the first appearance of each reference.
    """
    grouped: dict[ScoreRef, list[ExpertScore]] = {}
    order: list[ScoreRef] = []
    for score in scores:
        if score.ref not in grouped:
            grouped[score.ref] = []
            order.append(score.ref)
        grouped[score.ref].append(score)
    unified = []
    for ref in order:
        members = grouped[ref]
        unified.append(
            UnifiedScore(
                ref=ref,
                correctness=_unify_bits([m.correctness for m in members], rule),
                usefulness=_unify_bits([m.usefulness for m in members], rule),
            )
        )
    return unified


def aggregate(
    scores: Sequence[UnifiedScore],
    *,
    case_studies: Sequence[str] = DEFAULT_CASE_STUDIES,
    catalog: Sequence[CatalogEntry] | None = None,
) -> MetricsTable:
    """Fold unified scores into the per-strategy metrics table.

    Missing references count as 0 and raise a CoverageWarning so gaps are
    visible; denominators stay fixed at |catalog| per case study.
    """
    entries = catalog if catalog is not None else allowed_weaknesses()
    weakness_ids = [e.id for e in entries]
    cases = tuple(case_studies)
    by_ref = {s.ref: s for s in scores}

    groups: list[tuple[str, str]] = []
    for score in scores:
        key = (score.ref.model_label, score.ref.strategy)
        if key not in groups:
            groups.append(key)
    groups.sort(key=lambda k: (_strategy_sort_key(k[1]), k[0]))

    rows: list[MetricsRow] = []
    for model, strategy in groups:
        for metric in METRICS:
            per_case: list[int] = []
            for case in cases:
                count = 0
                for weakness_id in weakness_ids:
                    ref = ScoreRef(model, strategy, case, weakness_id)
                    unified = by_ref.get(ref)
                    if unified is None:
                        warnings.warn(
                            f"no score for {model}/{strategy}/{case}/{weakness_id}; counted as 0",
                            CoverageWarning,
                        )
                        continue
                    count += unified.correctness if metric == "Correctness" else unified.usefulness
                per_case.append(count)
            total = sum(per_case)
            rows.append(
                MetricsRow(
                    model_label=model,
                    strategy=strategy,
                    metric=metric,
                    per_case=tuple(per_case),
                    total=total,
                    success_rate=success_rate(total, len(cases) * len(weakness_ids)),
                )
            )
    return MetricsTable(
        case_studies=cases,
        per_case_denominator=len(weakness_ids),
        total_denominator=len(cases) * len(weakness_ids),
        rows=tuple(rows),
    )


def _strategy_sort_key(strategy: str) -> int:
    try:
        return _STRATEGY_RENDER_ORDER.index(strategy)
    except ValueError:
        return len(_STRATEGY_RENDER_ORDER)


def _strategy_heading(strategy: str) -> str:
    return strategy[0].upper() + strategy[1:] + " prompting"


def render_table(table: MetricsTable, fmt: str = "markdown") -> str:
    """Render the table as markdown (grouped by strategy), JSON, or CSV."""
    if fmt in ("markdown", "md"):
        return _render_markdown(table)
    if fmt == "json":
        return json.dumps(table_to_json(table), indent=2) + "\n"
    if fmt == "csv":
        return _render_csv(table)
    raise ValueError(f"unknown render format '{fmt}'")


def _render_markdown(table: MetricsTable) -> str:
    columns = ["Model", "Metric", *table.case_studies, f"Total/{table.total_denominator}", "Success Rate"]
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    current_strategy = None
    for row in table.rows:
        if row.strategy != current_strategy:
            current_strategy = row.strategy
            heading = [f"**{_strategy_heading(row.strategy)}**"] + [""] * (len(columns) - 1)
            lines.append("| " + " | ".join(heading) + " |")
        cells = [row.model_label, row.metric]
        cells += [f"{count}/{table.per_case_denominator}" for count in row.per_case]
        cells.append(f"{row.total}/{table.total_denominator}")
        cells.append(f"{row.success_rate}%")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _render_csv(table: MetricsTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["model", "strategy", "metric", *table.case_studies, "total", "success_rate"])
    for row in table.rows:
        writer.writerow(
            [row.model_label, row.strategy, row.metric, *row.per_case, row.total, row.success_rate]
        )
    return out.getvalue()


def table_to_json(table: MetricsTable) -> dict:
    return {
        "caseStudies": list(table.case_studies),
        "perCaseDenominator": table.per_case_denominator,
        "totalDenominator": table.total_denominator,
        "rows": [
            {
                "model": row.model_label,
                "strategy": row.strategy,
                "metric": row.metric,
                "perCase": list(row.per_case),
                "total": row.total,
                "successRate": row.success_rate,
            }
            for row in table.rows
        ],
    }


def table_from_json(doc: dict) -> MetricsTable:
    return MetricsTable(
        case_studies=tuple(doc["caseStudies"]),
        per_case_denominator=doc["perCaseDenominator"],
        total_denominator=doc["totalDenominator"],
        rows=tuple(
            MetricsRow(
                model_label=row["model"],
                strategy=row["strategy"],
                metric=row["metric"],
                per_case=tuple(row["perCase"]),
                total=row["total"],
                success_rate=row["successRate"],
            )
            for row in doc["rows"]
        ),
    )


def append_score_rows(path: str | Path, rows: Sequence[Sequence[str]]) -> None:
    """Append rows to a score CSV atomically (write temp, rename over).

    Creates the file with its header when it does not exist yet.
    """
    target = Path(path)
    if target.exists():
        existing = target.read_text(encoding="utf-8")
        if existing and not existing.endswith("\n"):
            existing += "\n"
    else:
        existing = ",".join(SCORE_HEADER) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    content = existing + out.getvalue()
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(content)
        os.replace(tmp_name, target)
    finally:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
