"""Command-line interface: every pipeline stage as a subcommand.

Exit codes: 0 on success, 1 on usage or I/O errors, 2 when validation
failures are present in the processed batch or run.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from . import evaluation, gateway, pipeline
from .aptc import as_batch, normalize_weakness_id
from .archmodel import load_architecture
from .catalog import allowed_weaknesses, load_catalog
from .errors import AptcError, MalformedWeaknessId
from .gateway import ProviderConfig, extract_json
from .prompting import Strategy, build_prompt, default_exemplars
from .serializer import serialize_security_view
from .validation import summarize_reports, validate_batch


class _ExitCodeGroup(click.Group):
    """Exit 1 on usage and I/O problems; 2 stays reserved for validation failures."""

    def main(self, *args, standalone_mode=True, **kwargs):
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.ClickException as exc:
            exc.show()
            sys.exit(1)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)


def _fail_on_error(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except AptcError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except json.JSONDecodeError as exc:
            click.echo(f"error: invalid JSON input: {exc}", err=True)
            sys.exit(1)
        except BrokenPipeError:
            # Downstream reader closed the pipe (e.g. piped into head).
            devnull = os.open(os.devnull, os.O_WRONLY)
            os.dup2(devnull, sys.stdout.fileno())
            sys.exit(1)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _load_catalog_option(path: str | None):
    return load_catalog(path) if path else allowed_weaknesses()


@click.group(cls=_ExitCodeGroup)
def main() -> None:
    """Derive, validate, and score abstract penetration test cases."""


@main.command()
@click.argument("architecture", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write to a file instead of stdout.")
@click.option("--include-operations/--no-include-operations", default=True, show_default=True)
@click.option("--lenient", is_flag=True, help="Warn on unknown document keys instead of failing.")
@_fail_on_error
def serialize(architecture: str, out: str | None, include_operations: bool, lenient: bool) -> None:
    """Print the security-analysis text view of an architecture."""
    model = load_architecture(architecture, lenient=lenient)
    view = serialize_security_view(model, include_operations=include_operations)
    _write_output(view.full_text, out)


@main.group()
def catalog() -> None:
    """Inspect the allowed-weakness catalog."""


@catalog.command("list")
@click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), default=None)
@_fail_on_error
def catalog_list(catalog_path: str | None) -> None:
    """Print the catalog entries in generation order."""
    for entry in _load_catalog_option(catalog_path):
        click.echo(f"{entry.id}  {entry.name}")
        if entry.summary:
            click.echo(f"    {entry.summary}")


@main.command()
@click.option("--arch", "architecture", required=True, type=click.Path(dir_okay=False))
@click.option("--strategy", default="zero", show_default=True, help="zero | one | few | cot")
@click.option("--provider", "provider_kind", default="replay", show_default=True, help="openai | gemini | replay")
@click.option("--model", "model_id", required=True, help="Model label, e.g. GPT-5.2")
@click.option("--endpoint", default=None, help="Override the provider endpoint URL.")
@click.option("--fixtures", default=None, type=click.Path(file_okay=False), help="Replay fixture directory.")
@click.option("--record", is_flag=True, help="Record the live response into --fixtures.")
@click.option("--shots", default=3, show_default=True, help="Exemplar count for few-shot prompting.")
@click.option("--case-study", default=None, help="Case-study label; defaults to the model name.")
@click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--lenient", is_flag=True)
@_fail_on_error
def generate(
    architecture: str,
    strategy: str,
    provider_kind: str,
    model_id: str,
    endpoint: str | None,
    fixtures: str | None,
    record: bool,
    shots: int,
    case_study: str | None,
    catalog_path: str | None,
    out: str | None,
    lenient: bool,
) -> None:
    """Generate a test-case batch for one architecture."""
    try:
        chosen = Strategy.from_label(strategy)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    kind = {"openai": gateway.OPENAI_KIND, "gemini": gateway.GEMINI_KIND, "replay": gateway.REPLAY_KIND}.get(
        provider_kind, provider_kind
    )
    if kind == gateway.REPLAY_KIND and record:
        click.echo("error: --record requires a live provider", err=True)
        sys.exit(1)
    config = ProviderConfig(
        provider_kind=kind,
        model_id=model_id,
        endpoint_url=endpoint,
        fixtures_path=fixtures,
    )
    entries = _load_catalog_option(catalog_path)
    model = load_architecture(architecture, lenient=lenient)
    view = serialize_security_view(model)
    bundle = build_prompt(view, chosen, list(entries), default_exemplars(chosen, shots=shots), catalog=entries)
    record_obj = gateway.generate(bundle, config, case_study=case_study or model.name)
    if record and fixtures:
        gateway.record_fixture(record_obj, fixtures)
    value = extract_json(record_obj.raw_response, take_last=chosen is Strategy.CHAIN_OF_THOUGHT)
    _write_output(json.dumps(as_batch(value), indent=2) + "\n", out)


@main.command()
@click.option("--arch", "architecture", required=True, type=click.Path(dir_okay=False))
@click.option("--aptcs", required=True, type=click.Path(dir_okay=False), help="JSON batch file.")
@click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), default=None)
@click.option("--strict-deployment", is_flag=True, help="Also require deployment-level connectivity.")
@click.option("--lenient", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_on_error
def validate(
    architecture: str,
    aptcs: str,
    catalog_path: str | None,
    strict_deployment: bool,
    lenient: bool,
    out: str | None,
) -> None:
    """Validate a test-case batch against an architecture."""
    model = load_architecture(architecture, lenient=lenient)
    try:
        batch = as_batch(json.loads(Path(aptcs).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        click.echo(f"error: batch file is not valid JSON: {exc}", err=True)
        sys.exit(1)
    entries = _load_catalog_option(catalog_path)
    reports = validate_batch(batch, model, entries, strict_deployment=strict_deployment)
    _write_output(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", out)
    click.echo(summarize_reports(reports), err=True)
    if any(not report.correctness_auto for report in reports):
        sys.exit(2)


@main.command()
@click.option("--scores", "scores_path", type=click.Path(dir_okay=False), default=None,
              help="Score CSV; defaults to the bundled fixture.")
@click.option("--format", "fmt", default="md", show_default=True, type=click.Choice(["md", "json", "csv"]))
@click.option("--unify", default="and", show_default=True, type=click.Choice(["and", "or", "majority"]))
@click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_on_error
def report(scores_path: str | None, fmt: str, unify: str, catalog_path: str | None, out: str | None) -> None:
    """Aggregate expert scores into the summary metrics table."""
    entries = _load_catalog_option(catalog_path)
    path = Path(scores_path) if scores_path else evaluation.bundled_scores_path()
    scores = evaluation.ingest_scores(path, catalog=entries)
    unified = evaluation.unify_scores(scores, rule=unify)
    table = evaluation.aggregate(unified, catalog=entries)
    rendered = evaluation.render_table(table, "markdown" if fmt == "md" else fmt)
    _write_output(rendered, out)


@main.command()
@click.option("--arch", "architecture", required=True, type=click.Path(dir_okay=False))
@click.option("--aptcs", required=True, type=click.Path(dir_okay=False))
@click.option("--scores", "scores_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rater", required=True)
@click.option("--method", default="expert", show_default=True, type=click.Choice(list(evaluation.METHODS)))
@click.option("--model-label", required=True, help="Generating model label, e.g. GPT-5.2")
@click.option("--strategy", default="zero-shot", show_default=True)
@click.option("--case-study", default=None, help="Defaults to the architecture model name.")
@click.option("--catalog", "catalog_path", type=click.Path(dir_okay=False), default=None)
@_fail_on_error
def score(
    architecture: str,
    aptcs: str,
    scores_path: str,
    rater: str,
    method: str,
    model_label: str,
    strategy: str,
    case_study: str | None,
    catalog_path: str | None,
) -> None:
    """Walk through a batch interactively and append binary scores."""
    try:
        chosen = Strategy.from_label(strategy)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    model = load_architecture(architecture)
    entries = _load_catalog_option(catalog_path)
    batch = as_batch(json.loads(Path(aptcs).read_text(encoding="utf-8")))
    reports = validate_batch(batch, model, entries)
    view = serialize_security_view(model)
    case_label = case_study or model.name

    click.echo(view.full_text)
    rows: list[list[str]] = []
    for document, rep in zip(batch, reports):
        click.echo("-" * 60)
        click.echo(json.dumps(document, indent=2))
        click.echo("")
        click.echo(summarize_reports([rep]))
        weakness = document.get("CAWE") if isinstance(document, dict) else None
        if isinstance(weakness, list):
            weakness = weakness[0] if weakness else None
        if not isinstance(weakness, str):
            click.echo("skipping document without a weakness id", err=True)
            continue
        try:
            weakness = normalize_weakness_id(weakness)
        except MalformedWeaknessId:
            click.echo(f"skipping document with malformed weakness id '{weakness}'", err=True)
            continue
        correctness = click.prompt("correctness (0/1)", type=click.IntRange(0, 1))
        usefulness = click.prompt("usefulness (0/1)", type=click.IntRange(0, 1))
        rows.append(
            [
                model_label,
                chosen.value,
                case_label,
                weakness,
                str(correctness),
                str(usefulness),
                rater,
                method,
            ]
        )
    if rows:
        evaluation.append_score_rows(scores_path, rows)
        click.echo(f"appended {len(rows)} score rows to {scores_path}", err=True)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@_fail_on_error
def run(config_path: str) -> None:
    """Execute the full (architecture x provider x strategy) matrix."""
    config = pipeline.load_run_config(config_path)
    run_dir = pipeline.run_pipeline(config)
    click.echo(str(run_dir))
    if pipeline.run_has_validation_failures(run_dir):
        sys.exit(2)


if __name__ == "__main__":
    main()
