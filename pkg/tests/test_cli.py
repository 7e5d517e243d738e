"""CLI subcommands and exit-code contract."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from aptcgen.cli import main

from conftest import (
    BANK_PATH,
    CORRECTED_APTC_PATH,
    EXAMPLE_APTC_PATH,
    MAINTENANCE_PATH,
    POWERGRID_PATH,
    REPLAY_DIR,
)


@pytest.fixture
def runner():
    return CliRunner()


def test_serialize_to_stdout(runner):
    result = runner.invoke(main, ["serialize", str(MAINTENANCE_PATH)])
    assert result.exit_code == 0
    assert "ProductStorage" in result.output
    assert "## Overview" in result.output


def test_serialize_to_file(runner, tmp_path):
    out = tmp_path / "view.txt"
    result = runner.invoke(main, ["serialize", str(MAINTENANCE_PATH), "--out", str(out)])
    assert result.exit_code == 0
    assert "LocalNetwork" in out.read_text(encoding="utf-8")


def test_serialize_missing_file_exits_1(runner):
    result = runner.invoke(main, ["serialize", "no-such-file.json"])
    assert result.exit_code == 1


def test_unknown_option_exits_1(runner):
    result = runner.invoke(main, ["serialize", "--bogus"])
    assert result.exit_code == 1


def test_catalog_list(runner):
    result = runner.invoke(main, ["catalog", "list"])
    assert result.exit_code == 0
    assert "CWE-863  Incorrect Authorization" in result.output
    assert result.output.index("CWE-284") < result.output.index("CWE-272")


def test_validate_flags_example_batch(runner, tmp_path, example_aptc):
    batch = tmp_path / "batch.json"
    batch.write_text(json.dumps([example_aptc]), encoding="utf-8")
    result = runner.invoke(
        main, ["validate", "--arch", str(MAINTENANCE_PATH), "--aptcs", str(batch)]
    )
    assert result.exit_code == 2
    assert "TerminalComponent" in result.output


def test_validate_passes_corrected_batch(runner, tmp_path, corrected_aptc):
    batch = tmp_path / "batch.json"
    batch.write_text(json.dumps([corrected_aptc]), encoding="utf-8")
    out = tmp_path / "reports.json"
    result = runner.invoke(
        main,
        ["validate", "--arch", str(MAINTENANCE_PATH), "--aptcs", str(batch), "--out", str(out)],
    )
    assert result.exit_code == 0
    reports = json.loads(out.read_text(encoding="utf-8"))
    assert reports[0]["correctnessAuto"] is True


def test_validate_bad_batch_json_exits_1(runner, tmp_path):
    batch = tmp_path / "batch.json"
    batch.write_text("{oops", encoding="utf-8")
    result = runner.invoke(
        main, ["validate", "--arch", str(MAINTENANCE_PATH), "--aptcs", str(batch)]
    )
    assert result.exit_code == 1


def test_report_reproduces_expected_metrics(runner):
    result = runner.invoke(main, ["report", "--format", "md"])
    assert result.exit_code == 0
    assert "93.3%" in result.output
    assert "| GPT-5.2 | Usefulness | 5/5 | 4/5 | 4/5 | 13/15 | 86.7% |" in result.output


def test_report_json_format(runner):
    result = runner.invoke(main, ["report", "--format", "json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["totalDenominator"] == 15


def test_generate_with_replay_provider(runner, tmp_path):
    out = tmp_path / "batch.json"
    result = runner.invoke(
        main,
        [
            "generate",
            "--arch", str(MAINTENANCE_PATH),
            "--strategy", "zero",
            "--provider", "replay",
            "--model", "GPT-5.2",
            "--fixtures", str(REPLAY_DIR),
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    batch = json.loads(out.read_text(encoding="utf-8"))
    assert len(batch) == 5
    assert {doc["CAWE"] for doc in batch} >= {"CWE-284", "CWE-863"}


def test_generate_record_with_replay_rejected(runner):
    result = runner.invoke(
        main,
        [
            "generate",
            "--arch", str(MAINTENANCE_PATH),
            "--model", "GPT-5.2",
            "--fixtures", str(REPLAY_DIR),
            "--record",
        ],
    )
    assert result.exit_code == 1
    assert "--record requires a live provider" in result.output


def test_generate_missing_fixture_exits_1(runner, tmp_path):
    result = runner.invoke(
        main,
        [
            "generate",
            "--arch", str(MAINTENANCE_PATH),
            "--model", "NoSuchModel",
            "--fixtures", str(tmp_path),
        ],
    )
    assert result.exit_code == 1
    assert "no recorded fixture" in result.output


def _run_config(tmp_path, parallelism=4):
    return {
        "architectures": [str(MAINTENANCE_PATH), str(POWERGRID_PATH), str(BANK_PATH)],
        "providers": [
            {"kind": "replay", "model": "GPT-5.2", "fixtures": str(REPLAY_DIR)},
            {"kind": "replay", "model": "Gemini-3-Pro", "fixtures": str(REPLAY_DIR)},
        ],
        "strategies": ["zero-shot", "one-shot", "few-shot"],
        "outputDir": str(tmp_path / "runs"),
        "parallelism": parallelism,
    }


def test_run_executes_matrix(runner, tmp_path):
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(_run_config(tmp_path)), encoding="utf-8")
    result = runner.invoke(main, ["run", "--config", str(config_path)])
    # The recorded fixtures deliberately contain flawed cells.
    assert result.exit_code == 2, result.output
    run_dir = result.output.strip().splitlines()[0]
    manifest = json.loads((tmp_path / "runs").joinpath(run_dir.split("/")[-1], "manifest.json").read_text())
    assert len(manifest["cells"]) == 18
    assert all(cell["status"] == "ok" for cell in manifest["cells"])


def test_score_interactive_appends_rows(runner, tmp_path, corrected_aptc):
    from aptcgen.evaluation import ingest_scores

    second_doc = {
        "CAWE": "CWE-272",
        "violatedSecurityProperty": "Integrity",
        "Threat": "The machine controller keeps elevated storage credentials after start-up.",
        "AttackVector": {"Name": "Retained Credentials", "EntryPoint": "Machine", "Asset": "Machine"},
    }
    batch = tmp_path / "batch.json"
    batch.write_text(json.dumps([corrected_aptc, second_doc]), encoding="utf-8")
    scores = tmp_path / "scores.csv"
    result = runner.invoke(
        main,
        [
            "score",
            "--arch", str(MAINTENANCE_PATH),
            "--aptcs", str(batch),
            "--scores", str(scores),
            "--rater", "tester",
            "--model-label", "GPT-5.2",
            "--strategy", "zero-shot",
        ],
        input="1\n1\n0\n1\n",
    )
    assert result.exit_code == 0, result.output
    lines = scores.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == 3  # header + 2 rows
    assert lines[1].startswith("GPT-5.2,zero-shot,Maintenance,CWE-863,1,1,tester,expert")
    ingested = ingest_scores(scores)
    assert [(s.ref.weakness_id, s.correctness, s.usefulness) for s in ingested] == [
        ("CWE-863", 1, 1),
        ("CWE-272", 0, 1),
    ]


def test_help_exits_0(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("serialize", "generate", "validate", "catalog", "score", "report", "run"):
        assert command in result.output
