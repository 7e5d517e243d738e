#!/usr/bin/env python3
"""Regenerate the bundled score CSV and replay fixture store.

Replay fixtures are keyed by the request hash, which covers the prompt
bytes; rerun this script whenever the prompt template, the schema file,
the serializer output, or the bundled architectures change.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

from aptcgen import gateway
from aptcgen.archmodel import load_architecture
from aptcgen.catalog import allowed_weaknesses
from aptcgen.prompting import Strategy, build_prompt, default_exemplars
from aptcgen.serializer import serialize_security_view

DATA_DIR = Path(str(resources.files("aptcgen").joinpath("data")))

MODELS = ("GPT-5.2", "Gemini-3-Pro")
STRATEGIES = (Strategy.ZERO_SHOT, Strategy.ONE_SHOT, Strategy.FEW_SHOT)
CASE_STUDIES = ("Maintenance", "PowerGrid", "Bank")
ARCH_FILES = {
    "Maintenance": "architectures/maintenance.json",
    "PowerGrid": "architectures/powergrid.json",
    "Bank": "architectures/bank.json",
}

# Per-case-study counts out of 5 for (correctness, usefulness), reproducing
# the reference evaluation results the bundled score file encodes.
TABLE_COUNTS = {
    ("GPT-5.2", "zero-shot"): {"Maintenance": (2, 5), "PowerGrid": (3, 4), "Bank": (4, 4)},
    ("Gemini-3-Pro", "zero-shot"): {"Maintenance": (4, 3), "PowerGrid": (2, 2), "Bank": (4, 5)},
    ("GPT-5.2", "one-shot"): {"Maintenance": (4, 4), "PowerGrid": (3, 3), "Bank": (4, 4)},
    ("Gemini-3-Pro", "one-shot"): {"Maintenance": (5, 5), "PowerGrid": (4, 5), "Bank": (4, 4)},
    ("GPT-5.2", "few-shot"): {"Maintenance": (4, 4), "PowerGrid": (4, 4), "Bank": (3, 4)},
    ("Gemini-3-Pro", "few-shot"): {"Maintenance": (2, 2), "PowerGrid": (2, 5), "Bank": (2, 3)},
}

# Spots where the two raters disagree on an ultimately rejected bit: the
# expert said 1, the reviewed LLM judgment said 0. Under the AND rule the
# unified bit is 0 (matching the table); under OR it would flip to 1.
DISAGREEMENTS = {
    ("GPT-5.2", "zero-shot", "Maintenance", "CWE-862", "correctness"),
    ("Gemini-3-Pro", "few-shot", "Maintenance", "CWE-862", "correctness"),
    ("Gemini-3-Pro", "zero-shot", "PowerGrid", "CWE-862", "usefulness"),
}

RATERS = (("expert-1", "expert"), ("llm-review-1", "llm-assisted"))


def write_scores(path: Path) -> None:
    weakness_ids = [e.id for e in allowed_weaknesses()]
    rows = []
    for model in MODELS:
        for strategy in STRATEGIES:
            counts = TABLE_COUNTS[(model, strategy.value)]
            for case in CASE_STUDIES:
                k_correct, k_useful = counts[case]
                for index, weakness in enumerate(weakness_ids):
                    base_correct = 1 if index < k_correct else 0
                    base_useful = 1 if index < k_useful else 0
                    for rater, method in RATERS:
                        correct, useful = base_correct, base_useful
                        if rater == "expert-1":
                            if (model, strategy.value, case, weakness, "correctness") in DISAGREEMENTS:
                                correct = 1
                            if (model, strategy.value, case, weakness, "usefulness") in DISAGREEMENTS:
                                useful = 1
                        rows.append(
                            [model, strategy.value, case, weakness, correct, useful, rater, method]
                        )
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["model", "strategy", "case_study", "weakness",
             "metric_correctness", "metric_usefulness", "rater", "method"]
        )
        writer.writerows(rows)
    print(f"wrote {len(rows)} score rows to {path}")


def maintenance_batch() -> list[dict]:
    return [
        {
            "CAWE": "CWE-284",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "The maintenance interface of the machine is exposed to any terminal user without an access-control decision.",
            "AttackVector": {
                "Name": "Unrestricted Maintenance Interface Access",
                "Connector": "MachineTerminal",
                "EntryPoint": "Terminal",
                "Asset": "Machine",
            },
        },
        {
            "CAWE": "CWE-285",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "Log read requests from the terminal are authorized against the technician role only, not against the machine state.",
            "AttackVector": {
                "Name": "Role-Only Log Read Authorization",
                "Connector": "TerminalProductionData",
                "EntryPoint": "Terminal",
                "Asset": "ProductionDataStorage",
            },
        },
        {
            "CAWE": "CWE-862",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "Product data fetches issued by the machine carry no authorization check at the product storage boundary.",
            "AttackVector": {
                "Name": "Unchecked Product Data Retrieval",
                "Connector": "MachineProductStorage",
                "EntryPoint": "Machine",
                "Asset": "ProductStorage",
            },
        },
        {
            "CAWE": "CWE-863",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "Authorization logic permits log access based on technician role alone, ignoring the required machine-failure state.",
            "AttackVector": {
                "Name": "Incorrect Authorization Logic Execution",
                "Connector": "TerminalProductionData",
                "EntryPoint": "Terminal",
                "Asset": "ProductionDataStorage",
            },
        },
        {
            "CAWE": "CWE-272",
            "violatedSecurityProperty": "Integrity",
            "Threat": "The machine controller keeps elevated storage credentials after start-up, so a fault in routine operation can rewrite stored logs.",
            "AttackVector": {
                "Name": "Retained Elevated Storage Credentials",
                "EntryPoint": "Machine",
                "Asset": "Machine",
            },
        },
    ]


def powergrid_batch() -> list[dict]:
    return [
        {
            "CAWE": "CWE-284",
            "violatedSecurityProperty": ["Confidentiality", "Integrity"],
            "Threat": "Corporate call-center hosts can open remote sessions into the ICS segment without per-destination access control.",
            "AttackVector": {
                "Name": "Unrestricted Corporate To ICS Session",
                "Connector": "CorporateRemoteAccess",
                "EntryPoint": "CallCenterApp",
                "Asset": "VpnGateway",
            },
        },
        {
            "CAWE": "CWE-285",
            "violatedSecurityProperty": "Integrity",
            "Threat": "Operator console commands forwarded over the VPN are authorized by session origin instead of operator entitlement.",
            "AttackVector": {
                "Name": "Origin-Based Console Authorization",
                "Connector": "VpnOperatorBridge",
                "EntryPoint": "VpnGateway",
                "Asset": "DmsClient",
            },
        },
        {
            "CAWE": "CWE-862",
            "violatedSecurityProperty": "Integrity",
            "Threat": "Switching orders submitted from the DMS client reach the DMS server without any authorization gate.",
            "AttackVector": {
                "Name": "Unchecked Switching Order Submission",
                "Connector": "DmsClientServer",
                "EntryPoint": "DmsClient",
                "Asset": "DmsServer",
            },
        },
        {
            "CAWE": "CWE-863",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "Directory lookups performed for the call-center application authorize on group name matching rather than account entitlement.",
            "AttackVector": {
                "Name": "Incorrect Directory Entitlement Check",
                "Connector": "CallCenterAuth",
                "EntryPoint": "CallCenterApp",
                "Asset": "DomainController",
            },
        },
        {
            "CAWE": "CWE-272",
            "violatedSecurityProperty": "Integrity",
            "Threat": "The DMS server retains breaker-actuation privileges while serving telemetry reads, so a telemetry fault can trip breakers.",
            "AttackVector": {
                "Name": "Privileged Telemetry Handling",
                "EntryPoint": "DmsServer",
                "Asset": "DmsServer",
            },
        },
    ]


def bank_batch() -> list[dict]:
    return [
        {
            "CAWE": "CWE-284",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "Any branch workstation can invoke teller operations on the core service without branch-level access restriction.",
            "AttackVector": {
                "Name": "Unrestricted Branch Teller Access",
                "Connector": "AsiaBranchAccess",
                "EntryPoint": "BranchClientAsia",
                "Asset": "CoreBankingService",
            },
        },
        {
            "CAWE": "CWE-285",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "Account reads are authorized on staff role alone, ignoring the customer-type and location attributes the policy requires.",
            "AttackVector": {
                "Name": "Attribute-Blind Account Authorization",
                "Connector": "AccountPersistence",
                "EntryPoint": "CoreBankingService",
                "Asset": "AccountDatabase",
            },
        },
        {
            "CAWE": "CWE-862",
            "violatedSecurityProperty": "Integrity",
            "Threat": "Transaction postings from US branch clients reach the core service without an authorization decision being requested.",
            "AttackVector": {
                "Name": "Unchecked Transaction Posting",
                "Connector": "UsBranchAccess",
                "EntryPoint": "BranchClientUS",
                "Asset": "CoreBankingService",
            },
        },
        {
            "CAWE": "CWE-863",
            "violatedSecurityProperty": "Confidentiality",
            "Threat": "The policy service evaluates location from the client-supplied branch field, so Asia staff can read US celebrity accounts.",
            "AttackVector": {
                "Name": "Client-Controlled Policy Context",
                "Connector": "PolicyEvaluation",
                "EntryPoint": "CoreBankingService",
                "Asset": "AbacPolicyService",
            },
        },
        {
            "CAWE": "CWE-272",
            "violatedSecurityProperty": "Integrity",
            "Threat": "The core banking service keeps database administrator rights during routine teller sessions instead of dropping them after migration tasks.",
            "AttackVector": {
                "Name": "Retained Administrator Database Rights",
                "EntryPoint": "CoreBankingService",
                "Asset": "CoreBankingService",
            },
        },
    ]


BATCHES = {
    "Maintenance": maintenance_batch,
    "PowerGrid": powergrid_batch,
    "Bank": bank_batch,
}


def apply_flaws(batch: list[dict], model: str, strategy: Strategy, case: str) -> list[dict]:
    """Deterministic imperfections mirroring observed failure modes."""
    if model == "Gemini-3-Pro" and strategy is Strategy.ZERO_SHOT and case == "Maintenance":
        # Invented component name.
        batch[0]["AttackVector"]["Asset"] = "LogArchiveService"
        batch[0]["Threat"] = (
            "Archived machine logs can be browsed from the terminal without an access decision."
        )
    if model == "GPT-5.2" and strategy is Strategy.ZERO_SHOT and case == "PowerGrid":
        # Out-of-set weakness despite the constraint.
        batch[4]["CAWE"] = "CWE-79"
    if model == "Gemini-3-Pro" and strategy is Strategy.ZERO_SHOT and case == "PowerGrid":
        # Property framed implausibly for a missing-authorization weakness.
        batch[2]["violatedSecurityProperty"] = "Availability"
        # Wrong connector for the named endpoints.
        batch[1]["AttackVector"]["Connector"] = "VpnAuth"
    if model == "Gemini-3-Pro" and strategy is Strategy.FEW_SHOT and case == "Bank":
        batch[4]["applicability"] = "uncertain"
        batch[4]["missingInformation"] = (
            "The architecture does not state which component performs privileged schema migrations."
        )
    return batch


def render_response(batch: list[dict], model: str, strategy: Strategy) -> str:
    payload = json.dumps(batch, indent=2)
    if model == "Gemini-3-Pro":
        return f"```json\n{payload}\n```\n"
    return payload + "\n"


def write_replay_fixtures(store: Path) -> None:
    store.mkdir(parents=True, exist_ok=True)
    for stale in store.glob("*.json"):
        stale.unlink()
    catalog = list(allowed_weaknesses())
    count = 0
    for case in CASE_STUDIES:
        arch = load_architecture(DATA_DIR / ARCH_FILES[case])
        view = serialize_security_view(arch)
        for strategy in STRATEGIES:
            exemplars = default_exemplars(strategy)
            bundle = build_prompt(view, strategy, catalog, exemplars)
            for model in MODELS:
                batch = apply_flaws(BATCHES[case](), model, strategy, case)
                raw = render_response(batch, model, strategy)
                key = gateway.request_key(
                    model,
                    strategy,
                    case,
                    bundle.target_weaknesses,
                    bundle.system_message,
                    bundle.user_message,
                )
                record = gateway.GenerationRecord(
                    request_key=key,
                    raw_response=raw,
                    latency_ms=900.0 + 37.0 * count,
                    timestamp="2026-02-01T00:00:00+00:00",
                    prompt_sha256=gateway.prompt_digest(bundle),
                )
                gateway.record_fixture(record, store)
                count += 1
    print(f"wrote {count} replay fixtures to {store}")


def main() -> None:
    write_scores(DATA_DIR / "expert_scores.csv")
    write_replay_fixtures(DATA_DIR / "replay")


if __name__ == "__main__":
    main()
