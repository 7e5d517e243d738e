"""Constrained prompt construction for zero-, one-, and few-shot generation.

The wording ships in a versioned template file with named slots; the system
message carries the task, the output constraints, and the full JSON schema,
while the user message carries optional exemplars followed by the serialized
architecture, byte-for-byte unmodified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .aptc import aptc_schema_text, parse_aptc
from .catalog import CatalogEntry, allowed_weaknesses
from .errors import ExemplarArityError, UnknownWeakness
from .serializer import SecurityView

TEMPLATE_RESOURCE = "data/prompt_template.json"
EXEMPLARS_RESOURCE = "data/exemplars.json"


class Strategy(Enum):
    ZERO_SHOT = "zero-shot"
    ONE_SHOT = "one-shot"
    FEW_SHOT = "few-shot"
    CHAIN_OF_THOUGHT = "chain-of-thought"

    @classmethod
    def from_label(cls, label: str) -> "Strategy":
        aliases = {
            "zero": cls.ZERO_SHOT,
            "one": cls.ONE_SHOT,
            "few": cls.FEW_SHOT,
            "cot": cls.CHAIN_OF_THOUGHT,
        }
        if label in aliases:
            return aliases[label]
        for strategy in cls:
            if strategy.value == label:
                return strategy
        raise ValueError(f"unknown prompting strategy '{label}'")


@dataclass(frozen=True)
class Exemplar:
    label: str
    document: dict

    def __post_init__(self):
        parse_aptc(self.document)


@dataclass(frozen=True)
class PromptBundle:
    system_message: str
    user_message: str
    strategy: Strategy
    exemplars: tuple[Exemplar, ...]
    target_weaknesses: tuple[str, ...]
    architecture_text: str


@lru_cache(maxsize=1)
def _template() -> dict:
    text = resources.files("aptcgen").joinpath(TEMPLATE_RESOURCE).read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def _bundled_exemplars() -> tuple[Exemplar, ...]:
    text = resources.files("aptcgen").joinpath(EXEMPLARS_RESOURCE).read_text(encoding="utf-8")
    return tuple(Exemplar(label=e["label"], document=e["document"]) for e in json.loads(text))


def default_exemplars(strategy: Strategy, shots: int = 3) -> tuple[Exemplar, ...]:
    """Bundled exemplars for a strategy: none, one, or `shots` of them.

    The exemplars come from a synthetic toy architecture that shares no
    identifier with any bundled case study, so prompts built from them do
    not leak case-study names.
    """
    pool = _bundled_exemplars()
    if strategy in (Strategy.ZERO_SHOT, Strategy.CHAIN_OF_THOUGHT):
        return ()
    if strategy is Strategy.ONE_SHOT:
        return pool[:1]
    if shots < 2:
        raise ExemplarArityError("few-shot prompting needs at least 2 exemplars")
    if shots > len(pool):
        raise ExemplarArityError(
            f"only {len(pool)} bundled exemplars are available, {shots} requested"
        )
    return pool[:shots]


def _check_arity(strategy: Strategy, count: int) -> None:
    bounds = {
        Strategy.ZERO_SHOT: (0, 0, "exactly 0"),
        Strategy.ONE_SHOT: (1, 1, "exactly 1"),
        Strategy.FEW_SHOT: (2, None, "at least 2"),
    }
    low, high, wording = bounds[strategy]
    if count < low or (high is not None and count > high):
        raise ExemplarArityError(
            f"{strategy.value} prompting requires {wording} exemplars, got {count}"
        )


def format_weakness_list(ids: Sequence[str]) -> str:
    if len(ids) == 1:
        return ids[0]
    if len(ids) == 2:
        return f"{ids[0]} and {ids[1]}"
    return ", ".join(ids[:-1]) + f", and {ids[-1]}"


def build_prompt(
    view: SecurityView,
    strategy: Strategy,
    weaknesses: Sequence[CatalogEntry],
    exemplars: Sequence[Exemplar],
    *,
    catalog: Sequence[CatalogEntry] | None = None,
) -> PromptBundle:
    """Compose the system and user messages for one generation request.

    Deterministic: identical inputs produce byte-identical messages.
    """
    if strategy is not Strategy.CHAIN_OF_THOUGHT:
        _check_arity(strategy, len(exemplars))
    if not weaknesses:
        raise UnknownWeakness("at least one target weakness is required")
    allowed_ids = {entry.id for entry in (catalog if catalog is not None else allowed_weaknesses())}
    for entry in weaknesses:
        if entry.id not in allowed_ids:
            raise UnknownWeakness(f"weakness '{entry.id}' is not in the active catalog")

    template = _template()
    weakness_list = format_weakness_list([entry.id for entry in weaknesses])
    system_parts = [
        template["systemRole"],
        "",
        template["taskDescription"].format(weakness_list=weakness_list),
        "",
        template["outputFormat"],
        "",
        "Constraints:",
    ]
    system_parts += [f"{i}. {c}" for i, c in enumerate(template["constraints"], start=1)]
    system_parts += ["", template["schemaIntro"], aptc_schema_text().rstrip("\n")]
    if strategy is Strategy.CHAIN_OF_THOUGHT:
        system_parts += [
            "",
            template["chainOfThoughtInstruction"],
            template["chainOfThoughtFinal"],
        ]
    system_message = "\n".join(system_parts)

    user_parts: list[str] = []
    if exemplars:
        user_parts.append(template["exemplarIntro"])
        for i, exemplar in enumerate(exemplars, start=1):
            user_parts.append("")
            user_parts.append(template["exemplarLabel"].format(index=i, label=exemplar.label))
            user_parts.append(json.dumps(exemplar.document, indent=2))
        user_parts.append("")
    user_parts.append(template["architectureIntro"])
    user_parts.append("")
    user_message = "\n".join(user_parts) + "\n" + view.full_text

    return PromptBundle(
        system_message=system_message,
        user_message=user_message,
        strategy=strategy,
        exemplars=tuple(exemplars),
        target_weaknesses=tuple(entry.id for entry in weaknesses),
        architecture_text=view.full_text,
    )
