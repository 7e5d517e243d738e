"""Shared fixtures and random generators for the test suite."""

from __future__ import annotations

import json
import random
from importlib import resources
from pathlib import Path

import pytest

from aptcgen.archmodel import ArchitectureModel, architecture_from_document, load_architecture

DATA_DIR = Path(str(resources.files("aptcgen").joinpath("data")))
MAINTENANCE_PATH = DATA_DIR / "architectures" / "maintenance.json"
POWERGRID_PATH = DATA_DIR / "architectures" / "powergrid.json"
BANK_PATH = DATA_DIR / "architectures" / "bank.json"
EXAMPLE_APTC_PATH = DATA_DIR / "aptcs" / "maintenance_example.json"
CORRECTED_APTC_PATH = DATA_DIR / "aptcs" / "maintenance_example_corrected.json"
REPLAY_DIR = DATA_DIR / "replay"
SCORES_PATH = DATA_DIR / "expert_scores.csv"

ALL_ARCHITECTURE_PATHS = (MAINTENANCE_PATH, POWERGRID_PATH, BANK_PATH)


@pytest.fixture
def maintenance() -> ArchitectureModel:
    return load_architecture(MAINTENANCE_PATH)


@pytest.fixture
def powergrid() -> ArchitectureModel:
    return load_architecture(POWERGRID_PATH)


@pytest.fixture
def bank() -> ArchitectureModel:
    return load_architecture(BANK_PATH)


@pytest.fixture
def example_aptc() -> dict:
    return json.loads(EXAMPLE_APTC_PATH.read_text(encoding="utf-8"))


@pytest.fixture
def corrected_aptc() -> dict:
    return json.loads(CORRECTED_APTC_PATH.read_text(encoding="utf-8"))


def random_model_document(rng: random.Random, *, max_components: int = 8, max_extra_edges: int = 4) -> dict:
    """A random but always-valid architecture document.

    Kept sparse so exhaustive path enumeration stays cheap in oracle tests.
    """
    n = rng.randint(0, max_components)
    component_names = [f"Comp{i}" for i in range(n)]
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    rng.shuffle(pairs)
    edge_budget = rng.randint(0, min(len(pairs), n + max_extra_edges))
    edges = pairs[:edge_budget]

    interfaces = []
    connectors = []
    provides: dict[str, list[str]] = {name: [] for name in component_names}
    requires: dict[str, list[str]] = {name: [] for name in component_names}
    for index, (a, b) in enumerate(edges):
        iface = f"Port{index}"
        interfaces.append({"name": iface, "operations": [f"op{index}()"]})
        if rng.random() < 0.5:
            a, b = b, a
        provides[component_names[b]].append(iface)
        requires[component_names[a]].append(iface)
        connectors.append(
            {
                "name": f"Conn{index}",
                "from": component_names[a],
                "to": component_names[b],
                "interface": iface,
            }
        )

    n_containers = rng.randint(1, 4) if n else rng.randint(0, 2)
    containers = [{"name": f"Node{i}"} for i in range(n_containers)]
    links = []
    if n_containers >= 2:
        for i in range(rng.randint(0, 2)):
            members = rng.sample([c["name"] for c in containers], rng.randint(2, n_containers))
            links.append({"name": f"Link{i}", "containers": sorted(members)})
    allocations = []
    if n_containers:
        for name in component_names:
            if rng.random() < 0.9:
                allocations.append(
                    {"component": name, "container": rng.choice(containers)["name"]}
                )

    return {
        "name": f"Fuzz{rng.randrange(10**6)}",
        "components": [
            {
                "name": name,
                "provides": provides[name],
                "requires": requires[name],
                **({"assetNote": f"note for {name}"} if rng.random() < 0.2 else {}),
            }
            for name in component_names
        ],
        "interfaces": interfaces,
        "connectors": connectors,
        "containers": containers,
        "links": links,
        "allocations": allocations,
    }


def random_model(rng: random.Random, **kwargs) -> ArchitectureModel:
    return architecture_from_document(random_model_document(rng, **kwargs))


def enumerate_reachable(model: ArchitectureModel, start: str) -> set[str]:
    """Oracle: endpoints of every simple path out of `start`, by full enumeration."""
    adjacency: dict[str, set[str]] = {c.name: set() for c in model.components}
    for conn in model.connectors:
        adjacency[conn.from_component].add(conn.to_component)
        adjacency[conn.to_component].add(conn.from_component)
    reached: set[str] = set()

    def extend(path: list[str]) -> None:
        reached.add(path[-1])
        for nxt in adjacency[path[-1]]:
            if nxt not in path:
                extend(path + [nxt])

    extend([start])
    return reached


_PROPERTIES = ("Confidentiality", "Integrity", "Availability", "Authenticity")
_WORDS = ("access", "bypass", "breaker", "session", "record", "signal", "order", "token")


def _random_weakness_spelling(rng: random.Random) -> str:
    number = rng.choice((284, 285, 862, 863, 272, 79, 1, 99999))
    prefix = rng.choice(("CWE", "CAWE", "cwe", "cawe", "Cwe", "cAwE"))
    pad = rng.choice(("", " ", "  ", "\t"))
    return f"{pad}{prefix}-{number}{pad}"


def random_valid_aptc(rng: random.Random) -> dict:
    """A random wire document accepted by both the parser and the schema."""
    if rng.random() < 0.3:
        cawe = [_random_weakness_spelling(rng) for _ in range(rng.randint(1, 3))]
    else:
        cawe = _random_weakness_spelling(rng)
    if rng.random() < 0.3:
        properties = rng.sample(_PROPERTIES, rng.randint(1, 3))
    else:
        properties = rng.choice(_PROPERTIES)
    entry = f"Comp{rng.randint(0, 5)}"
    same = rng.random() < 0.3
    asset = entry if same else f"Other{rng.randint(0, 5)}"
    vector = {
        "Name": " ".join(rng.sample(_WORDS, 2)).title(),
        "EntryPoint": entry,
        "Asset": asset,
    }
    if not same:
        vector = {
            "Name": vector["Name"],
            "Connector": f"Conn{rng.randint(0, 5)}",
            "EntryPoint": entry,
            "Asset": asset,
        }
    doc = {
        "CAWE": cawe,
        "violatedSecurityProperty": properties,
        "Threat": " ".join(rng.sample(_WORDS, 3)),
        "AttackVector": vector,
    }
    if rng.random() < 0.3:
        doc["id"] = f"case-{rng.randrange(10**6)}"
    roll = rng.random()
    if roll < 0.15:
        doc["applicability"] = "applicable"
    elif roll < 0.3:
        doc["applicability"] = rng.choice(("uncertain", "not_applicable"))
        doc["missingInformation"] = "the deployment of " + rng.choice(_WORDS)
    if rng.random() < 0.1:
        doc["missingInformation"] = "unclear " + rng.choice(_WORDS)
    return doc


def mutate_aptc(doc: dict, rng: random.Random):
    """Apply one random mutation; the result may or may not stay valid."""
    doc = json.loads(json.dumps(doc))
    mutation = rng.randrange(14)
    if mutation == 0:
        doc.pop(rng.choice(("CAWE", "violatedSecurityProperty", "Threat", "AttackVector")), None)
    elif mutation == 1:
        doc["CAWE"] = rng.choice(("CWE-", "CWF-12", "CWE-123456", 863, [], ["CWE-1", "bogus"], "CWE -1"))
    elif mutation == 2:
        doc["violatedSecurityProperty"] = rng.choice(
            ("Secrecy", "confidentiality", 5, [], ["Confidentiality", "Nope"], None)
        )
    elif mutation == 3:
        doc["Threat"] = rng.choice(("", 7, None, ["x"]))
    elif mutation == 4:
        doc["AttackVector"] = rng.choice(("vector", 3, None, []))
    elif mutation == 5:
        doc["AttackVector"].pop(rng.choice(("Name", "EntryPoint", "Asset")), None)
    elif mutation == 6:
        doc["AttackVector"][rng.choice(("EntryPoint", "Asset"))] = rng.choice(("", 4, None))
    elif mutation == 7:
        doc["AttackVector"]["Extra"] = "x"
    elif mutation == 8:
        doc["Extra"] = {"unexpected": True}
    elif mutation == 9:
        # Break the connector iff-rule in whichever direction applies.
        vector = doc.get("AttackVector")
        if isinstance(vector, dict):
            if vector.get("EntryPoint") == vector.get("Asset"):
                vector["Connector"] = "ConnX"
            else:
                vector.pop("Connector", None)
    elif mutation == 10:
        doc["id"] = rng.choice(("", 12, None))
    elif mutation == 11:
        doc["applicability"] = rng.choice(("Uncertain", "maybe", 1, "not applicable"))
    elif mutation == 12:
        doc["applicability"] = rng.choice(("uncertain", "not_applicable"))
        doc.pop("missingInformation", None)
    else:
        doc["missingInformation"] = rng.choice(("", 9, None))
    return doc


def random_aptc_corpus(rng: random.Random, size: int) -> list:
    """Mixed corpus of valid, mutated, and outright non-object documents."""
    corpus: list = []
    for _ in range(size):
        roll = rng.random()
        if roll < 0.35:
            corpus.append(random_valid_aptc(rng))
        elif roll < 0.95:
            corpus.append(mutate_aptc(random_valid_aptc(rng), rng))
        else:
            corpus.append(rng.choice(("not json object", 17, ["CWE-863"], None, True)))
    return corpus
