"""Architecture-driven abstract penetration test case generation and validation."""

from .aptc import (
    Applicability,
    AttackStep,
    AttackVector,
    PenTestCase,
    SecurityProperty,
    Threat,
    WeaknessRef,
    aptc_json_schema,
    aptc_schema_text,
    emit_aptc,
    normalize_weakness_id,
    parse_aptc,
    validate_against_schema,
)
from .archmodel import (
    Allocation,
    ArchitectureModel,
    Component,
    Connector,
    InterfaceDef,
    LinkingResource,
    ResourceContainer,
    component_names,
    deployment_linked,
    directly_connected,
    emit_architecture,
    load_architecture,
    reachable,
)
from .catalog import CatalogEntry, allowed_weaknesses, load_catalog, lookup
from .evaluation import (
    ExpertScore,
    MetricsTable,
    aggregate,
    ingest_scores,
    render_table,
    success_rate,
    unify_scores,
)
from .gateway import GenerationRecord, ProviderConfig, extract_json, generate, record_fixture
from .prompting import Exemplar, PromptBundle, Strategy, build_prompt, default_exemplars
from .serializer import SecurityView, extract_identifiers, serialize_security_view
from .validation import (
    Finding,
    FindingCode,
    ValidationReport,
    check_feasibility,
    check_grounding,
    check_property_plausibility,
    check_weakness_set,
    validate_batch,
)

__version__ = "0.1.0"
