"""Exception types shared across the pipeline."""

from __future__ import annotations


class AptcError(Exception):
    """Base class for every error raised by this package."""


class ParseError(AptcError):
    """Input document is not parseable (bad JSON, wrong value shapes)."""


class IntegrityError(AptcError):
    """Architecture document violates a structural constraint.

    Carries the location of the offending element, e.g. ``connectors[2].to``.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class UnknownComponent(AptcError):
    """A component name does not exist in the architecture model."""


class UnallocatedComponent(AptcError):
    """A component is not allocated to any resource container."""


class SchemaError(AptcError):
    """Test-case document rejected; carries every violated constraint.

    ``findings`` is a list of ``(json_pointer, message)`` pairs.
    """

    def __init__(self, findings: list[tuple[str, str]]):
        self.findings = list(findings)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.findings))


class MalformedWeaknessId(AptcError):
    """A weakness identifier is not of the accepted CWE/CAWE form."""


class ExemplarArityError(AptcError):
    """Exemplar count does not match the prompting strategy."""


class UnknownWeakness(AptcError):
    """A weakness is not part of the active catalog."""


class AuthError(AptcError):
    """Credentials missing or rejected by the provider."""


class TransportError(AptcError):
    """Provider request failed after exhausting retries."""


class GenerationTimeoutError(TransportError):
    """Provider request timed out after exhausting retries."""


class FixtureMissing(AptcError):
    """Replay provider has no recorded fixture for the request key."""


class NoJsonFound(AptcError):
    """Response text contains no JSON object or array at all."""


class JsonSyntaxError(AptcError):
    """Response text contains JSON-looking content that fails to parse."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (offset {offset})")


class ScoreFormatError(AptcError):
    """Score file is malformed (bad header, row, or value)."""


class DuplicateScore(AptcError):
    """Two score rows share the same test-case reference and rater."""


class UnknownLabel(AptcError):
    """Score row references an unknown model/strategy/case/weakness label."""
