"""Exception hierarchy shared across the package.

Expected validation failures (plan checks) are collected as values by the
callers that produce them; the classes below are raised only when an
operation cannot return a meaningful result.
"""
from __future__ import annotations

__all__ = [
    "MedRouterError",
    "NamingError",
    "MalformedName",
    "UnknownIntent",
    "EmptySegment",
    "RegistryError",
    "DuplicateWeightId",
    "SidecarGap",
    "SidecarMismatch",
    "EmptyText",
    "ProviderFailure",
    "PlanError",
    "NoJsonFound",
    "SchemaViolation",
    "DanglingDependency",
    "NoTaskRecognized",
    "MissingExampleAsset",
    "TransportError",
    "Timeout",
    "TransportFailure",
    "AuthFailure",
    "ProtocolViolation",
    "CycleDetected",
    "BadConditionSource",
    "UnknownConditionLabel",
    "SourceNotDone",
    "InvalidPlan",
    "BackendFailure",
    "DecodeFailure",
    "IntentMismatch",
    "ConfigError",
    "CorpusError",
    "UsageError",
]


class MedRouterError(Exception):
    """Base class for every error raised by this package."""


class NamingError(MedRouterError):
    """A weight filename does not follow the naming convention."""


class MalformedName(NamingError):
    """Name does not split into exactly three underscore-separated segments."""


class UnknownIntent(NamingError):
    """First segment is not a recognized intent token."""


class EmptySegment(NamingError):
    """A name segment canonicalizes to the empty string."""


class RegistryError(MedRouterError):
    """Registry construction failed."""


class DuplicateWeightId(RegistryError):
    """Two files in the registry share the same stem."""


class SidecarGap(RegistryError):
    """Label sidecar has missing or non-contiguous class indices."""


class SidecarMismatch(RegistryError):
    """Label sidecar disagrees with the filename-declared classes."""


class EmptyText(MedRouterError):
    """Text canonicalized to the empty string where content is required."""


class ProviderFailure(MedRouterError):
    """An optional normalization provider failed; callers degrade gracefully."""


class PlanError(MedRouterError):
    """A plan document could not be parsed or validated."""


class NoJsonFound(PlanError):
    """Raw frontend output contains no well-formed JSON object."""


class SchemaViolation(PlanError):
    """Plan JSON is structurally invalid; message names the offending field."""


class DanglingDependency(PlanError):
    """A task depends on an undeclared task id."""


class NoTaskRecognized(PlanError):
    """The offline grammar found no actionable task in the request."""


class MissingExampleAsset(PlanError):
    """Bundled few-shot example asset is absent or malformed."""


class TransportError(MedRouterError):
    """Base class for failures while talking to a remote endpoint."""


class Timeout(TransportError):
    """Remote call exceeded its deadline."""


class TransportFailure(TransportError):
    """Remote call failed at the connection or HTTP level."""


class AuthFailure(TransportError):
    """Remote endpoint rejected the request credentials."""


class ProtocolViolation(TransportError):
    """Remote response does not satisfy the wire contract."""


class CycleDetected(MedRouterError):
    """Plan dependency graph contains a cycle; message lists the task ids."""


class BadConditionSource(MedRouterError):
    """A condition references a task that is not a classification."""


class UnknownConditionLabel(MedRouterError):
    """A class_equals condition names a label its source cannot produce."""


class SourceNotDone(MedRouterError):
    """Condition evaluation requires a completed source task."""


class InvalidPlan(MedRouterError):
    """Plan failed structural validation; carries the collected issue texts."""

    def __init__(self, issues: "list[str]"):
        self.issues = [str(issue) for issue in issues]
        super().__init__(f"plan failed validation: {'; '.join(self.issues)}")


class BackendFailure(MedRouterError):
    """A single task's inference call failed."""


class DecodeFailure(MedRouterError):
    """Image bytes could not be decoded as PNG or PGM."""


class IntentMismatch(MedRouterError):
    """Backend operation does not match the weight's intent."""


class ConfigError(MedRouterError):
    """Configuration value is missing or violates an invariant."""


class CorpusError(MedRouterError):
    """Gold corpus file is malformed or internally inconsistent."""


class UsageError(MedRouterError):
    """Command line was invoked incorrectly."""
