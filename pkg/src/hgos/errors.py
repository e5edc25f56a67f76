"""Error types raised across the kernel.

Every failure carries a stable ``code`` string so the HTTP layer and the CLI
can map errors without string-matching messages.
"""

from __future__ import annotations


class KernelError(Exception):
    """Base class for all kernel errors."""

    code = "KernelError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- workspace data model ---------------------------------------------------

class DuplicateId(KernelError):
    code = "DuplicateId"


class UnknownTypeKey(KernelError):
    code = "UnknownTypeKey"


class ContainerCycle(KernelError):
    code = "ContainerCycle"


class DanglingEndpoint(KernelError):
    code = "DanglingEndpoint"


class ConnectionRuleViolation(KernelError):
    code = "ConnectionRuleViolation"


class DuplicateLink(KernelError):
    code = "DuplicateLink"


class NotFound(KernelError):
    code = "NotFound"


class HasIncidentLinks(KernelError):
    code = "HasIncidentLinks"


class MalformedDocument(KernelError):
    code = "MalformedDocument"


class InvariantViolation(KernelError):
    """A structural rule does not hold; names the rule and offending element."""

    code = "InvariantViolation"

    def __init__(self, rule: str, element_id: str = "", message: str = ""):
        self.rule = rule
        self.element_id = element_id
        super().__init__(message or f"{rule} violated by {element_id!r}")


class BrokenAlias(KernelError):
    code = "BrokenAlias"


class AliasDepthExceeded(KernelError):
    code = "AliasDepthExceeded"


# --- DSL registry -----------------------------------------------------------

class InvalidDefinition(KernelError):
    code = "InvalidDefinition"


class MetaModelViolation(KernelError):
    code = "MetaModelViolation"


class EmptyDefinition(KernelError):
    code = "EmptyDefinition"


class UnresolvedDsl(KernelError):
    code = "UnresolvedDsl"


# --- dataflow ---------------------------------------------------------------

class ValidationFailed(KernelError):
    """The workspace does not validate cleanly against the required DSL."""

    code = "ValidationFailed"

    def __init__(self, violations, message: str = ""):
        self.violations = list(violations)
        detail = "; ".join(f"{v.rule}@{v.element_id}" for v in self.violations[:5])
        super().__init__(message or f"validation failed: {detail}")


class UndelayedCycle(KernelError):
    """A channel cycle with no delay channel on it."""

    code = "UndelayedCycle"

    def __init__(self, node_ids):
        self.node_ids = sorted(node_ids)
        super().__init__(f"cycle without delay channel: {self.node_ids}")


class ProcessorError(KernelError):
    code = "ProcessorError"

    def __init__(self, node_id: str, message: str = ""):
        self.node_id = node_id
        super().__init__(message or f"processor {node_id!r} failed")


# --- codegen ----------------------------------------------------------------

class UnresolvedPlaceholder(KernelError):
    code = "UnresolvedPlaceholder"

    def __init__(self, template_id: str, placeholder: str, element_id: str):
        self.template_id = template_id
        self.placeholder = placeholder
        self.element_id = element_id
        super().__init__(
            f"template {template_id!r}: {placeholder} unresolved on element {element_id!r}"
        )


class PathEscape(KernelError):
    code = "PathEscape"


class OutputPathCollision(KernelError):
    code = "OutputPathCollision"


# --- search -----------------------------------------------------------------

class QuerySyntaxError(KernelError):
    """Query text failed to parse; offset is a 0-based byte offset."""

    code = "SyntaxError"

    def __init__(self, offset: int, expected: str):
        self.offset = offset
        self.expected = expected
        super().__init__(f"syntax error at offset {offset}: expected {expected}")


# --- animator ---------------------------------------------------------------

class EmptyTrace(KernelError):
    code = "EmptyTrace"


# --- server -----------------------------------------------------------------

class RevisionConflict(KernelError):
    code = "RevisionConflict"

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected revision {expected}, workspace is at {actual}")


class CommandFailed(KernelError):
    """Wraps the failing command's index and underlying error for batch replies."""

    code = "CommandFailed"

    def __init__(self, index: int, cause: KernelError):
        self.index = index
        self.cause = cause
        super().__init__(f"command {index} failed: {cause.code}: {cause.message}")
