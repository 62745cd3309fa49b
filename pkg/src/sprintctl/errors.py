"""Domain errors with stable machine-readable codes shared by the CLI and HTTP API."""

from __future__ import annotations


class SprintError(Exception):
    """Base class for every domain error raised by this package."""

    code = "error"


class MalformedSeries(SprintError):
    code = "malformed-series"


class GridMismatch(SprintError):
    code = "grid-mismatch"


class AttributeMismatch(SprintError):
    code = "attribute-mismatch"


class EmptyPrefix(SprintError):
    code = "empty-prefix"


class SchemaViolation(SprintError):
    code = "schema-violation"


class EmptyMemberList(SprintError):
    code = "empty-member-list"


class HeterogeneousCurves(SprintError):
    code = "heterogeneous-curves"


class MissingContext(SprintError):
    code = "missing-context"


class InvalidTargetK(SprintError):
    code = "invalid-target-k"


class ParseError(SprintError):
    code = "parse-error"


class DuplicateProject(SprintError):
    code = "duplicate-project"


class UnknownAttribute(SprintError):
    code = "unknown-attribute"


class IoError(SprintError):
    code = "io-error"


class VersionMismatch(SprintError):
    code = "version-mismatch"


class CorruptFile(SprintError):
    code = "corrupt-file"


class NoClusters(SprintError):
    code = "no-clusters"


class NonMonotoneTime(SprintError):
    code = "non-monotone-time"


class OutOfRangeTime(SprintError):
    code = "out-of-range-time"


class InsufficientPrefix(SprintError):
    code = "insufficient-prefix"


class NoActuals(SprintError):
    code = "no-actuals"


class InvalidConfig(SprintError):
    code = "invalid-config"


class BindFailure(SprintError):
    code = "bind-failure"
