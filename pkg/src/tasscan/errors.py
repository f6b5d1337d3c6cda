"""Exception hierarchy shared by all tasscan modules."""

from __future__ import annotations


class TasscanError(Exception):
    """Base class for every error raised by this package."""


class PrefixError(TasscanError, ValueError):
    """Malformed address or prefix text, or a non-canonical CIDR block."""


class PartitionError(TasscanError, ValueError):
    """Prefix set violates a partition precondition (overlap, bad nesting)."""


class IngestError(TasscanError, ValueError):
    """Input file cannot be used at all (unreadable, empty, corrupt)."""


class SelectionError(TasscanError, ValueError):
    """Density ranking or coverage-target selection got unusable input."""


class EvaluationError(TasscanError, ValueError):
    """Snapshot replay preconditions do not hold."""


class ManifestError(TasscanError, ValueError):
    """Run manifest is missing, malformed, or inconsistent with its files."""
