"""Exception taxonomy for guarded workflow operations."""

from __future__ import annotations


class WorkflowError(Exception):
    """Base class for every error raised by this package."""


class ParseError(WorkflowError):
    """Malformed input file (ragged CSV rows, empty file, bad literal)."""


class SchemaError(WorkflowError):
    """Column-level contract violation (duplicate/unknown/missing columns)."""


class ConfigError(WorkflowError):
    """Invalid configuration: unknown algorithm, bad hyperparameter, empty search space."""


class PartitionError(WorkflowError):
    """Split preconditions violated, or data without split provenance reached a guarded verb."""


class StratifyError(PartitionError):
    """Stratified split impossible: a target class has fewer rows than partitions."""


class TemporalTieError(PartitionError):
    """Duplicate timestamps straddle a temporal split boundary; assignment would be arbitrary."""


class GroupError(PartitionError):
    """Grouped split impossible: too few groups or missing group labels."""


class CVError(WorkflowError):
    """Cross-validation rotation cannot be built from the given partition and parameters."""


class RegistryError(WorkflowError):
    """Provenance registry misuse (e.g. marking a non-test fingerprint as assessed)."""


class AmbiguousProvenance(RegistryError):
    """A frame subset-matches two different registered partitions; refusing to guess."""


class GuardError(WorkflowError):
    """A call-time guard rejected the operation."""


class AlreadyAssessedModel(GuardError):
    """This model has already produced Evidence; assessment is terminal, once per holdout."""


class HoldoutSpent(GuardError):
    """This test holdout has already been assessed in this session, regardless of model."""


class LineageMismatch(GuardError):
    """Test data comes from a different split than the one the model was trained under."""
