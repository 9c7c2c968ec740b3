"""Exception types shared across the package."""


class TreeccaError(Exception):
    """Base class for all package errors."""


class ParameterError(TreeccaError, ValueError):
    """A parameter is outside its documented domain."""


class CapacityError(TreeccaError):
    """A requested tree would exceed an explicit size limit."""


class TopologyMismatchError(TreeccaError):
    """Two values that must share a topology do not."""


class ModelMismatchError(TreeccaError):
    """An operation was applied to a trajectory of the wrong model."""


class InvalidQueryError(TreeccaError):
    """A structure query is incompatible with the topology."""


class NoWitnessError(TreeccaError):
    """No witness exists for the requested structure."""


class LightConeError(TreeccaError):
    """A requested horizon exceeds the truncation's light-cone validity."""


class SchemaVersionError(TreeccaError):
    """A persisted report uses an unsupported format version."""


class InternalConsistencyError(TreeccaError):
    """An internal invariant failed; indicates a bug, not bad input."""
