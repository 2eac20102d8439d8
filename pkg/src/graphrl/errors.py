"""Exception types shared across the package."""


class GraphRLError(Exception):
    """Base class for package errors."""


class ConfigError(GraphRLError):
    """Bad configuration file or option value (CLI exit code 2)."""


class DataError(GraphRLError):
    """Unreadable or malformed input data (CLI exit code 3)."""


class CollectiveError(GraphRLError):
    """A collective call failed: shape mismatch, lost rank, or broken group."""


class CollectiveAborted(CollectiveError):
    """Knock-on failure: the rendezvous broke while this rank was waiting."""


class InvalidActionError(GraphRLError):
    """An action was applied to a node that is not a candidate."""
