"""Exception types shared across the package."""


class HeatLabError(Exception):
    pass


class UnsupportedGroupError(HeatLabError):
    """Operation called for a group kind it does not support."""


class ResourceCapError(HeatLabError):
    """A configured size cap (nodes, truncation degree) would be exceeded."""


class TruncationError(HeatLabError):
    """A series truncation is inadequate for the requested evaluation."""


class ConsistencyError(HeatLabError):
    """Two independent computations of the same quantity disagree."""
