"""Exception types shared across the simulator."""


class ConfigurationError(Exception):
    """A config file, override, or parameter record is invalid.

    The message names the offending key path where one exists.
    """


class DomainError(ValueError):
    """An operation was called outside its mathematical domain."""


class DegenerateGeometryError(Exception):
    """Reference geometry is rank-deficient (e.g. coplanar anchors)."""
