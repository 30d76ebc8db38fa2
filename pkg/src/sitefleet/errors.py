"""Exception types shared across the package."""


class SiteFleetError(Exception):
    """Base class for all package errors."""


class InvalidRadius(SiteFleetError):
    """Turning radius must be strictly positive."""


class OutOfRange(SiteFleetError):
    """Arc-length query outside [0, total_length]."""


class UnknownActor(SiteFleetError):
    """Actor id not present in the world."""


class PlanningFailed(SiteFleetError):
    """No feasible path between the requested poses."""


class ZoneViolation(SiteFleetError):
    """Planned path leaves the permitted operational zones.

    Carries the arc length of the first offending sample.
    """

    def __init__(self, message, arc_length=None):
        super().__init__(message)
        self.arc_length = arc_length


class ConfigInvalid(SiteFleetError):
    """Scenario configuration failed validation.

    ``field_path`` names the offending field, e.g. ``vehicles[0].spec.r_min``.
    """

    def __init__(self, message, field_path=None):
        super().__init__(message)
        self.field_path = field_path


class TruncatedLog(SiteFleetError):
    """Event log ends before its run-end record.

    ``last_seq`` is the sequence number of the last well-formed record.
    """

    def __init__(self, message, last_seq=None):
        super().__init__(message)
        self.last_seq = last_seq
