"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SynergyError(Exception):
    """Base class for every error raised by this package."""


class AllZero(SynergyError, ValueError):
    pass


class EmptySubset(SynergyError, ValueError):
    pass


class NegativeEmployees(SynergyError, ValueError):
    pass


class MalformedCode(SynergyError, ValueError):
    pass


class UnmappedLocation(SynergyError, LookupError):
    pass


class EmptyPartition(SynergyError, ValueError):
    pass


class ZeroTotal(SynergyError, ZeroDivisionError):
    pass


class BadCounts(SynergyError, ValueError):
    pass


class InputIOError(SynergyError, OSError):
    pass


class HeaderMismatch(SynergyError, ValueError):
    pass


class NoValidRecords(SynergyError, ValueError):
    pass


class BadSpec(SynergyError, ValueError):
    pass


class NotRational(BadSpec):
    pass


class MissingRun(SynergyError, FileNotFoundError):
    pass
