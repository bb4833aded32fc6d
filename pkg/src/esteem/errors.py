"""Exception hierarchy shared by the ingest, metrics and report layers."""

from __future__ import annotations


class EsteemError(Exception):
    """Base class for all library errors."""


class EmptyAuthor(EsteemError, ValueError):
    pass


class MalformedReference(EsteemError, ValueError):
    pass


class MalformedIfRow(EsteemError, ValueError):
    pass


class MalformedMetadataRow(EsteemError, ValueError):
    pass


class InvalidSpec(EsteemError, ValueError):
    pass


class EmptyHistogram(EsteemError, ValueError):
    pass


class UnknownPaperId(EsteemError, KeyError):
    pass


class DegenerateInput(EsteemError, ValueError):
    """Raised when a rank correlation is undefined for the given inputs."""


class ConfigInvalid(EsteemError, ValueError):
    pass
