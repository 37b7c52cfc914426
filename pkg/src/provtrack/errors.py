"""Exception hierarchy shared by all provtrack services.

Every error carries a stable ``code`` (its class name) so the gateway can map
failures to uniform ``{code, message}`` response bodies without string
matching.
"""

from __future__ import annotations


class ProvTrackError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- kernel ---------------------------------------------------------------

class UnknownItem(ProvTrackError):
    pass


class UnknownDescription(ProvTrackError):
    pass


class InvalidKind(ProvTrackError):
    pass


class IllegalTransition(ProvTrackError):
    pass


class SeqBeforeCreation(ProvTrackError):
    pass


class CorruptLog(ProvTrackError):
    pass


# --- domain ---------------------------------------------------------------

class ValidationFailed(ProvTrackError):
    pass


class EmptyElement(ProvTrackError):
    pass


class UnknownPipeline(ProvTrackError):
    pass


class UnknownVersion(ProvTrackError):
    pass


class UnknownDataset(ProvTrackError):
    pass


class ElementNotInDataset(ProvTrackError):
    pass


class MissingRequiredParam(ProvTrackError):
    pass


class UnknownAnalysis(ProvTrackError):
    pass


class NotVisible(ProvTrackError):
    pass


class NotOwner(ProvTrackError):
    pass


# --- orchestrator ---------------------------------------------------------

class AlreadyRunning(ProvTrackError):
    pass


class UnknownJob(ProvTrackError):
    pass


class ElementsStillRunning(ProvTrackError):
    pass


class StepAlreadyDispatched(ProvTrackError):
    pass


class InvalidModification(ProvTrackError):
    pass


# --- query ----------------------------------------------------------------

class MalformedConstraint(ProvTrackError):
    pass


class UnknownNode(ProvTrackError):
    pass


class UnknownTarget(ProvTrackError):
    pass


# --- prov export ----------------------------------------------------------

class NotTerminal(ProvTrackError):
    pass


class ProvParseError(ProvTrackError):
    pass


# --- gateway --------------------------------------------------------------

class PortInUse(ProvTrackError):
    pass
