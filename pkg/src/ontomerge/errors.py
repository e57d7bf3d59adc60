"""Exception types shared across the workbench."""


class OntomergeError(Exception):
    """Base class for all workbench errors."""


class UnknownFrameError(OntomergeError):
    """A frame reference does not resolve in the session or ontology."""


class SameFrameError(OntomergeError):
    """A merge was requested between a frame and itself (or its own image)."""


class KindMismatchError(OntomergeError):
    """Two slots of different kinds (object vs datatype) cannot be merged."""


class NameCollisionError(OntomergeError):
    """An explicit name clashes with an existing frame of the same kind."""


class AlreadyImagedError(OntomergeError):
    """The class already has an image in the merged ontology."""


class CycleError(OntomergeError):
    """The operation would introduce a subclass cycle."""


class EmptyLogError(OntomergeError):
    """Undo was requested on a session with no applied operations."""


class ConfirmationRequiredError(OntomergeError):
    """Merging the instances requires confirming a merge of their type images."""


class DatatypeMismatchError(OntomergeError):
    """Two datatype slots disagree on their range kind.

    Carries the candidate resolutions so the advisor can surface the
    disagreement as a pending conflict.
    """

    def __init__(self, message, kinds, resolutions):
        super().__init__(message)
        self.kinds = kinds
        self.resolutions = resolutions


class NoPreferredSourceError(OntomergeError):
    """Automatic conflict resolution requires a preferred source ontology."""


class UnresolvableConflictError(OntomergeError):
    """No candidate resolution is consistent with the preferred source."""


class NonterminationError(OntomergeError):
    """auto-merge exceeded its operation budget; indicates a bug."""


class MalformedXmlError(OntomergeError):
    """An input document failed to parse; message carries the position."""


class MixedRootsError(OntomergeError):
    """Input documents do not share a single root element name."""


class UnresolvableReferenceError(OntomergeError):
    """A serialized ontology references a frame it never declares."""


class ScriptError(OntomergeError):
    """A merge script could not be parsed."""


class StepFailureError(OntomergeError):
    """Replay aborted at a step; carries the step index and cause."""

    def __init__(self, index, cause):
        super().__init__(f"step {index} failed: {cause}")
        self.index = index
        self.cause = cause
