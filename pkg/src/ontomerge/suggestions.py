"""Suggestion, explanation and conflict records shared by matcher and advisor."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import FrameId


class ExplanationKind(str, Enum):
    LEXICAL_MATCH = "lexical-match"
    SLOT_MERGE_FOLLOWUP = "slot-merge-followup"
    INSTANCE_VALUE_FOLLOWUP = "instance-value-followup"
    FOCUS_MOVE = "focus-move"
    PREFERRED_RESOLUTION = "preferred-resolution"


@dataclass(frozen=True)
class Explanation:
    kind: ExplanationKind
    text: str
    evidence: tuple[FrameId, ...] = ()
    score: float | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("explanation text must be non-empty")


@dataclass
class Suggestion:
    """A proposed operation with a score and an explanation chain."""

    proposed: object  # an engine Operation
    score: float
    explanations: list[Explanation]
    related_frames: frozenset[FrameId]

    def __post_init__(self):
        if not self.explanations:
            raise ValueError("a suggestion needs at least one explanation")

    @property
    def key(self) -> tuple:
        """Identity used for dedupe and dismissal."""
        return self.proposed.key


class ConflictKind(str, Enum):
    NAME_COLLISION = "name-collision"
    DANGLING_REFERENCE = "dangling-reference"
    REDUNDANT_SUBCLASS = "redundant-subclass"
    RANGE_VIOLATION = "range-violation"
    CARDINALITY_VIOLATION = "cardinality-violation"
    DATATYPE_MISMATCH = "datatype-mismatch"


@dataclass
class Conflict:
    """A detected inconsistency plus candidate operations that resolve it."""

    kind: ConflictKind
    frames: frozenset[FrameId]
    resolutions: list[object]
    detail: str = ""
