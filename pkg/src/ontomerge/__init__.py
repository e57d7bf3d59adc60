"""Ontology merge workbench.

Lifts heterogeneous XML data sources into local frame ontologies and
merges them into a single global ontology through an interactive
suggestion/conflict cycle, a scriptable batch mode, a CLI, and an HTTP
session service.
"""

from .model import (
    ClassFrame,
    FrameId,
    FrameKind,
    InstanceFrame,
    Ontology,
    RangeSpec,
    SlotFrame,
    SlotKind,
    Value,
    Violation,
    XsdKind,
    ancestors,
    validate,
)

__all__ = [
    "ClassFrame",
    "FrameId",
    "FrameKind",
    "InstanceFrame",
    "Ontology",
    "RangeSpec",
    "SlotFrame",
    "SlotKind",
    "Value",
    "Violation",
    "XsdKind",
    "ancestors",
    "validate",
]
