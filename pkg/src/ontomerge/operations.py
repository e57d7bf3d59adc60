"""The merge-session operation vocabulary and its wire codec.

Operations reference frames as (ontology-name, local-name) pairs; the
same encoding is used in merge scripts (``key=value`` fields) and in the
HTTP service's JSON payloads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import FrameId, FrameKind, XsdKind


@dataclass(frozen=True)
class MergeClasses:
    a: FrameId
    b: FrameId
    new_name: str | None = None

    op = "merge-classes"

    @property
    def key(self):
        return (self.op, frozenset((self.a, self.b)))


@dataclass(frozen=True)
class MergeSlots:
    s1: FrameId
    s2: FrameId
    new_name: str | None = None
    range_kind: XsdKind | None = None  # resolves a datatype disagreement

    op = "merge-slots"

    @property
    def key(self):
        return (self.op, frozenset((self.s1, self.s2)))


@dataclass(frozen=True)
class MergeInstances:
    i1: FrameId
    i2: FrameId
    new_name: str | None = None
    confirm_type_merge: bool = False

    op = "merge-instances"

    @property
    def key(self):
        return (self.op, frozenset((self.i1, self.i2)))


@dataclass(frozen=True)
class ShallowCopy:
    cls: FrameId

    op = "copy-class"

    @property
    def key(self):
        return (self.op, self.cls)


@dataclass(frozen=True)
class DeepCopy:
    cls: FrameId

    op = "deep-copy-class"

    @property
    def key(self):
        return (self.op, self.cls)


@dataclass(frozen=True)
class CopySlot:
    slot: FrameId

    op = "copy-slot"

    @property
    def key(self):
        return (self.op, self.slot)


@dataclass(frozen=True)
class CreateClass:
    name: str
    superclasses: frozenset[FrameId] = frozenset()

    op = "create-class"

    @property
    def key(self):
        return (self.op, self.name)


@dataclass(frozen=True)
class AddSuperclass:
    cls: FrameId
    superclass: FrameId

    op = "add-superclass"

    @property
    def key(self):
        return (self.op, self.cls, self.superclass)


@dataclass(frozen=True)
class RemoveSuperclass:
    cls: FrameId
    superclass: FrameId

    op = "remove-superclass"

    @property
    def key(self):
        return (self.op, self.cls, self.superclass)


@dataclass(frozen=True)
class RenameFrame:
    kind: FrameKind
    frame: FrameId
    new_name: str

    op = "rename-frame"

    @property
    def key(self):
        return (self.op, self.kind, self.frame, self.new_name)


@dataclass(frozen=True)
class RemoveFrame:
    kind: FrameKind
    frame: FrameId

    op = "remove-frame"

    @property
    def key(self):
        return (self.op, self.kind, self.frame)


Operation = Union[
    MergeClasses,
    MergeSlots,
    MergeInstances,
    ShallowCopy,
    DeepCopy,
    CopySlot,
    CreateClass,
    AddSuperclass,
    RemoveSuperclass,
    RenameFrame,
    RemoveFrame,
]


def op_to_dict(op: Operation) -> dict:
    """Serialize an operation to flat string fields."""
    d: dict[str, str] = {"type": op.op}
    if isinstance(op, MergeClasses):
        d["a"], d["b"] = str(op.a), str(op.b)
        if op.new_name:
            d["name"] = op.new_name
    elif isinstance(op, MergeSlots):
        d["s1"], d["s2"] = str(op.s1), str(op.s2)
        if op.new_name:
            d["name"] = op.new_name
        if op.range_kind:
            d["range"] = op.range_kind.value
    elif isinstance(op, MergeInstances):
        d["i1"], d["i2"] = str(op.i1), str(op.i2)
        if op.new_name:
            d["name"] = op.new_name
        if op.confirm_type_merge:
            d["confirm-types"] = "true"
    elif isinstance(op, (ShallowCopy, DeepCopy)):
        d["c"] = str(op.cls)
    elif isinstance(op, CopySlot):
        d["s"] = str(op.slot)
    elif isinstance(op, CreateClass):
        d["name"] = op.name
        if op.superclasses:
            d["super"] = ",".join(str(s) for s in sorted(op.superclasses))
    elif isinstance(op, (AddSuperclass, RemoveSuperclass)):
        d["class"], d["super"] = str(op.cls), str(op.superclass)
    elif isinstance(op, RenameFrame):
        d["kind"], d["frame"], d["name"] = op.kind.value, str(op.frame), op.new_name
    elif isinstance(op, RemoveFrame):
        d["kind"], d["frame"] = op.kind.value, str(op.frame)
    else:
        raise TypeError(f"unknown operation {op!r}")
    return d


def op_from_dict(d: dict) -> Operation:
    """Inverse of op_to_dict; raises ValueError on malformed input."""
    kind = d.get("type")
    try:
        if kind == "merge-classes":
            return MergeClasses(
                FrameId.parse(d["a"]), FrameId.parse(d["b"]), d.get("name")
            )
        if kind == "merge-slots":
            return MergeSlots(
                FrameId.parse(d["s1"]),
                FrameId.parse(d["s2"]),
                d.get("name"),
                XsdKind(d["range"]) if d.get("range") else None,
            )
        if kind == "merge-instances":
            return MergeInstances(
                FrameId.parse(d["i1"]),
                FrameId.parse(d["i2"]),
                d.get("name"),
                str(d.get("confirm-types", "")).lower() == "true",
            )
        if kind == "copy-class":
            return ShallowCopy(FrameId.parse(d["c"]))
        if kind == "deep-copy-class":
            return DeepCopy(FrameId.parse(d["c"]))
        if kind == "copy-slot":
            return CopySlot(FrameId.parse(d["s"]))
        if kind == "create-class":
            supers = frozenset(
                FrameId.parse(s) for s in d["super"].split(",") if s
            ) if d.get("super") else frozenset()
            return CreateClass(d["name"], supers)
        if kind == "add-superclass":
            return AddSuperclass(FrameId.parse(d["class"]), FrameId.parse(d["super"]))
        if kind == "remove-superclass":
            return RemoveSuperclass(FrameId.parse(d["class"]), FrameId.parse(d["super"]))
        if kind == "rename-frame":
            return RenameFrame(FrameKind(d["kind"]), FrameId.parse(d["frame"]), d["name"])
        if kind == "remove-frame":
            return RemoveFrame(FrameKind(d["kind"]), FrameId.parse(d["frame"]))
    except KeyError as exc:
        raise ValueError(f"operation {kind!r} is missing field {exc}") from exc
    raise ValueError(f"unknown operation type {kind!r}")
