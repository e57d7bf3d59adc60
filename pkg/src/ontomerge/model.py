"""Frame-based ontology model: classes, slots, instances, hierarchy.

Frames are identified by (source ontology name, local name).  Classes,
slots and instances live in separate name spaces within an ontology, so a
class and a datatype property may share a local name.  The hierarchy is a
DAG; a built-in top class is implicit — classes with no declared
superclass are its direct children and it never appears in frame sets.
"""

from __future__ import annotations

import copy as _copy
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import UnknownFrameError


class XsdKind(str, Enum):
    """The datatype kinds a slot range or primitive value may carry."""

    STRING = "string"
    INTEGER = "integer"
    DECIMAL = "decimal"
    NCNAME = "NCName"
    NMTOKEN = "NMTOKEN"


# Inference tries these in order and takes the first kind whose lexical
# space admits every observed value.
KIND_ORDER = (
    XsdKind.INTEGER,
    XsdKind.DECIMAL,
    XsdKind.NCNAME,
    XsdKind.NMTOKEN,
    XsdKind.STRING,
)

# XML 1.0 name productions restricted to the BMP.  NCName additionally
# excludes ':' and may not start with a digit; NMTOKEN is any nonempty
# run of name characters (':' included).
_NC_START = (
    "A-Za-z_\u00C0-\u00D6\u00D8-\u00F6\u00F8-\u02FF\u0370-\u037D"
    "\u037F-\u1FFF\u200C-\u200D\u2070-\u218F\u2C00-\u2FEF"
    "\u3001-\uD7FF\uF900-\uFDCF\uFDF0-\uFFFD"
)
_NC_CHAR = _NC_START + "\\-.0-9\u00B7\u0300-\u036F\u203F-\u2040"
_NAME_CHAR = _NC_CHAR + ":"

_RE_INTEGER = re.compile(r"[+-]?[0-9]+\Z")
_RE_DECIMAL = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)\Z")
_RE_NCNAME = re.compile(f"[{_NC_START}][{_NC_CHAR}]*\\Z")
_RE_NMTOKEN = re.compile(f"[{_NAME_CHAR}]+\\Z")


def is_valid_lexical(kind: XsdKind, text: str) -> bool:
    """True iff text belongs to the lexical space of kind."""
    if kind is XsdKind.STRING:
        return True
    if kind is XsdKind.INTEGER:
        return _RE_INTEGER.match(text) is not None
    if kind is XsdKind.DECIMAL:
        return _RE_DECIMAL.match(text) is not None
    if kind is XsdKind.NCNAME:
        return _RE_NCNAME.match(text) is not None
    if kind is XsdKind.NMTOKEN:
        return _RE_NMTOKEN.match(text) is not None
    raise ValueError(f"unknown kind {kind!r}")


def is_xml_name(text: str) -> bool:
    """True iff text is usable as an XML element/ontology name."""
    return bool(text) and _RE_NCNAME.match(text) is not None


class FrameKind(str, Enum):
    CLASS = "class"
    SLOT = "slot"
    INSTANCE = "instance"


class SlotKind(str, Enum):
    OBJECT = "object"
    DATATYPE = "datatype"


@dataclass(frozen=True, order=True)
class FrameId:
    """Identity of a frame: owning ontology name plus local name."""

    source: str
    name: str

    def __str__(self) -> str:
        return f"{self.source}:{self.name}"

    @staticmethod
    def parse(text: str) -> "FrameId":
        source, sep, name = text.partition(":")
        if not sep or not source or not name:
            raise ValueError(f"expected ontology:name, got {text!r}")
        return FrameId(source, name)


@dataclass(frozen=True)
class RangeSpec:
    """Slot range: exactly one of a datatype kind or a set of classes."""

    kind: XsdKind | None = None
    classes: frozenset[FrameId] = frozenset()

    @staticmethod
    def datatype(kind: XsdKind) -> "RangeSpec":
        return RangeSpec(kind=kind)

    @staticmethod
    def of_classes(classes) -> "RangeSpec":
        return RangeSpec(classes=frozenset(classes))

    @property
    def is_datatype(self) -> bool:
        return self.kind is not None


@dataclass(frozen=True)
class Value:
    """Either a primitive (lexical form + kind) or a frame reference."""

    lexical: str | None = None
    kind: XsdKind | None = None
    ref: FrameId | None = None

    @staticmethod
    def primitive(lexical: str, kind: XsdKind) -> "Value":
        return Value(lexical=lexical, kind=kind)

    @staticmethod
    def reference(ref: FrameId) -> "Value":
        return Value(ref=ref)

    @property
    def is_primitive(self) -> bool:
        return self.ref is None


@dataclass
class ClassFrame:
    id: FrameId
    superclasses: set[FrameId] = field(default_factory=set)


@dataclass
class SlotFrame:
    id: FrameId
    kind: SlotKind
    domain: set[FrameId] = field(default_factory=set)
    range: RangeSpec = field(default_factory=lambda: RangeSpec(kind=XsdKind.STRING))
    min_card: int = 0
    max_card: int | None = None  # None = unbounded


@dataclass
class InstanceFrame:
    id: FrameId
    types: set[FrameId] = field(default_factory=set)
    values: dict[FrameId, list[Value]] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    """One broken well-formedness invariant, naming the offending frame."""

    frame: FrameId | None
    invariant: str
    detail: str


class Ontology:
    """A named set of frames.  Holds both lifted sources and the merged result.

    Treat instances as immutable once validated; the merge engine is the
    only writer and it owns its own copy.
    """

    def __init__(self, name: str):
        self.name = name
        self.classes: dict[FrameId, ClassFrame] = {}
        self.slots: dict[FrameId, SlotFrame] = {}
        self.instances: dict[FrameId, InstanceFrame] = {}

    def __repr__(self) -> str:
        return (
            f"Ontology({self.name!r}, {len(self.classes)} classes, "
            f"{len(self.slots)} slots, {len(self.instances)} instances)"
        )

    def cid(self, name: str) -> FrameId:
        return FrameId(self.name, name)

    def add_class(self, frame: ClassFrame) -> ClassFrame:
        if frame.id in self.classes:
            raise ValueError(f"duplicate class {frame.id}")
        self.classes[frame.id] = frame
        return frame

    def add_slot(self, frame: SlotFrame) -> SlotFrame:
        if frame.id in self.slots:
            raise ValueError(f"duplicate slot {frame.id}")
        self.slots[frame.id] = frame
        return frame

    def add_instance(self, frame: InstanceFrame) -> InstanceFrame:
        if frame.id in self.instances:
            raise ValueError(f"duplicate instance {frame.id}")
        self.instances[frame.id] = frame
        return frame

    def frame(self, kind: FrameKind, fid: FrameId):
        table = {
            FrameKind.CLASS: self.classes,
            FrameKind.SLOT: self.slots,
            FrameKind.INSTANCE: self.instances,
        }[kind]
        return table.get(fid)

    def remove(self, kind: FrameKind, fid: FrameId) -> None:
        table = {
            FrameKind.CLASS: self.classes,
            FrameKind.SLOT: self.slots,
            FrameKind.INSTANCE: self.instances,
        }[kind]
        del table[fid]

    def local_names(self, kind: FrameKind) -> set[str]:
        table = {
            FrameKind.CLASS: self.classes,
            FrameKind.SLOT: self.slots,
            FrameKind.INSTANCE: self.instances,
        }[kind]
        return {fid.name for fid in table}

    def subclasses_of(self, cid: FrameId) -> list[FrameId]:
        """Direct subclasses, sorted for deterministic iteration."""
        return sorted(c.id for c in self.classes.values() if cid in c.superclasses)

    def attached_slots(self, cid: FrameId) -> list[SlotFrame]:
        """Slots whose domain includes the class, sorted by id."""
        return sorted(
            (s for s in self.slots.values() if cid in s.domain), key=lambda s: s.id
        )

    def roots(self) -> list[FrameId]:
        """Classes with no declared superclass (direct children of top)."""
        return sorted(c.id for c in self.classes.values() if not c.superclasses)

    def copy(self) -> "Ontology":
        return _copy.deepcopy(self)


def ancestors(onto: Ontology, cid: FrameId) -> list[FrameId]:
    """Transitive superclass closure, breadth-first, sorted by local name
    within each level; never includes the class itself."""
    cls = onto.classes.get(cid)
    if cls is None:
        raise UnknownFrameError(f"unknown class {cid}")
    seen: set[FrameId] = {cid}
    out: list[FrameId] = []
    frontier = sorted(cls.superclasses, key=lambda f: (f.name, f.source))
    while frontier:
        level: list[FrameId] = []
        for sup in frontier:
            if sup in seen:
                continue
            seen.add(sup)
            out.append(sup)
            parent = onto.classes.get(sup)
            if parent is not None:
                level.extend(parent.superclasses)
        frontier = sorted(set(level) - seen, key=lambda f: (f.name, f.source))
    return out


def _cycles(onto: Ontology) -> list[list[FrameId]]:
    """Strongly connected superclass components of size > 1, plus self-loops."""
    index: dict[FrameId, int] = {}
    low: dict[FrameId, int] = {}
    on_stack: set[FrameId] = set()
    stack: list[FrameId] = []
    counter = [0]
    sccs: list[list[FrameId]] = []

    def edges(v: FrameId):
        cls = onto.classes.get(v)
        return [s for s in cls.superclasses if s in onto.classes] if cls else []

    def strongconnect(root: FrameId) -> None:
        work = [(root, iter(edges(root)))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1:
                    sccs.append(sorted(comp))

    for node in sorted(onto.classes):
        if node not in index:
            strongconnect(node)
    for node, cls in sorted(onto.classes.items()):
        if node in cls.superclasses:
            sccs.append([node])
    return sccs


def _closure_tolerant(onto: Ontology, cids) -> set[FrameId]:
    """Superclass closure that tolerates cycles (for validation passes)."""
    seen: set[FrameId] = set()
    queue = deque(cids)
    while queue:
        cid = queue.popleft()
        if cid in seen:
            continue
        seen.add(cid)
        cls = onto.classes.get(cid)
        if cls is not None:
            queue.extend(cls.superclasses)
    return seen


def validate(onto: Ontology) -> list[Violation]:
    """Check every well-formedness invariant; violations are data, not errors."""
    out: list[Violation] = []

    for kind, table in (
        (FrameKind.CLASS, onto.classes),
        (FrameKind.SLOT, onto.slots),
        (FrameKind.INSTANCE, onto.instances),
    ):
        seen_names: dict[str, FrameId] = {}
        for fid in sorted(table):
            if not fid.name:
                out.append(Violation(fid, "name-empty", f"{kind.value} has empty local name"))
            elif fid.name in seen_names:
                out.append(
                    Violation(
                        fid,
                        "name-duplicate",
                        f"{kind.value} name {fid.name!r} also used by {seen_names[fid.name]}",
                    )
                )
            else:
                seen_names[fid.name] = fid

    for cid, cls in sorted(onto.classes.items()):
        for sup in sorted(cls.superclasses):
            if sup not in onto.classes:
                out.append(Violation(cid, "superclass-unresolved", f"superclass {sup} not found"))
    for comp in _cycles(onto):
        names = ", ".join(str(c) for c in comp)
        out.append(Violation(comp[0], "superclass-cycle", f"cycle through {names}"))

    for sid, slot in sorted(onto.slots.items()):
        if slot.min_card < 0:
            out.append(Violation(sid, "cardinality-negative", f"min-card {slot.min_card} < 0"))
        if slot.max_card is not None and slot.max_card < 1:
            out.append(Violation(sid, "cardinality-nonpositive", f"max-card {slot.max_card} < 1"))
        if slot.max_card is not None and slot.min_card > slot.max_card:
            out.append(
                Violation(
                    sid,
                    "cardinality-order",
                    f"min-card {slot.min_card} > max-card {slot.max_card}",
                )
            )
        if slot.kind is SlotKind.DATATYPE:
            if not slot.range.is_datatype:
                out.append(Violation(sid, "range-kind-mismatch", "datatype slot lacks an XSD kind"))
        else:
            if slot.range.is_datatype or not slot.range.classes:
                out.append(
                    Violation(sid, "range-kind-mismatch", "object slot needs a non-empty class range")
                )
            for rc in sorted(slot.range.classes):
                if rc not in onto.classes:
                    out.append(Violation(sid, "range-unresolved", f"range class {rc} not found"))
        for dc in sorted(slot.domain):
            if dc not in onto.classes:
                out.append(Violation(sid, "domain-unresolved", f"domain class {dc} not found"))

    for iid, inst in sorted(onto.instances.items()):
        for t in sorted(inst.types):
            if t not in onto.classes:
                out.append(Violation(iid, "type-unresolved", f"type {t} not found"))
        reachable = _closure_tolerant(onto, [t for t in inst.types if t in onto.classes])
        for slot_id in sorted(inst.values):
            slot = onto.slots.get(slot_id)
            if slot is None:
                out.append(Violation(iid, "value-slot-unresolved", f"slot {slot_id} not found"))
                continue
            if slot.domain and not (slot.domain & reachable):
                out.append(
                    Violation(
                        iid,
                        "value-slot-unattached",
                        f"slot {slot_id} not attached to any type of {iid}",
                    )
                )
            for value in inst.values[slot_id]:
                if value.is_primitive:
                    if value.kind is None or value.lexical is None:
                        out.append(Violation(iid, "value-malformed", "primitive without kind/lexical"))
                    elif not is_valid_lexical(value.kind, value.lexical):
                        out.append(
                            Violation(
                                iid,
                                "value-lexical-invalid",
                                f"{value.lexical!r} not valid {value.kind.value}",
                            )
                        )
                elif value.ref not in onto.instances:
                    out.append(Violation(iid, "value-ref-unresolved", f"reference {value.ref} not found"))

    return out
