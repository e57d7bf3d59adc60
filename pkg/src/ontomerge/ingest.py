"""Lift XML data sources (with or without a schema) into local ontologies.

The mapping: every element with child elements or attributes becomes a
class; nesting between two classes becomes an object property named
``<prefix><child>``; leaf elements and attributes become datatype
properties whose range is inferred from the observed values.  An optional
restricted XSD profile (sequence/element/attribute with built-in types)
bypasses inference.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import MalformedXmlError, MixedRootsError
from .model import (
    KIND_ORDER,
    ClassFrame,
    FrameId,
    InstanceFrame,
    Ontology,
    RangeSpec,
    SlotFrame,
    SlotKind,
    Value,
    XsdKind,
    is_valid_lexical,
)

log = logging.getLogger(__name__)

XSD_NS = "http://www.w3.org/2001/XMLSchema"

# Built-in XSD types admitted by the restricted profile.  Anything else
# maps to string with a warning.
_XSD_TYPE_MAP = {
    "string": XsdKind.STRING,
    "integer": XsdKind.INTEGER,
    "int": XsdKind.INTEGER,
    "long": XsdKind.INTEGER,
    "short": XsdKind.INTEGER,
    "decimal": XsdKind.DECIMAL,
    "NCName": XsdKind.NCNAME,
    "NMTOKEN": XsdKind.NMTOKEN,
}


@dataclass
class LeafField:
    """A simple-content child or attribute observed on an element."""

    name: str
    kind: XsdKind
    occurs_min: int = 1
    occurs_max: int | None = 1
    declared: bool = False  # kind came from an XSD, not from values


@dataclass
class ElementSchema:
    """Union schema of one element name across all documents."""

    name: str
    children: list["ElementSchema"] = field(default_factory=list)
    leaf_fields: list[LeafField] = field(default_factory=list)
    repeatable: bool = False

    def walk(self):
        """All distinct element schemas reachable from this one."""
        seen: dict[str, ElementSchema] = {}
        stack = [self]
        while stack:
            node = stack.pop()
            if node.name in seen:
                continue
            seen[node.name] = node
            stack.extend(node.children)
        return [seen[k] for k in sorted(seen)]


@dataclass
class LiftConfig:
    object_property_prefix: str = "has"
    root_as_class: bool = True
    with_instances: bool = False
    synonym_table_path: str | None = None


def _local(tag: str) -> str:
    """Strip any namespace; only local names are used."""
    return tag.rpartition("}")[2]


def _parse_documents(documents: list[str]) -> list[ET.Element]:
    if not documents:
        raise MalformedXmlError("no documents given")
    roots = []
    for i, text in enumerate(documents):
        try:
            roots.append(ET.fromstring(text))
        except ET.ParseError as exc:
            line, column = exc.position
            raise MalformedXmlError(
                f"document {i}: line {line}, column {column}: {exc.msg}"
            ) from exc
    names = {_local(r.tag) for r in roots}
    if len(names) > 1:
        raise MixedRootsError(f"documents have different roots: {sorted(names)}")
    return roots


def _text_of(elem: ET.Element) -> str:
    return (elem.text or "").strip()


class _ElementStats:
    """Accumulated evidence about one element name."""

    def __init__(self, name: str):
        self.name = name
        self.complex = False
        self.occurrences = 0
        self.child_order: dict[str, None] = {}
        self.repeatable = False
        # leaf name -> [present_in, max_per_occurrence, values]
        self.leaves: dict[str, list] = {}
        self.leaf_order: dict[str, None] = {}

    def leaf(self, name: str):
        self.leaf_order.setdefault(name, None)
        return self.leaves.setdefault(name, [0, 1, []])


def _scan(roots: list[ET.Element]) -> dict[str, _ElementStats]:
    stats: dict[str, _ElementStats] = {}

    def stat(name: str) -> _ElementStats:
        return stats.setdefault(name, _ElementStats(name))

    # first pass: an element name is complex if any occurrence has child
    # elements or attributes
    def classify(elem: ET.Element):
        s = stat(_local(elem.tag))
        if len(elem) or elem.attrib:
            s.complex = True
        for child in elem:
            classify(child)

    for root in roots:
        classify(root)
        stat(_local(root.tag)).complex = True  # the root is always structural

    # second pass: per-occurrence bookkeeping on complex elements
    def visit(elem: ET.Element):
        s = stat(_local(elem.tag))
        s.occurrences += 1
        by_name: dict[str, list[ET.Element]] = {}
        for child in elem:
            by_name.setdefault(_local(child.tag), []).append(child)
        if _text_of(elem) and by_name:
            log.warning("mixed content in <%s> ignored", s.name)
        for name, group in by_name.items():
            if stats[name].complex:
                s.child_order.setdefault(name, None)
                if len(group) > 1:
                    stats[name].repeatable = True
                for child in group:
                    visit(child)
            else:
                if any(c.attrib or len(c) for c in group):
                    log.warning("leaf <%s> with structure ignored", name)
                entry = s.leaf(name)
                entry[0] += 1
                if len(group) > 1:
                    entry[1] = None
                entry[2].extend(_text_of(c) for c in group)
        for attr, value in sorted(elem.attrib.items()):
            entry = s.leaf(_local(attr))
            entry[0] += 1
            entry[2].append(value)

    for root in roots:
        visit(root)
    return stats


def infer_schema(documents: list[str]) -> ElementSchema:
    """Union schema over all documents.

    An element is repeatable if it occurs more than once under any single
    parent occurrence; a field is optional if it is absent in any
    occurrence of its element.
    """
    roots = _parse_documents(documents)
    stats = _scan(roots)

    schemas: dict[str, ElementSchema] = {
        name: ElementSchema(name, repeatable=s.repeatable)
        for name, s in stats.items()
        if s.complex
    }
    for name, s in stats.items():
        if not s.complex:
            continue
        schema = schemas[name]
        schema.children = [schemas[c] for c in s.child_order]
        for leaf_name in s.leaf_order:
            present_in, max_occ, values = s.leaves[leaf_name]
            schema.leaf_fields.append(
                LeafField(
                    name=leaf_name,
                    kind=infer_datatype(values),
                    occurs_min=1 if present_in == s.occurrences else 0,
                    occurs_max=max_occ,
                )
            )
    return schemas[_local(roots[0].tag)]


def infer_datatype(values: list[str]) -> XsdKind:
    """First kind in the fixed order whose lexical space admits every value."""
    if not values:
        raise ValueError("empty input: cannot infer a datatype from no values")
    for kind in KIND_ORDER:
        if all(is_valid_lexical(kind, v) for v in values):
            return kind
    return XsdKind.STRING


def read_xsd(text: str) -> ElementSchema:
    """Read a schema in the restricted XSD profile.

    Supported: global and inline ``xs:element`` with ``xs:complexType`` /
    ``xs:sequence`` / ``xs:attribute`` and built-in simple types.  The
    root is the global element no other element references.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedXmlError(f"line {line}, column {column}: {exc.msg}") from exc
    if _local(root.tag) != "schema":
        raise MalformedXmlError(f"expected an xs:schema document, got <{_local(root.tag)}>")

    def q(name: str) -> str:
        return f"{{{XSD_NS}}}{name}"

    def map_type(type_attr: str | None) -> XsdKind:
        if type_attr is None:
            return XsdKind.STRING
        local = type_attr.rpartition(":")[2]
        kind = _XSD_TYPE_MAP.get(local)
        if kind is None:
            log.warning("unknown XSD type %s mapped to string", type_attr)
            return XsdKind.STRING
        return kind

    globals_: dict[str, ET.Element] = {}
    for elem in root.findall(q("element")):
        name = elem.get("name")
        if name:
            globals_[name] = elem

    schemas: dict[str, ElementSchema] = {}
    referenced: set[str] = set()

    def build(elem: ET.Element) -> ElementSchema:
        name = elem.get("name")
        if name in schemas:
            return schemas[name]
        schema = schemas.setdefault(name, ElementSchema(name))
        ctype = elem.find(q("complexType"))
        if ctype is None:
            # a global element with a simple type only appears as a leaf
            return schema
        seq = ctype.find(q("sequence"))
        for child in seq.findall(q("element")) if seq is not None else []:
            ref = child.get("ref")
            max_occurs = child.get("maxOccurs", "1")
            min_occurs = int(child.get("minOccurs", "1"))
            repeat = max_occurs == "unbounded" or int(max_occurs or "1") > 1
            if ref is not None:
                referenced.add(ref)
                target = globals_.get(ref)
                if target is None:
                    raise MalformedXmlError(f"element ref {ref!r} has no declaration")
                sub = build(target)
                if repeat:
                    sub.repeatable = True
                if sub not in schema.children:
                    schema.children.append(sub)
                continue
            cname = child.get("name")
            if child.find(q("complexType")) is not None:
                sub = build(child)
                if repeat:
                    sub.repeatable = True
                if sub not in schema.children:
                    schema.children.append(sub)
            else:
                schema.leaf_fields.append(
                    LeafField(
                        name=cname,
                        kind=map_type(child.get("type")),
                        occurs_min=min(min_occurs, 1),
                        occurs_max=None if repeat else 1,
                        declared=True,
                    )
                )
        for attr in ctype.findall(q("attribute")):
            required = attr.get("use") == "required"
            schema.leaf_fields.append(
                LeafField(
                    name=attr.get("name"),
                    kind=map_type(attr.get("type")),
                    occurs_min=1 if required else 0,
                    occurs_max=1,
                    declared=True,
                )
            )
        return schema

    for elem in globals_.values():
        build(elem)
    roots = [n for n in globals_ if n not in referenced]
    if not roots:
        raise MalformedXmlError("schema has no root element (all elements referenced)")
    return schemas[roots[0]]


def lift(
    schema: ElementSchema,
    documents: list[str],
    config: LiftConfig | None = None,
    name: str = "source",
) -> Ontology:
    """Build a local ontology from a schema and its documents."""
    config = config or LiftConfig()
    onto = Ontology(name)
    nodes = schema.walk()
    skip = set() if config.root_as_class else {schema.name}

    for node in nodes:
        if node.name in skip:
            continue
        onto.add_class(ClassFrame(onto.cid(node.name)))

    # object properties: one per complex child name, domains accumulate
    for node in nodes:
        if node.name in skip:
            continue
        for child in node.children:
            if child.name in skip:
                continue
            slot_name = config.object_property_prefix + child.name
            sid = onto.cid(slot_name)
            slot = onto.slots.get(sid)
            if slot is None:
                slot = onto.add_slot(
                    SlotFrame(
                        sid,
                        SlotKind.OBJECT,
                        range=RangeSpec.of_classes([onto.cid(child.name)]),
                        min_card=0,
                        max_card=None if child.repeatable else 1,
                    )
                )
            else:
                slot.range = RangeSpec.of_classes(
                    set(slot.range.classes) | {onto.cid(child.name)}
                )
                if child.repeatable:
                    slot.max_card = None
            slot.domain.add(onto.cid(node.name))

    # datatype properties: one per leaf name, kind over all observed values
    observed: dict[str, list[str]] = {}
    if documents:
        roots = _parse_documents(documents)
        stats = _scan(roots)
        for node_name, s in stats.items():
            if node_name in skip:
                continue
            for leaf_name, (_, _, values) in s.leaves.items():
                observed.setdefault(leaf_name, []).extend(values)

    leaf_specs: dict[str, list[tuple[str, LeafField]]] = {}
    for node in nodes:
        if node.name in skip:
            continue
        for leaf in node.leaf_fields:
            leaf_specs.setdefault(leaf.name, []).append((node.name, leaf))

    for leaf_name in sorted(leaf_specs):
        holders = leaf_specs[leaf_name]
        declared = [leaf.kind for _, leaf in holders if leaf.declared]
        if declared:
            kind = declared[0]
            if any(k != kind for k in declared):
                log.warning("conflicting declared kinds for %s; using %s", leaf_name, kind.value)
        else:
            kind = infer_datatype(observed.get(leaf_name) or [""])
        onto.add_slot(
            SlotFrame(
                onto.cid(leaf_name),
                SlotKind.DATATYPE,
                domain={onto.cid(holder) for holder, _ in holders},
                range=RangeSpec.datatype(kind),
                min_card=min(leaf.occurs_min for _, leaf in holders),
                max_card=None
                if any(leaf.occurs_max is None for _, leaf in holders)
                else 1,
            )
        )

    if config.with_instances and documents:
        _lift_instances(onto, schema, documents, skip)
    return onto


def _lift_instances(onto: Ontology, schema: ElementSchema, documents: list[str], skip) -> None:
    roots = _parse_documents(documents)
    complex_names = {n.name for n in schema.walk()} - set(skip)
    counters: dict[str, int] = {}

    def visit(elem: ET.Element) -> FrameId | None:
        ename = _local(elem.tag)
        if ename not in complex_names:
            return None
        counters[ename] = counters.get(ename, 0) + 1
        inst = onto.add_instance(
            InstanceFrame(
                onto.cid(f"{ename}{counters[ename]}"), types={onto.cid(ename)}
            )
        )
        for attr, value in sorted(elem.attrib.items()):
            sid = onto.cid(_local(attr))
            slot = onto.slots.get(sid)
            if slot is not None:
                inst.values.setdefault(sid, []).append(
                    Value.primitive(value, slot.range.kind)
                )
        for child in elem:
            cname = _local(child.tag)
            if cname in complex_names:
                ref = visit(child)
                sid = next(
                    (
                        s.id
                        for s in onto.slots.values()
                        if s.kind is SlotKind.OBJECT and onto.cid(cname) in s.range.classes
                    ),
                    None,
                )
                if ref is not None and sid is not None:
                    inst.values.setdefault(sid, []).append(Value.reference(ref))
            else:
                sid = onto.cid(cname)
                slot = onto.slots.get(sid)
                if slot is not None:
                    inst.values.setdefault(sid, []).append(
                        Value.primitive(_text_of(child), slot.range.kind)
                    )
        return inst.id

    for root in roots:
        visit(root)
