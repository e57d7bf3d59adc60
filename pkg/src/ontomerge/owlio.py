"""OWL-subset reader/writer and the canonical text export.

The OWL profile covers exactly what the workbench produces: class
declarations with subclass-of, object/datatype properties with domains
and ranges, named individuals with typed value assertions, and
cardinality bounds as annotations in the ``om:`` namespace.  Unknown
constructs are reported as warnings, never failures.  The writer is
deterministic byte for byte; write → read → write is a fixpoint.

The canonical export is a sorted line-per-fact text form used for golden
comparisons; its grammar is documented in docs/formats.md.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .errors import MalformedXmlError, UnresolvableReferenceError
from .model import (
    ClassFrame,
    FrameId,
    InstanceFrame,
    Ontology,
    RangeSpec,
    SlotFrame,
    SlotKind,
    Value,
    XsdKind,
)

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
OM_NS = "urn:ontomerge#"
BASE_PREFIX = "urn:ontomerge:"


def _card_suffix(slot: SlotFrame) -> str:
    if slot.min_card == 0 and slot.max_card is None:
        return ""
    upper = "n" if slot.max_card is None else str(slot.max_card)
    return f" card={slot.min_card}..{upper}"


def _value_token(value: Value) -> str:
    if value.is_primitive:
        return f"lit:{value.kind.value}:{value.lexical}"
    return f"ref:{value.ref.name}"


def write_canonical(onto: Ontology) -> str:
    """Deterministic line-per-fact form: sorted by kind, then name."""
    lines = [f"ontology {onto.name}"]
    for cls in sorted(onto.classes.values(), key=lambda c: c.id):
        subs = ",".join(sorted(s.name for s in cls.superclasses))
        lines.append(f"class {cls.id.name}" + (f" sub={subs}" if subs else ""))
    for kind_label, slot_kind in (("objprop", SlotKind.OBJECT), ("dtprop", SlotKind.DATATYPE)):
        for slot in sorted(onto.slots.values(), key=lambda s: s.id):
            if slot.kind is not slot_kind:
                continue
            domain = ",".join(sorted(d.name for d in slot.domain))
            if slot.kind is SlotKind.OBJECT:
                rng = ",".join(sorted(r.name for r in slot.range.classes))
            else:
                rng = slot.range.kind.value
            lines.append(
                f"{kind_label} {slot.id.name} domain={domain} range={rng}{_card_suffix(slot)}"
            )
    for inst in sorted(onto.instances.values(), key=lambda i: i.id):
        types = ",".join(sorted(t.name for t in inst.types))
        lines.append(f"instance {inst.id.name} types={types}")
    value_lines = []
    for inst in sorted(onto.instances.values(), key=lambda i: i.id):
        for slot_id in sorted(inst.values):
            for value in sorted(inst.values[slot_id], key=_value_token):
                value_lines.append(
                    f"value {inst.id.name} {slot_id.name} {_value_token(value)}"
                )
    lines.extend(value_lines)
    return "\n".join(lines) + "\n"


def write_owl(onto: Ontology) -> str:
    """Serialize to the OWL-subset profile, deterministically."""
    base = BASE_PREFIX + onto.name
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<rdf:RDF xmlns:rdf="{RDF_NS}"',
        f'         xmlns:rdfs="{RDFS_NS}"',
        f'         xmlns:owl="{OWL_NS}"',
        f'         xmlns:om="{OM_NS}"',
        f'         xml:base={quoteattr(base)}>',
        f'  <owl:Ontology rdf:about={quoteattr(base)}/>',
    ]

    def card_lines(slot: SlotFrame) -> list[str]:
        if slot.min_card == 0 and slot.max_card is None:
            return []
        upper = "unbounded" if slot.max_card is None else str(slot.max_card)
        return [
            f"    <om:minCard>{slot.min_card}</om:minCard>",
            f"    <om:maxCard>{upper}</om:maxCard>",
        ]

    for cls in sorted(onto.classes.values(), key=lambda c: c.id):
        subs = sorted(s.name for s in cls.superclasses)
        if not subs:
            out.append(f'  <owl:Class rdf:about={quoteattr("#" + cls.id.name)}/>')
            continue
        out.append(f'  <owl:Class rdf:about={quoteattr("#" + cls.id.name)}>')
        for sub in subs:
            out.append(f'    <rdfs:subClassOf rdf:resource={quoteattr("#" + sub)}/>')
        out.append("  </owl:Class>")

    for tag, slot_kind in (
        ("owl:ObjectProperty", SlotKind.OBJECT),
        ("owl:DatatypeProperty", SlotKind.DATATYPE),
    ):
        for slot in sorted(onto.slots.values(), key=lambda s: s.id):
            if slot.kind is not slot_kind:
                continue
            out.append(f'  <{tag} rdf:about={quoteattr("#" + slot.id.name)}>')
            for d in sorted(x.name for x in slot.domain):
                out.append(f'    <rdfs:domain rdf:resource={quoteattr("#" + d)}/>')
            if slot.kind is SlotKind.OBJECT:
                for r in sorted(x.name for x in slot.range.classes):
                    out.append(f'    <rdfs:range rdf:resource={quoteattr("#" + r)}/>')
            else:
                out.append(
                    f'    <rdfs:range rdf:resource={quoteattr(XSD_NS + slot.range.kind.value)}/>'
                )
            out.extend(card_lines(slot))
            out.append(f"  </{tag}>")

    for inst in sorted(onto.instances.values(), key=lambda i: i.id):
        out.append(f'  <owl:NamedIndividual rdf:about={quoteattr("#" + inst.id.name)}>')
        for t in sorted(x.name for x in inst.types):
            out.append(f'    <rdf:type rdf:resource={quoteattr("#" + t)}/>')
        for slot_id in sorted(inst.values):
            for value in sorted(inst.values[slot_id], key=_value_token):
                slot_attr = quoteattr(slot_id.name)
                if value.is_primitive:
                    out.append(
                        f"    <om:value om:slot={slot_attr} om:kind="
                        f'{quoteattr(value.kind.value)}>{escape(value.lexical)}</om:value>'
                    )
                else:
                    out.append(
                        f"    <om:value om:slot={slot_attr} "
                        f'rdf:resource={quoteattr("#" + value.ref.name)}/>'
                    )
        out.append("  </owl:NamedIndividual>")

    out.append("</rdf:RDF>")
    return "\n".join(out) + "\n"


def _q(ns: str, tag: str) -> str:
    return f"{{{ns}}}{tag}"


def _local_ref(attr: str | None) -> str | None:
    if attr is None:
        return None
    return attr.rpartition("#")[2]


def read_owl(text: str) -> tuple[Ontology, list[str]]:
    """Parse the OWL-subset profile; unknown constructs become warnings."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedXmlError(f"line {line}, column {column}: {exc.msg}") from exc
    if root.tag != _q(RDF_NS, "RDF"):
        raise MalformedXmlError(f"expected rdf:RDF root, got {root.tag}")

    warnings: list[str] = []
    name = None
    for elem in root:
        if elem.tag == _q(OWL_NS, "Ontology"):
            about = elem.get(_q(RDF_NS, "about")) or ""
            name = about[len(BASE_PREFIX):] if about.startswith(BASE_PREFIX) else about
    if not name:
        raise MalformedXmlError("missing owl:Ontology declaration")
    onto = Ontology(name)

    def fid(local: str) -> FrameId:
        return FrameId(name, local)

    pending_cards: dict[FrameId, list[int | None]] = {}

    for elem in root:
        about = _local_ref(elem.get(_q(RDF_NS, "about")))
        if elem.tag == _q(OWL_NS, "Ontology"):
            continue
        if elem.tag == _q(OWL_NS, "Class"):
            cls = onto.add_class(ClassFrame(fid(about)))
            for child in elem:
                if child.tag == _q(RDFS_NS, "subClassOf"):
                    cls.superclasses.add(fid(_local_ref(child.get(_q(RDF_NS, "resource")))))
                else:
                    warnings.append(f"unknown construct {child.tag} in class {about}")
        elif elem.tag in (_q(OWL_NS, "ObjectProperty"), _q(OWL_NS, "DatatypeProperty")):
            is_object = elem.tag == _q(OWL_NS, "ObjectProperty")
            slot = SlotFrame(
                fid(about),
                SlotKind.OBJECT if is_object else SlotKind.DATATYPE,
                range=RangeSpec.of_classes(set()) if is_object else RangeSpec.datatype(XsdKind.STRING),
            )
            onto.add_slot(slot)
            min_card, max_card = 0, None
            for child in elem:
                if child.tag == _q(RDFS_NS, "domain"):
                    slot.domain.add(fid(_local_ref(child.get(_q(RDF_NS, "resource")))))
                elif child.tag == _q(RDFS_NS, "range"):
                    ref = child.get(_q(RDF_NS, "resource")) or ""
                    if is_object:
                        slot.range = RangeSpec.of_classes(
                            set(slot.range.classes) | {fid(_local_ref(ref))}
                        )
                    else:
                        kind_name = ref[len(XSD_NS):] if ref.startswith(XSD_NS) else ref
                        try:
                            slot.range = RangeSpec.datatype(XsdKind(kind_name))
                        except ValueError:
                            warnings.append(
                                f"unknown datatype {ref} on {about} mapped to string"
                            )
                            slot.range = RangeSpec.datatype(XsdKind.STRING)
                elif child.tag == _q(OM_NS, "minCard"):
                    min_card = int(child.text)
                elif child.tag == _q(OM_NS, "maxCard"):
                    max_card = None if child.text == "unbounded" else int(child.text)
                else:
                    warnings.append(f"unknown construct {child.tag} in property {about}")
            slot.min_card, slot.max_card = min_card, max_card
        elif elem.tag == _q(OWL_NS, "NamedIndividual"):
            inst = onto.add_instance(InstanceFrame(fid(about)))
            for child in elem:
                if child.tag == _q(RDF_NS, "type"):
                    inst.types.add(fid(_local_ref(child.get(_q(RDF_NS, "resource")))))
                elif child.tag == _q(OM_NS, "value"):
                    slot_id = fid(child.get(_q(OM_NS, "slot")))
                    ref = child.get(_q(RDF_NS, "resource"))
                    if ref is not None:
                        value = Value.reference(fid(_local_ref(ref)))
                    else:
                        kind = XsdKind(child.get(_q(OM_NS, "kind"), "string"))
                        value = Value.primitive(child.text or "", kind)
                    inst.values.setdefault(slot_id, []).append(value)
                else:
                    warnings.append(f"unknown construct {child.tag} in individual {about}")
        else:
            warnings.append(f"unknown construct {elem.tag}")

    _check_references(onto)
    return onto, warnings


def _check_references(onto: Ontology) -> None:
    for cls in onto.classes.values():
        for sup in cls.superclasses:
            if sup not in onto.classes:
                raise UnresolvableReferenceError(f"{cls.id} references undeclared {sup}")
    for slot in onto.slots.values():
        for d in slot.domain:
            if d not in onto.classes:
                raise UnresolvableReferenceError(f"{slot.id} references undeclared {d}")
        for r in slot.range.classes:
            if r not in onto.classes:
                raise UnresolvableReferenceError(f"{slot.id} references undeclared {r}")
    for inst in onto.instances.values():
        for t in inst.types:
            if t not in onto.classes:
                raise UnresolvableReferenceError(f"{inst.id} references undeclared {t}")
        for slot_id, values in inst.values.items():
            if slot_id not in onto.slots:
                raise UnresolvableReferenceError(f"{inst.id} references undeclared {slot_id}")
            for value in values:
                if not value.is_primitive and value.ref not in onto.instances:
                    raise UnresolvableReferenceError(
                        f"{inst.id} references undeclared {value.ref}"
                    )


def read_owl_file(path: str | Path) -> tuple[Ontology, list[str]]:
    return read_owl(Path(path).read_text(encoding="utf-8"))


def write_owl_file(onto: Ontology, path: str | Path) -> None:
    Path(path).write_text(write_owl(onto), encoding="utf-8")
