"""Shared fixtures: lifted bibliography sources and a random-ontology generator."""

import random

import pytest

from ontomerge.fixturedata import NIAGARA, RUBY, SIGMOD, fixture_text
from ontomerge.ingest import infer_schema, lift, read_xsd
from ontomerge.model import (
    ClassFrame,
    InstanceFrame,
    Ontology,
    RangeSpec,
    SlotFrame,
    SlotKind,
    Value,
    XsdKind,
)


def lift_ruby() -> Ontology:
    return lift(
        read_xsd(fixture_text("ruby_bibliography.xsd")),
        [fixture_text("ruby_bibliography.xml")],
        name=RUBY,
    )


def lift_niagara() -> Ontology:
    docs = [fixture_text("niagara_bib.xml")]
    return lift(infer_schema(docs), docs, name=NIAGARA)


def lift_sigmod() -> Ontology:
    docs = [fixture_text("sigmod_record.xml")]
    return lift(infer_schema(docs), docs, name=SIGMOD)


@pytest.fixture()
def ruby() -> Ontology:
    return lift_ruby()


@pytest.fixture()
def niagara() -> Ontology:
    return lift_niagara()


@pytest.fixture()
def sigmod() -> Ontology:
    return lift_sigmod()


# name pools kept lexically far apart so cross-name similarities stay low
WORDS = [
    "applepie",
    "bluestone",
    "cactusjack",
    "dumpling",
    "elderberry",
    "fogmachine",
    "grapevine",
    "hummingbird",
]
SLOT_WORDS = [
    "quicksand",
    "riverbed",
    "snowplow",
    "tumbleweed",
    "underbrush",
    "vulcanize",
    "watermelon",
    "xylophone",
]


def random_ontology(
    rng: random.Random,
    name: str,
    max_classes: int = 8,
    max_slots: int = 8,
    max_instances: int = 6,
) -> Ontology:
    """A valid random ontology with a DAG hierarchy and conforming instances."""
    onto = Ontology(name)
    class_count = rng.randint(1, max_classes)
    class_ids = []
    for i in range(class_count):
        cid = onto.cid(WORDS[i])
        supers = {class_ids[j] for j in range(len(class_ids)) if rng.random() < 0.3}
        onto.add_class(ClassFrame(cid, superclasses=supers))
        class_ids.append(cid)

    slot_count = rng.randint(0, max_slots)
    slot_ids = []
    for i in range(slot_count):
        sid = onto.cid(SLOT_WORDS[i])
        domain = {rng.choice(class_ids)}
        if rng.random() < 0.5:
            slot = SlotFrame(
                sid,
                SlotKind.OBJECT,
                domain=domain,
                range=RangeSpec.of_classes({rng.choice(class_ids)}),
                min_card=0,
                max_card=None if rng.random() < 0.5 else 1,
            )
        else:
            slot = SlotFrame(
                sid,
                SlotKind.DATATYPE,
                domain=domain,
                range=RangeSpec.datatype(rng.choice(list(XsdKind))),
                min_card=0,
                max_card=None if rng.random() < 0.5 else rng.randint(1, 3),
            )
        onto.add_slot(slot)
        slot_ids.append(sid)

    instance_count = rng.randint(0, max_instances)
    instance_ids = []
    for i in range(instance_count):
        iid = onto.cid(f"item{i}")
        type_id = rng.choice(class_ids)
        inst = InstanceFrame(iid, types={type_id})
        onto.add_instance(inst)
        instance_ids.append(iid)
    # second pass: values on slots attached to the instance's type closure
    from ontomerge.model import ancestors

    lexicons = {
        XsdKind.STRING: ["hello world", "x y"],
        XsdKind.INTEGER: ["1", "42"],
        XsdKind.DECIMAL: ["1.5", "2.25"],
        XsdKind.NCNAME: ["alpha", "beta"],
        XsdKind.NMTOKEN: ["7a", "8-b"],
    }
    for iid in instance_ids:
        inst = onto.instances[iid]
        reachable = set(inst.types)
        for t in inst.types:
            reachable.update(ancestors(onto, t))
        for sid in slot_ids:
            slot = onto.slots[sid]
            if not (slot.domain & reachable) or rng.random() < 0.5:
                continue
            count = 1 if slot.max_card == 1 else rng.randint(1, 2)
            values = []
            for _ in range(count):
                if slot.kind is SlotKind.DATATYPE:
                    values.append(
                        Value.primitive(rng.choice(lexicons[slot.range.kind]), slot.range.kind)
                    )
                else:
                    target_types = set(slot.range.classes)
                    for r in slot.range.classes:
                        target_types.update(
                            c.id
                            for c in onto.classes.values()
                            if r in ancestors(onto, c.id) or r == c.id
                        )
                    candidates = [
                        x for x in instance_ids if onto.instances[x].types & target_types
                    ]
                    if candidates:
                        values.append(Value.reference(rng.choice(candidates)))
            if values:
                deduped = []
                for v in values:
                    if v not in deduped:
                        deduped.append(v)
                inst.values[sid] = deduped
    return onto
