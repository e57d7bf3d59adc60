"""Suggestion cycle, conflict detection, focus, preferred-source resolution."""

import random

import pytest

from conftest import lift_niagara, lift_ruby, random_ontology
from ontomerge.advisor import Advisor, refocus
from ontomerge.engine import AppliedRecord, MergeSession
from ontomerge.errors import NoPreferredSourceError
from ontomerge.fixturedata import NIAGARA, RUBY
from ontomerge.model import (
    ClassFrame,
    FrameId,
    FrameKind,
    InstanceFrame,
    Ontology,
    RangeSpec,
    SlotFrame,
    SlotKind,
    Value,
    XsdKind,
    validate,
)
from ontomerge.operations import (
    AddSuperclass,
    CreateClass,
    MergeClasses,
    MergeInstances,
    MergeSlots,
    ShallowCopy,
)
from ontomerge.owlio import write_canonical
from ontomerge.suggestions import ConflictKind, ExplanationKind


def gender_sex_sources():
    o1, o2 = Ontology("one"), Ontology("two")
    for onto, range_name in ((o1, "Gender"), (o2, "Sex")):
        onto.add_class(ClassFrame(onto.cid("Person")))
        onto.add_class(ClassFrame(onto.cid(range_name)))
        onto.add_slot(
            SlotFrame(
                onto.cid("sex"),
                SlotKind.OBJECT,
                domain={onto.cid("Person")},
                range=RangeSpec.of_classes({onto.cid(range_name)}),
            )
        )
    return o1, o2


def bib_advisor(**kwargs) -> Advisor:
    return Advisor(MergeSession([lift_ruby(), lift_niagara()], **kwargs))


class TestStep:
    def test_slot_merge_yields_class_followup_suggestion(self):
        o1, o2 = gender_sex_sources()
        advisor = Advisor(MergeSession([o1, o2]))
        suggestions, _ = advisor.step(MergeSlots(o1.cid("sex"), o2.cid("sex")))
        followups = [
            s
            for s in suggestions
            if isinstance(s.proposed, MergeClasses)
            and {s.proposed.a.name, s.proposed.b.name} == {"Gender", "Sex"}
        ]
        assert followups, "expected a merge-classes(Gender, Sex) suggestion"
        assert followups[0].explanations[0].kind is ExplanationKind.SLOT_MERGE_FOLLOWUP

    def test_applied_suggestion_disappears(self):
        advisor = bib_advisor()
        advisor.seed()
        target = next(
            s
            for s in advisor.suggestions
            if isinstance(s.proposed, MergeClasses)
            and s.proposed.a.name == "author"
            and s.proposed.b.name == "author"
        )
        suggestions, _ = advisor.step(target.proposed)
        assert all(s.key != target.key for s in suggestions)

    def test_unrelated_op_preserves_suggestion_set(self):
        advisor = bib_advisor()
        before = {s.key for s in advisor.seed()}
        suggestions, _ = advisor.step(CreateClass("Publication"))
        assert {s.key for s in suggestions} == before

    def test_step_never_returns_unresolvable_suggestions(self):
        advisor = bib_advisor()
        advisor.seed()
        ops = [
            MergeClasses(FrameId(RUBY, "author"), FrameId(NIAGARA, "author")),
            MergeSlots(FrameId(RUBY, "id"), FrameId(NIAGARA, "id")),
        ]
        for op in ops:
            suggestions, _ = advisor.step(op)
            for s in suggestions:
                assert advisor._still_valid(s)


class TestDetectConflicts:
    def test_fresh_session_is_clean(self):
        advisor = bib_advisor()
        assert advisor.detect_conflicts() == []

    def test_redundant_subclass(self):
        advisor = bib_advisor()
        advisor.step(CreateClass("apex"))
        advisor.step(CreateClass("middle"))
        advisor.step(CreateClass("leaf"))
        merged = advisor.session.merged.name
        advisor.step(AddSuperclass(FrameId(merged, "middle"), FrameId(merged, "apex")))
        advisor.step(AddSuperclass(FrameId(merged, "leaf"), FrameId(merged, "middle")))
        _, conflicts = advisor.step(
            AddSuperclass(FrameId(merged, "leaf"), FrameId(merged, "apex"))
        )
        redundant = [c for c in conflicts if c.kind is ConflictKind.REDUNDANT_SUBCLASS]
        assert len(redundant) == 1
        resolution = redundant[0].resolutions[0]
        advisor.step(resolution)
        assert all(
            c.kind is not ConflictKind.REDUNDANT_SUBCLASS for c in advisor.detect_conflicts()
        )

    def test_cardinality_violation_from_instance_merge(self):
        def build(name, value):
            o = Ontology(name)
            o.add_class(ClassFrame(o.cid("crate")))
            o.add_slot(
                SlotFrame(
                    o.cid("label"),
                    SlotKind.DATATYPE,
                    domain={o.cid("crate")},
                    range=RangeSpec.datatype(XsdKind.NCNAME),
                    min_card=0,
                    max_card=1,
                )
            )
            inst = o.add_instance(InstanceFrame(o.cid("box"), types={o.cid("crate")}))
            inst.values[o.cid("label")] = [Value.primitive(value, XsdKind.NCNAME)]
            return o

        o1, o2 = build("one", "alpha"), build("two", "beta")
        advisor = Advisor(MergeSession([o1, o2]))
        advisor.step(MergeClasses(o1.cid("crate"), o2.cid("crate")))
        advisor.step(MergeSlots(o1.cid("label"), o2.cid("label")))
        _, conflicts = advisor.step(MergeInstances(o1.cid("box"), o2.cid("box")))
        cards = [c for c in conflicts if c.kind is ConflictKind.CARDINALITY_VIOLATION]
        assert len(cards) == 1
        assert cards[0].resolutions, "a conflict must offer at least one resolution"

    def test_injected_dangling_reference_detected(self):
        advisor = bib_advisor()
        advisor.step(CreateClass("floating"))
        merged = advisor.session.merged
        merged.classes[FrameId(merged.name, "floating")].superclasses.add(
            FrameId(merged.name, "ghost")
        )
        kinds = {c.kind for c in advisor.detect_conflicts()}
        assert ConflictKind.DANGLING_REFERENCE in kinds

    def test_injected_name_collision_detected(self):
        advisor = bib_advisor()
        advisor.step(CreateClass("publisher"))
        merged = advisor.session.merged
        # direct mutation: a foreign-sourced frame with the same local name
        merged.classes[FrameId(RUBY, "publisher")] = ClassFrame(FrameId(RUBY, "publisher"))
        collisions = [
            c for c in advisor.detect_conflicts() if c.kind is ConflictKind.NAME_COLLISION
        ]
        assert len(collisions) == 1
        assert collisions[0].resolutions

    def test_range_violation_detected(self):
        o1, o2 = gender_sex_sources()
        advisor = Advisor(MergeSession([o1, o2]))
        advisor.step(MergeSlots(o1.cid("sex"), o2.cid("sex")))
        merged = advisor.session.merged
        # inject: an instance whose sex value is typed outside the range
        person = merged.classes[FrameId(merged.name, "Gender")]
        merged.add_instance(
            InstanceFrame(FrameId(merged.name, "p1"), types=set())
        )
        stray = merged.add_instance(
            InstanceFrame(FrameId(merged.name, "sturdy"), types=set())
        )
        advisor.session.merged.instances[FrameId(merged.name, "p1")].values[
            FrameId(merged.name, "sex")
        ] = [Value.primitive("oops", XsdKind.STRING)]
        kinds = {c.kind for c in advisor.detect_conflicts()}
        assert ConflictKind.RANGE_VIOLATION in kinds


class TestRefocus:
    def test_empty_history_keeps_order(self):
        advisor = bib_advisor()
        seeded = advisor.seed()
        assert refocus(seeded, []) == seeded

    def test_recent_frames_move_forward(self):
        advisor = bib_advisor()
        advisor.seed()
        author_record = AppliedRecord(
            op=None, touched={FrameId(RUBY, "firstname"), FrameId(NIAGARA, "firstname")}
        )
        reordered = refocus(advisor.suggestions, [author_record])
        assert reordered[0].related_frames & author_record.touched
        moved = reordered[0]
        assert any(e.kind is ExplanationKind.FOCUS_MOVE for e in moved.explanations)

    def test_unrelated_history_keeps_order(self):
        advisor = bib_advisor()
        seeded = advisor.seed()
        record = AppliedRecord(op=None, touched={FrameId("elsewhere", "nothing")})
        assert refocus(seeded, [record]) == seeded

    def test_refocus_is_a_permutation(self):
        advisor = bib_advisor()
        seeded = advisor.seed()
        record = AppliedRecord(op=None, touched={FrameId(RUBY, "author")})
        reordered = refocus(seeded, [record])
        assert sorted(s.key for s in reordered) == sorted(s.key for s in seeded)


class TestResolveWithPreferred:
    @staticmethod
    def year_sources():
        o1, o2 = Ontology("one"), Ontology("two")
        for onto, kind in ((o1, XsdKind.INTEGER), (o2, XsdKind.STRING)):
            onto.add_class(ClassFrame(onto.cid("crate")))
            onto.add_slot(
                SlotFrame(
                    onto.cid("year"),
                    SlotKind.DATATYPE,
                    domain={onto.cid("crate")},
                    range=RangeSpec.datatype(kind),
                )
            )
        return o1, o2

    def test_datatype_mismatch_resolved_for_preferred(self):
        o1, o2 = self.year_sources()
        advisor = Advisor(MergeSession([o1, o2], preferred_source="one"))
        advisor.session.preferred_source = None  # force the pending-conflict path
        _, conflicts = advisor.step(MergeSlots(o1.cid("year"), o2.cid("year")))
        mismatch = next(c for c in conflicts if c.kind is ConflictKind.DATATYPE_MISMATCH)
        advisor.session.preferred_source = "one"
        record = advisor.resolve_with_preferred(mismatch)
        slot = advisor.session.merged.slots[record.result]
        assert slot.range.kind is XsdKind.INTEGER
        assert any("favour" in note for note in record.notes)

    def test_requires_preferred_source(self):
        o1, o2 = self.year_sources()
        advisor = Advisor(MergeSession([o1, o2]))
        _, conflicts = advisor.step(MergeSlots(o1.cid("year"), o2.cid("year")))
        mismatch = next(c for c in conflicts if c.kind is ConflictKind.DATATYPE_MISMATCH)
        with pytest.raises(NoPreferredSourceError):
            advisor.resolve_with_preferred(mismatch)

    def test_name_collision_keeps_preferred_sources_name(self):
        advisor = bib_advisor(preferred_source=RUBY)
        advisor.step(MergeClasses(FrameId(RUBY, "author"), FrameId(NIAGARA, "author")))
        merged = advisor.session.merged
        # inject a collision: a foreign-sourced duplicate of a Niagara copy
        advisor.step(ShallowCopy(FrameId(NIAGARA, "vendor")))
        merged.classes[FrameId(NIAGARA, "vendor")] = ClassFrame(FrameId(NIAGARA, "vendor"))
        collision = next(
            c for c in advisor.detect_conflicts() if c.kind is ConflictKind.NAME_COLLISION
        )
        record = advisor.resolve_with_preferred(collision)
        # something got renamed away from the collision
        names = [c.name for c in merged.classes]
        assert len([n for n in names if n == "vendor"]) == 1
        assert any("favour" in note for note in record.notes)

    def test_auto_merge_resolves_datatype_mismatch_with_preferred(self):
        o1, o2 = self.year_sources()
        advisor = Advisor(MergeSession([o1, o2], preferred_source="one"))
        report = advisor.auto_merge(strict=True)
        merged = advisor.session.merged
        year = merged.slots[FrameId(merged.name, "year")]
        assert year.range.kind is XsdKind.INTEGER
        assert report.unresolved == []
        assert validate(merged) == []

    def test_single_resolution_applies_regardless(self):
        advisor = bib_advisor(preferred_source=RUBY)
        advisor.step(CreateClass("apex"))
        advisor.step(CreateClass("middle"))
        advisor.step(CreateClass("leaf"))
        merged = advisor.session.merged.name
        advisor.step(AddSuperclass(FrameId(merged, "middle"), FrameId(merged, "apex")))
        advisor.step(AddSuperclass(FrameId(merged, "leaf"), FrameId(merged, "middle")))
        _, conflicts = advisor.step(
            AddSuperclass(FrameId(merged, "leaf"), FrameId(merged, "apex"))
        )
        redundant = next(c for c in conflicts if c.kind is ConflictKind.REDUNDANT_SUBCLASS)
        advisor.resolve_with_preferred(redundant)
        assert all(
            c.kind is not ConflictKind.REDUNDANT_SUBCLASS for c in advisor.detect_conflicts()
        )


class TestAutoMerge:
    def test_identical_ontologies_collapse_to_one(self):
        rng = random.Random(42)
        for _ in range(5):
            original = random_ontology(rng, "one", max_instances=0)
            clone = Ontology("two")
            for cls in original.classes.values():
                clone.add_class(
                    ClassFrame(
                        clone.cid(cls.id.name),
                        superclasses={clone.cid(s.name) for s in cls.superclasses},
                    )
                )
            for slot in original.slots.values():
                rng_spec = (
                    RangeSpec.datatype(slot.range.kind)
                    if slot.range.is_datatype
                    else RangeSpec.of_classes(
                        {clone.cid(r.name) for r in slot.range.classes}
                    )
                )
                clone.add_slot(
                    SlotFrame(
                        clone.cid(slot.id.name),
                        slot.kind,
                        domain={clone.cid(d.name) for d in slot.domain},
                        range=rng_spec,
                        min_card=slot.min_card,
                        max_card=slot.max_card,
                    )
                )
            advisor = Advisor(MergeSession([original, clone]))
            advisor.auto_merge(strict=False)
            merged = advisor.session.merged
            assert len(merged.classes) == len(original.classes)
            assert len(merged.slots) == len(original.slots)
            assert validate(merged) == []

    def test_disjoint_ontologies_become_disjoint_union(self):
        o1, o2 = Ontology("one"), Ontology("two")
        o1.add_class(ClassFrame(o1.cid("applepie")))
        o1.add_class(ClassFrame(o1.cid("bluestone")))
        o2.add_class(ClassFrame(o2.cid("xylophone")))
        advisor = Advisor(MergeSession([o1, o2]))
        report = advisor.auto_merge(strict=False)
        merged = advisor.session.merged
        assert merged.local_names(FrameKind.CLASS) == {"applepie", "bluestone", "xylophone"}
        assert report.unresolved == []

    def test_bibliography_fixtures(self):
        advisor = bib_advisor()
        advisor.auto_merge(strict=False)
        merged = advisor.session.merged
        names = merged.local_names(FrameKind.CLASS)
        # author/author merged automatically; bibliography and bib copied apart
        assert "author" in names
        assert "bibliography" in names and "bib" in names
        authors = [c for c in merged.classes if c.name.startswith("author")]
        assert authors == [FrameId(merged.name, "author")]
        assert validate(merged) == []

    def test_budget_guard_math(self):
        advisor = bib_advisor()
        budget = 10 * advisor.session.total_source_frames()
        report = advisor.auto_merge(strict=False)
        assert report.applied <= budget


class TestAdvisorUndo:
    def test_undo_restores_export_and_suggestions(self):
        advisor = bib_advisor()
        advisor.seed()
        before_export = write_canonical(advisor.session.merged)
        before_keys = {s.key for s in advisor.suggestions}
        advisor.step(MergeClasses(FrameId(RUBY, "author"), FrameId(NIAGARA, "author")))
        advisor.undo()
        assert write_canonical(advisor.session.merged) == before_export
        assert {s.key for s in advisor.suggestions} == before_keys
