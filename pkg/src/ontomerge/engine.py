"""Merge session: the class/slot/instance merge operations, copies, edits.

Every operation is atomic (state rolls back on error), appends to the
operation log, and returns a record of created/deleted/touched frames for
the advisor.  Replaying the log against a fresh session reproduces the
merged ontology exactly; undo is replay of the log minus its last entry.

Frames copied into the merged ontology keep a suffixing policy:
``suffix-on-collision`` (default) appends ``_<source>`` only when the
local name is already taken; ``always-suffix`` marks every copied frame
with its origin.  Frames created by merges never carry a suffix.
"""

from __future__ import annotations

import copy as _copy
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

from .errors import (
    AlreadyImagedError,
    ConfirmationRequiredError,
    CycleError,
    DatatypeMismatchError,
    EmptyLogError,
    KindMismatchError,
    NameCollisionError,
    SameFrameError,
    UnknownFrameError,
)
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
)
from .operations import (
    AddSuperclass,
    CopySlot,
    CreateClass,
    DeepCopy,
    MergeClasses,
    MergeInstances,
    MergeSlots,
    Operation,
    RemoveFrame,
    RemoveSuperclass,
    RenameFrame,
    ShallowCopy,
)

DEFAULT_MERGED_NAME = "GlobalOntology"


class NamePolicy(str, Enum):
    SUFFIX_ON_COLLISION = "on-collision"
    ALWAYS_SUFFIX = "always"


@dataclass(frozen=True)
class Followup:
    """A merge the engine recommends after an operation."""

    op: str  # merge-classes | merge-instances
    left: FrameId
    right: FrameId
    via: FrameId  # the merged slot or instance that exposed the pair
    role: str  # domain | range | value


@dataclass
class AppliedRecord:
    op: Operation
    result: FrameId | None = None
    created: list[tuple[FrameKind, FrameId]] = field(default_factory=list)
    deleted: list[tuple[FrameKind, FrameId]] = field(default_factory=list)
    touched: set[FrameId] = field(default_factory=set)
    followups: list[Followup] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _dedupe(values: list[Value]) -> list[Value]:
    out: list[Value] = []
    for v in values:
        if v not in out:
            out.append(v)
    return out


class MergeSession:
    """Single-writer merge state over two or more source ontologies."""

    def __init__(
        self,
        sources: list[Ontology],
        merged_name: str = DEFAULT_MERGED_NAME,
        preferred_source: str | None = None,
        policy: NamePolicy = NamePolicy.SUFFIX_ON_COLLISION,
    ):
        if len(sources) < 2:
            raise ValueError("a merge session needs at least two sources")
        names = [o.name for o in sources]
        if len(set(names)) != len(names) or merged_name in names:
            raise ValueError("ontology names must be unique within a session")
        self.sources: dict[str, Ontology] = {o.name: o for o in sources}
        self.merged = Ontology(merged_name)
        self.preferred_source = preferred_source
        self.policy = policy
        self.image_map: dict[tuple[FrameKind, FrameId], FrameId] = {}
        self.created: set[tuple[FrameKind, FrameId]] = set()
        self.op_log: list[Operation] = []
        self.records: list[AppliedRecord] = []

    # ------------------------------------------------------------------ lookup

    def _find(self, kind: FrameKind, fid: FrameId):
        # merged first: audit states may hold frames whose id.source is a
        # source ontology, and resolutions must be able to address them
        frame = self.merged.frame(kind, fid)
        if frame is not None:
            return frame, self.merged
        onto = self.sources.get(fid.source)
        if onto is None:
            raise UnknownFrameError(f"unknown ontology {fid.source!r} in {fid}")
        frame = onto.frame(kind, fid)
        if frame is None:
            raise UnknownFrameError(f"unknown {kind.value} {fid}")
        return frame, onto

    def resolves(self, kind: FrameKind, fid: FrameId) -> bool:
        try:
            self._find(kind, fid)
            return True
        except UnknownFrameError:
            return False

    def image_of(self, kind: FrameKind, fid: FrameId) -> FrameId | None:
        """The merged-ontology frame standing for fid (identity for merged frames)."""
        if fid.source == self.merged.name:
            return fid if self.merged.frame(kind, fid) is not None else None
        return self.image_map.get((kind, fid))

    def origins_of(self, kind: FrameKind, fid: FrameId) -> set[str]:
        """Source ontologies whose frames map onto this merged frame."""
        return {
            src.source
            for (k, src), img in self.image_map.items()
            if k is kind and img == fid
        }

    # ---------------------------------------------------------------- plumbing

    def _alloc_name(
        self,
        desired: str,
        kind: FrameKind,
        origin: str | None,
        excluding: set[FrameId] = frozenset(),
    ) -> str:
        taken = {
            fid.name
            for fid in {
                FrameKind.CLASS: self.merged.classes,
                FrameKind.SLOT: self.merged.slots,
                FrameKind.INSTANCE: self.merged.instances,
            }[kind]
            if fid not in excluding
        }
        candidates = []
        if self.policy is NamePolicy.ALWAYS_SUFFIX and origin:
            candidates.append(f"{desired}_{origin}")
        candidates.append(desired)
        if origin:
            candidates.append(f"{desired}_{origin}")
        for name in candidates:
            if name not in taken:
                return name
        base = candidates[-1]
        i = 2
        while f"{base}_{i}" in taken:
            i += 1
        return f"{base}_{i}"

    def _rewrite(self, kind: FrameKind, old: FrameId, new: FrameId) -> None:
        """Re-point every reference to old at new, across the merged ontology."""
        merged = self.merged
        if kind is FrameKind.CLASS:
            for cls in merged.classes.values():
                if old in cls.superclasses:
                    cls.superclasses.discard(old)
                    if cls.id != new:
                        cls.superclasses.add(new)
            for slot in merged.slots.values():
                if old in slot.domain:
                    slot.domain.discard(old)
                    slot.domain.add(new)
                if old in slot.range.classes:
                    slot.range = RangeSpec.of_classes(
                        (set(slot.range.classes) - {old}) | {new}
                    )
            for inst in merged.instances.values():
                if old in inst.types:
                    inst.types.discard(old)
                    inst.types.add(new)
        elif kind is FrameKind.SLOT:
            for inst in merged.instances.values():
                if old in inst.values:
                    moved = inst.values.pop(old)
                    inst.values[new] = _dedupe(inst.values.get(new, []) + moved)
        else:
            for inst in merged.instances.values():
                for values in inst.values.values():
                    for i, v in enumerate(values):
                        if v.ref == old:
                            values[i] = Value.reference(new)
                for sid in list(inst.values):
                    inst.values[sid] = _dedupe(inst.values[sid])
        for key, img in list(self.image_map.items()):
            if key[0] is kind and img == old:
                self.image_map[key] = new
        if (kind, old) in self.created:
            self.created.discard((kind, old))
            self.created.add((kind, new))

    def _reaches_itself(self, cid: FrameId) -> bool:
        stack = list(self.merged.classes[cid].superclasses)
        seen: set[FrameId] = set()
        while stack:
            cur = stack.pop()
            if cur == cid:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            cls = self.merged.classes.get(cur)
            if cls is not None:
                stack.extend(cls.superclasses)
        return False

    # ------------------------------------------------------------------ copies

    def _copy_class(self, cls: ClassFrame, origin: Ontology, record: AppliedRecord) -> FrameId:
        """Shallow copy: the class, its directly attached slots, nothing above."""
        name = self._alloc_name(cls.id.name, FrameKind.CLASS, origin.name)
        cid = FrameId(self.merged.name, name)
        self.merged.add_class(ClassFrame(cid))
        self.image_map[(FrameKind.CLASS, cls.id)] = cid
        record.created.append((FrameKind.CLASS, cid))
        record.touched.update((cls.id, cid))
        supers = {
            si
            for s in sorted(cls.superclasses)
            if (si := self.image_of(FrameKind.CLASS, s)) is not None
        }
        self.merged.classes[cid].superclasses = supers
        for slot in origin.attached_slots(cls.id):
            si = self.image_of(FrameKind.SLOT, slot.id)
            if si is None:
                si = self._copy_slot(slot, origin, record)
            self.merged.slots[si].domain.add(cid)
        return cid

    def _copy_slot(self, slot: SlotFrame, origin: Ontology, record: AppliedRecord) -> FrameId:
        name = self._alloc_name(slot.id.name, FrameKind.SLOT, origin.name)
        sid = FrameId(self.merged.name, name)
        image = SlotFrame(
            sid, slot.kind, range=slot.range, min_card=slot.min_card, max_card=slot.max_card
        )
        self.merged.add_slot(image)
        self.image_map[(FrameKind.SLOT, slot.id)] = sid
        record.created.append((FrameKind.SLOT, sid))
        record.touched.update((slot.id, sid))
        image.domain = {
            di
            for d in sorted(slot.domain)
            if (di := self.image_of(FrameKind.CLASS, d)) is not None
        }
        if slot.kind is SlotKind.OBJECT:
            # an object property needs its range classes; copy any that have
            # no image yet so the merged ontology stays well-formed
            range_images = set()
            for r in sorted(slot.range.classes):
                ri = self.image_of(FrameKind.CLASS, r)
                if ri is None:
                    rframe, ronto = self._find(FrameKind.CLASS, r)
                    ri = self._copy_class(rframe, ronto, record)
                range_images.add(ri)
            image.range = RangeSpec.of_classes(range_images)
        return sid

    def _repair_value_attachments(self, record: AppliedRecord) -> None:
        """Re-attach valued slots to the instance types that use them.

        Merging and copying can widen a slot's domain after an instance
        already carries values for it; the data wins, so the instance's
        types join the domain instead of the value becoming ill-formed.
        """
        from .model import ancestors

        for iid in sorted(self.merged.instances):
            inst = self.merged.instances[iid]
            closure: set[FrameId] | None = None
            for slot_id in sorted(inst.values):
                slot = self.merged.slots.get(slot_id)
                if slot is None or not slot.domain:
                    continue
                if closure is None:
                    closure = set(inst.types)
                    for t in inst.types:
                        if t in self.merged.classes:
                            closure.update(ancestors(self.merged, t))
                if slot.domain & closure:
                    continue
                added = {t for t in inst.types if t in self.merged.classes}
                if added:
                    slot.domain |= added
                    record.touched.add(slot_id)
                    record.notes.append(
                        f"attached {slot_id.name} to {', '.join(sorted(t.name for t in added))} "
                        f"to keep {iid.name} well-formed"
                    )

    def _deep_copy(self, cls: ClassFrame, origin: Ontology, record: AppliedRecord) -> FrameId:
        cid = self.image_of(FrameKind.CLASS, cls.id)
        if cid is None:
            cid = self._copy_class(cls, origin, record)
        for sup in sorted(cls.superclasses):
            sup_frame = origin.classes[sup]
            si = self.image_of(FrameKind.CLASS, sup)
            if si is None:
                si = self._deep_copy(sup_frame, origin, record)
            self.merged.classes[cid].superclasses.add(si)
        return cid

    # ------------------------------------------------------------- operations

    def _do_merge_classes(self, op: MergeClasses, record: AppliedRecord) -> Operation:
        a, b = op.a, op.b
        if a == b:
            raise SameFrameError(f"cannot merge {a} with itself")
        fa, oa = self._find(FrameKind.CLASS, a)
        fb, ob = self._find(FrameKind.CLASS, b)
        ia = self.image_of(FrameKind.CLASS, a)
        ib = self.image_of(FrameKind.CLASS, b)
        if ia is not None and ia == ib:
            raise SameFrameError(f"{a} and {b} already share the image {ia}")
        replaced = [x for x in dict.fromkeys((ia, ib)) if x is not None]

        desired = op.new_name or a.name
        name = self._alloc_name(desired, FrameKind.CLASS, None, excluding=set(replaced))
        if op.new_name and name != op.new_name:
            raise NameCollisionError(f"class name {op.new_name!r} is taken")
        merged_id = FrameId(self.merged.name, name)
        record.result = merged_id
        record.touched.update((a, b, merged_id, *replaced))

        # absorb the merged-side structure of already-present frames, then
        # retire them before the new class takes their place
        replaced_supers = {
            sup
            for r in replaced
            for sup in self.merged.classes[r].superclasses
            if sup not in replaced
        }
        for r in replaced:
            self._rewrite(FrameKind.CLASS, r, merged_id)
            self.merged.remove(FrameKind.CLASS, r)
            record.deleted.append((FrameKind.CLASS, r))

        new = self.merged.add_class(ClassFrame(merged_id))
        record.created.append((FrameKind.CLASS, merged_id))
        new.superclasses |= {s for s in replaced_supers if s != merged_id}
        # register the images up front so any cascaded copy below resolves
        # the arguments to the merge result instead of re-copying them
        if oa is not self.merged:
            self.image_map[(FrameKind.CLASS, a)] = merged_id
        if ob is not self.merged:
            self.image_map[(FrameKind.CLASS, b)] = merged_id

        for x, fx, ox in ((a, fa, oa), (b, fb, ob)):
            if ox is self.merged:
                continue  # its merged-side structure transferred via the rewrite
            for sup in sorted(fx.superclasses):
                si = self.image_of(FrameKind.CLASS, sup)
                if si is not None and si != merged_id:
                    new.superclasses.add(si)
            for sub in ox.subclasses_of(x):
                sbi = self.image_of(FrameKind.CLASS, sub)
                if sbi is not None and sbi != merged_id:
                    self.merged.classes[sbi].superclasses.add(merged_id)

        # gather both sides and copy in (name, source) order so the result
        # is independent of the argument order
        attached: list[tuple[SlotFrame, Ontology]] = []
        for x, fx, ox in ((a, fa, oa), (b, fb, ob)):
            if ox is self.merged:
                continue
            attached.extend((slot, ox) for slot in ox.attached_slots(x))
        attached.sort(key=lambda pair: (pair[0].id.name, pair[0].id.source))
        for slot, ox in attached:
            si = self.image_of(FrameKind.SLOT, slot.id)
            if si is None:
                si = self._copy_slot(slot, ox, record)
            self.merged.slots[si].domain.add(merged_id)

        self.created.add((FrameKind.CLASS, merged_id))

        if self._reaches_itself(merged_id):
            raise CycleError(f"merging {a} and {b} would create a subclass cycle")
        return op

    def _do_merge_slots(self, op: MergeSlots, record: AppliedRecord) -> Operation:
        s1, s2 = op.s1, op.s2
        if s1 == s2:
            raise SameFrameError(f"cannot merge {s1} with itself")
        f1, o1 = self._find(FrameKind.SLOT, s1)
        f2, o2 = self._find(FrameKind.SLOT, s2)
        if f1.kind is not f2.kind:
            raise KindMismatchError(
                f"{s1} is {f1.kind.value} but {s2} is {f2.kind.value}"
            )
        i1 = self.image_of(FrameKind.SLOT, s1)
        i2 = self.image_of(FrameKind.SLOT, s2)
        if i1 is not None and i1 == i2:
            raise SameFrameError(f"{s1} and {s2} already share the image {i1}")
        replaced = [x for x in dict.fromkeys((i1, i2)) if x is not None]

        normalized = op
        if f1.kind is SlotKind.DATATYPE:
            k1, k2 = f1.range.kind, f2.range.kind
            if k1 == k2:
                kind = k1
            elif op.range_kind is not None:
                if op.range_kind not in (k1, k2):
                    raise ValueError(
                        f"range override {op.range_kind.value} matches neither slot"
                    )
                kind = op.range_kind
            elif self.preferred_source in (s1.source, s2.source):
                kind = k1 if s1.source == self.preferred_source else k2
                record.notes.append(
                    f"range kinds disagree ({k1.value} vs {k2.value}); "
                    f"preferred source {self.preferred_source} wins with {kind.value}"
                )
            else:
                raise DatatypeMismatchError(
                    f"{s1} has range {k1.value} but {s2} has range {k2.value}",
                    kinds=(k1, k2),
                    resolutions=[
                        MergeSlots(s1, s2, op.new_name, range_kind=k1),
                        MergeSlots(s1, s2, op.new_name, range_kind=k2),
                    ],
                )
            # bake the decision into the logged op so replay never depends on
            # the preferred-source setting
            normalized = MergeSlots(s1, s2, op.new_name, range_kind=kind if k1 != k2 else None)
            new_range = RangeSpec.datatype(kind)
        else:
            new_range = RangeSpec.of_classes(set())

        desired = op.new_name or s1.name
        name = self._alloc_name(desired, FrameKind.SLOT, None, excluding=set(replaced))
        if op.new_name and name != op.new_name:
            raise NameCollisionError(f"slot name {op.new_name!r} is taken")
        merged_id = FrameId(self.merged.name, name)
        record.result = merged_id
        record.touched.update((s1, s2, merged_id, *replaced))

        # the replaced frame objects stay readable after removal
        for r in replaced:
            self._rewrite(FrameKind.SLOT, r, merged_id)
            self.merged.remove(FrameKind.SLOT, r)
            record.deleted.append((FrameKind.SLOT, r))

        slot = SlotFrame(
            merged_id,
            f1.kind,
            range=new_range,
            min_card=min(f1.min_card, f2.min_card),
            max_card=None
            if f1.max_card is None or f2.max_card is None
            else max(f1.max_card, f2.max_card),
        )
        self.merged.add_slot(slot)
        record.created.append((FrameKind.SLOT, merged_id))
        # register up front: a cascaded class copy below must attach the
        # merge result, not re-copy the arguments
        if o1 is not self.merged:
            self.image_map[(FrameKind.SLOT, s1)] = merged_id
        if o2 is not self.merged:
            self.image_map[(FrameKind.SLOT, s2)] = merged_id

        domain_pool: list[tuple[FrameId, bool]] = []
        range_pool: list[tuple[FrameId, bool]] = []
        for x, fx, ox in ((s1, f1, o1), (s2, f2, o2)):
            in_merged = ox is self.merged
            domain_pool.extend((d, in_merged) for d in fx.domain)
            if f1.kind is SlotKind.OBJECT:
                range_pool.extend((r, in_merged) for r in fx.range.classes)
        for d, in_merged in sorted(domain_pool, key=lambda p: (p[0].name, p[0].source)):
            di = d if in_merged else self.image_of(FrameKind.CLASS, d)
            if di is not None:
                slot.domain.add(di)
        for r, in_merged in sorted(range_pool, key=lambda p: (p[0].name, p[0].source)):
            if in_merged:
                ri = r
            else:
                ri = self.image_of(FrameKind.CLASS, r)
                if ri is None:
                    rframe, ronto = self._find(FrameKind.CLASS, r)
                    ri = self._copy_class(rframe, ronto, record)
            slot.range = RangeSpec.of_classes(set(slot.range.classes) | {ri})

        self.created.add((FrameKind.SLOT, merged_id))

        pools = [("domain", sorted(slot.domain))]
        if slot.kind is SlotKind.OBJECT:
            pools.append(("range", sorted(slot.range.classes)))
        for role, classes in pools:
            for x, y in combinations(classes, 2):
                ox_ = self.origins_of(FrameKind.CLASS, x)
                oy_ = self.origins_of(FrameKind.CLASS, y)
                if ox_ and oy_ and not (ox_ & oy_):
                    record.followups.append(
                        Followup("merge-classes", x, y, merged_id, role)
                    )
        return normalized

    def _do_merge_instances(self, op: MergeInstances, record: AppliedRecord) -> Operation:
        i1, i2 = op.i1, op.i2
        if i1 == i2:
            raise SameFrameError(f"cannot merge {i1} with itself")
        f1, o1 = self._find(FrameKind.INSTANCE, i1)
        f2, o2 = self._find(FrameKind.INSTANCE, i2)
        im1 = self.image_of(FrameKind.INSTANCE, i1)
        im2 = self.image_of(FrameKind.INSTANCE, i2)
        if im1 is not None and im1 == im2:
            raise SameFrameError(f"{i1} and {i2} already share the image {im1}")
        replaced = [x for x in dict.fromkeys((im1, im2)) if x is not None]

        # type classes: pre-existing distinct images need a confirmed merge;
        # unimaged types are just copied
        pre_images: list[set[FrameId]] = []
        for fx, ox in ((f1, o1), (f2, o2)):
            if ox is self.merged:
                pre_images.append(set(fx.types))
            else:
                pre_images.append(
                    {
                        ti
                        for t in fx.types
                        if (ti := self.image_of(FrameKind.CLASS, t)) is not None
                    }
                )
        must_confirm = all(pre_images) and pre_images[0] != pre_images[1]
        if must_confirm and not op.confirm_type_merge:
            raise ConfirmationRequiredError(
                f"merging {i1} and {i2} requires merging their type images "
                f"{', '.join(map(str, sorted(pre_images[0] | pre_images[1])))}; "
                "re-apply with confirmation"
            )
        type_images: set[FrameId] = set()
        for fx, ox in ((f1, o1), (f2, o2)):
            for t in sorted(fx.types):
                if ox is self.merged:
                    type_images.add(t)
                    continue
                ti = self.image_of(FrameKind.CLASS, t)
                if ti is None:
                    tframe, tonto = self._find(FrameKind.CLASS, t)
                    ti = self._copy_class(tframe, tonto, record)
                type_images.add(ti)
        if must_confirm:
            distinct = sorted(type_images)
            current = distinct[0]
            for other in distinct[1:]:
                current = self._do_and_merge_record(MergeClasses(current, other), record)
            type_images = {current}

        desired = op.new_name or i1.name
        name = self._alloc_name(desired, FrameKind.INSTANCE, None, excluding=set(replaced))
        if op.new_name and name != op.new_name:
            raise NameCollisionError(f"instance name {op.new_name!r} is taken")
        merged_id = FrameId(self.merged.name, name)
        record.result = merged_id
        record.touched.update((i1, i2, merged_id, *replaced))

        for r in replaced:
            self._rewrite(FrameKind.INSTANCE, r, merged_id)
            self.merged.remove(FrameKind.INSTANCE, r)
            record.deleted.append((FrameKind.INSTANCE, r))

        inst = InstanceFrame(merged_id, types=set(type_images))
        self.merged.add_instance(inst)
        record.created.append((FrameKind.INSTANCE, merged_id))
        if o1 is not self.merged:
            self.image_map[(FrameKind.INSTANCE, i1)] = merged_id
        if o2 is not self.merged:
            self.image_map[(FrameKind.INSTANCE, i2)] = merged_id

        # pre-copy the valued slots in (name, source) order for symmetry
        vslot_pool: dict[FrameId, Ontology] = {}
        for fx, ox in ((f1, o1), (f2, o2)):
            if ox is not self.merged:
                for slot_id in fx.values:
                    vslot_pool.setdefault(slot_id, ox)
        for slot_id in sorted(vslot_pool, key=lambda f: (f.name, f.source)):
            if self.image_of(FrameKind.SLOT, slot_id) is None:
                sframe, sonto = self._find(FrameKind.SLOT, slot_id)
                self._copy_slot(sframe, sonto, record)

        for fx, ox in ((f1, o1), (f2, o2)):
            for slot_id in sorted(fx.values):
                if ox is self.merged:
                    si = slot_id
                else:
                    si = self.image_of(FrameKind.SLOT, slot_id)
                    if si is None:
                        sframe, sonto = self._find(FrameKind.SLOT, slot_id)
                        si = self._copy_slot(sframe, sonto, record)
                bucket = inst.values.setdefault(si, [])
                for value in fx.values[slot_id]:
                    if value.is_primitive:
                        bucket.append(value)
                    elif ox is self.merged:
                        bucket.append(value)
                    else:
                        vi = self.image_of(FrameKind.INSTANCE, value.ref)
                        if vi is not None:
                            bucket.append(Value.reference(vi))
                inst.values[si] = _dedupe(bucket)

        self.created.add((FrameKind.INSTANCE, merged_id))

        for si in sorted(inst.values):
            refs = [v.ref for v in inst.values[si] if not v.is_primitive]
            for x, y in combinations(sorted(refs), 2):
                ox_ = self.origins_of(FrameKind.INSTANCE, x)
                oy_ = self.origins_of(FrameKind.INSTANCE, y)
                if ox_ and oy_ and not (ox_ & oy_):
                    record.followups.append(
                        Followup("merge-instances", x, y, si, "value")
                    )
        return op

    def _do_and_merge_record(self, op: MergeClasses, record: AppliedRecord) -> FrameId:
        """Run a nested class merge, folding its effects into the outer record."""
        sub_record = AppliedRecord(op=op)
        self._do_merge_classes(op, sub_record)
        record.created.extend(sub_record.created)
        record.deleted.extend(sub_record.deleted)
        record.touched |= sub_record.touched
        record.followups.extend(sub_record.followups)
        return sub_record.result

    def _do_shallow_copy(self, op: ShallowCopy, record: AppliedRecord) -> Operation:
        cls, origin = self._find(FrameKind.CLASS, op.cls)
        if origin is self.merged:
            raise UnknownFrameError(f"{op.cls} is not a source frame")
        if self.image_of(FrameKind.CLASS, op.cls) is not None:
            raise AlreadyImagedError(f"{op.cls} already has an image")
        record.result = self._copy_class(cls, origin, record)
        return op

    def _do_deep_copy(self, op: DeepCopy, record: AppliedRecord) -> Operation:
        cls, origin = self._find(FrameKind.CLASS, op.cls)
        if origin is self.merged:
            raise UnknownFrameError(f"{op.cls} is not a source frame")
        if self.image_of(FrameKind.CLASS, op.cls) is not None:
            raise AlreadyImagedError(f"{op.cls} already has an image")
        record.result = self._deep_copy(cls, origin, record)
        if self._reaches_itself(record.result):
            raise CycleError(f"deep copy of {op.cls} created a cycle")
        return op

    def _do_copy_slot(self, op: CopySlot, record: AppliedRecord) -> Operation:
        slot, origin = self._find(FrameKind.SLOT, op.slot)
        if origin is self.merged:
            raise UnknownFrameError(f"{op.slot} is not a source frame")
        if self.image_of(FrameKind.SLOT, op.slot) is not None:
            raise AlreadyImagedError(f"{op.slot} already has an image")
        record.result = self._copy_slot(slot, origin, record)
        return op

    def _do_create_class(self, op: CreateClass, record: AppliedRecord) -> Operation:
        if not op.name:
            raise ValueError("class name must be non-empty")
        cid = FrameId(self.merged.name, op.name)
        if cid in self.merged.classes:
            raise NameCollisionError(f"class name {op.name!r} is taken")
        supers = set()
        for sup in sorted(op.superclasses):
            frame, onto = self._find(FrameKind.CLASS, sup)
            if onto is not self.merged:
                raise UnknownFrameError(f"superclass {sup} is not in the merged ontology")
            supers.add(sup)
        self.merged.add_class(ClassFrame(cid, superclasses=supers))
        self.created.add((FrameKind.CLASS, cid))
        record.created.append((FrameKind.CLASS, cid))
        record.result = cid
        record.touched.add(cid)
        return op

    def _do_add_superclass(self, op: AddSuperclass, record: AppliedRecord) -> Operation:
        cls, onto = self._find(FrameKind.CLASS, op.cls)
        sup, sonto = self._find(FrameKind.CLASS, op.superclass)
        if onto is not self.merged or sonto is not self.merged:
            raise UnknownFrameError("add-superclass operates on merged frames")
        cls.superclasses.add(op.superclass)
        if self._reaches_itself(op.cls):
            raise CycleError(f"{op.cls} ⊂ {op.superclass} would create a cycle")
        record.touched.update((op.cls, op.superclass))
        return op

    def _do_remove_superclass(self, op: RemoveSuperclass, record: AppliedRecord) -> Operation:
        cls, onto = self._find(FrameKind.CLASS, op.cls)
        if onto is not self.merged:
            raise UnknownFrameError("remove-superclass operates on merged frames")
        if op.superclass not in cls.superclasses:
            raise UnknownFrameError(f"{op.cls} has no superclass {op.superclass}")
        cls.superclasses.discard(op.superclass)
        record.touched.update((op.cls, op.superclass))
        return op

    def _do_rename(self, op: RenameFrame, record: AppliedRecord) -> Operation:
        frame, onto = self._find(op.kind, op.frame)
        if onto is not self.merged:
            raise UnknownFrameError("rename operates on merged frames")
        if not op.new_name:
            raise ValueError("new name must be non-empty")
        new_id = FrameId(self.merged.name, op.new_name)
        if new_id == op.frame:
            return op
        if self.merged.frame(op.kind, new_id) is not None:
            raise NameCollisionError(f"{op.kind.value} name {op.new_name!r} is taken")
        self.merged.remove(op.kind, op.frame)
        frame.id = new_id
        if op.kind is FrameKind.CLASS:
            self.merged.add_class(frame)
        elif op.kind is FrameKind.SLOT:
            self.merged.add_slot(frame)
        else:
            self.merged.add_instance(frame)
        self._rewrite(op.kind, op.frame, new_id)
        record.result = new_id
        record.touched.update((op.frame, new_id))
        return op

    def _do_remove_frame(self, op: RemoveFrame, record: AppliedRecord) -> Operation:
        frame, onto = self._find(op.kind, op.frame)
        if onto is not self.merged:
            raise UnknownFrameError("remove operates on merged frames")
        self._remove_cascade(op.kind, op.frame, record)
        return op

    def _remove_cascade(self, kind: FrameKind, fid: FrameId, record: AppliedRecord) -> None:
        merged = self.merged
        if merged.frame(kind, fid) is None:
            return
        record.touched.add(fid)
        if kind is FrameKind.CLASS:
            removed = merged.classes[fid]
            for cls in merged.classes.values():
                if fid in cls.superclasses:
                    # splice: children inherit the removed class's parents
                    cls.superclasses.discard(fid)
                    cls.superclasses |= {s for s in removed.superclasses if s != cls.id}
            for slot in list(merged.slots.values()):
                slot.domain.discard(fid)
                if fid in slot.range.classes:
                    remaining = set(slot.range.classes) - {fid}
                    slot.range = RangeSpec.of_classes(remaining)
                    if slot.kind is SlotKind.OBJECT and not remaining:
                        self._remove_cascade(FrameKind.SLOT, slot.id, record)
            for inst in list(merged.instances.values()):
                inst.types.discard(fid)
                if not inst.types:
                    self._remove_cascade(FrameKind.INSTANCE, inst.id, record)
        elif kind is FrameKind.SLOT:
            for inst in merged.instances.values():
                inst.values.pop(fid, None)
        else:
            for inst in merged.instances.values():
                for sid in list(inst.values):
                    kept = [v for v in inst.values[sid] if v.ref != fid]
                    if kept:
                        inst.values[sid] = kept
                    else:
                        del inst.values[sid]
        if merged.frame(kind, fid) is not None:
            merged.remove(kind, fid)
        record.deleted.append((kind, fid))
        for key, img in list(self.image_map.items()):
            if key[0] is kind and img == fid:
                del self.image_map[key]
        self.created.discard((kind, fid))

    # ----------------------------------------------------------------- applying

    _DISPATCH = {
        MergeClasses: _do_merge_classes,
        MergeSlots: _do_merge_slots,
        MergeInstances: _do_merge_instances,
        ShallowCopy: _do_shallow_copy,
        DeepCopy: _do_deep_copy,
        CopySlot: _do_copy_slot,
        CreateClass: _do_create_class,
        AddSuperclass: _do_add_superclass,
        RemoveSuperclass: _do_remove_superclass,
        RenameFrame: _do_rename,
        RemoveFrame: _do_remove_frame,
    }

    def apply(self, op: Operation) -> AppliedRecord:
        """Apply one operation atomically and log it."""
        handler = self._DISPATCH.get(type(op))
        if handler is None:
            raise TypeError(f"unknown operation {op!r}")
        backup = (
            _copy.deepcopy(self.merged),
            dict(self.image_map),
            set(self.created),
        )
        record = AppliedRecord(op=op)
        try:
            logged = handler(self, op, record)
            self._repair_value_attachments(record)
        except Exception:
            self.merged, self.image_map, self.created = backup
            raise
        record.op = logged
        self.op_log.append(logged)
        self.records.append(record)
        return record

    def undo(self) -> None:
        """Restore the state preceding the last applied operation (replay)."""
        if not self.op_log:
            raise EmptyLogError("nothing to undo")
        ops = self.op_log[:-1]
        self.reset()
        for op in ops:
            self.apply(op)

    def reset(self) -> None:
        self.merged = Ontology(self.merged.name)
        self.image_map.clear()
        self.created.clear()
        self.op_log.clear()
        self.records.clear()

    def replayed(self) -> "MergeSession":
        """A fresh session with the same sources and log replayed."""
        twin = MergeSession(
            [o.copy() for o in self.sources.values()],
            merged_name=self.merged.name,
            preferred_source=self.preferred_source,
            policy=self.policy,
        )
        for op in self.op_log:
            twin.apply(op)
        return twin

    # ------------------------------------------------------------- conveniences

    def merge_classes(self, a: FrameId, b: FrameId, new_name: str | None = None) -> FrameId:
        return self.apply(MergeClasses(a, b, new_name)).result

    def merge_slots(
        self,
        s1: FrameId,
        s2: FrameId,
        new_name: str | None = None,
        range_kind=None,
    ) -> FrameId:
        return self.apply(MergeSlots(s1, s2, new_name, range_kind)).result

    def merge_instances(
        self,
        i1: FrameId,
        i2: FrameId,
        new_name: str | None = None,
        confirm_type_merge: bool = False,
    ) -> FrameId:
        return self.apply(MergeInstances(i1, i2, new_name, confirm_type_merge)).result

    def shallow_copy_class(self, cls: FrameId) -> FrameId:
        return self.apply(ShallowCopy(cls)).result

    def deep_copy_class(self, cls: FrameId) -> FrameId:
        return self.apply(DeepCopy(cls)).result

    def copy_slot(self, slot: FrameId) -> FrameId:
        return self.apply(CopySlot(slot)).result

    def unimaged_classes(self) -> list[FrameId]:
        return sorted(
            cid
            for onto in self.sources.values()
            for cid in onto.classes
            if (FrameKind.CLASS, cid) not in self.image_map
        )

    def unimaged_slots(self) -> list[FrameId]:
        return sorted(
            sid
            for onto in self.sources.values()
            for sid in onto.slots
            if (FrameKind.SLOT, sid) not in self.image_map
        )

    def total_source_frames(self) -> int:
        return sum(
            len(o.classes) + len(o.slots) + len(o.instances)
            for o in self.sources.values()
        )

    def accounting_gaps(self) -> list[FrameId]:
        """Merged frames that are neither images nor explicit creations."""
        covered = set(self.image_map.values()) | {fid for _, fid in self.created}
        out = []
        for table in (self.merged.classes, self.merged.slots, self.merged.instances):
            out.extend(fid for fid in table if fid not in covered)
        return sorted(out)
