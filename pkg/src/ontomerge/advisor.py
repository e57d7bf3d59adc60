"""The suggestion/conflict cycle around the merge engine.

Each step applies one operation, folds the engine's follow-up pairs into
the standing suggestion list, drops suggestions the operation invalidated,
re-detects conflicts, and reorders the list so items related to recent
operations come first.  A non-interactive driver (auto_merge) repeatedly
takes the best suggestion and finishes by copying everything unimaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .engine import AppliedRecord, MergeSession
from .errors import (
    DatatypeMismatchError,
    EmptyLogError,
    NonterminationError,
    NoPreferredSourceError,
    OntomergeError,
    UnresolvableConflictError,
)
from .matching import MatchConfig, initial_matches
from .model import FrameId, FrameKind, SlotKind, ancestors, validate
from .operations import (
    CopySlot,
    DeepCopy,
    MergeClasses,
    MergeInstances,
    MergeSlots,
    Operation,
    RemoveFrame,
    RemoveSuperclass,
    RenameFrame,
)
from .suggestions import (
    Conflict,
    ConflictKind,
    Explanation,
    ExplanationKind,
    Suggestion,
)

FOLLOWUP_SCORE = 0.9  # above the default threshold so follow-ups surface
FOCUS_WINDOW = 3  # how many recent operations define the user's focus


def refocus(suggestions: list[Suggestion], recent: list[AppliedRecord]) -> list[Suggestion]:
    """Stable partition: suggestions touching recently changed frames first.

    Moved suggestions gain a focus-move explanation; relative order within
    each partition is preserved, so the result is a permutation.
    """
    touched: set[FrameId] = set()
    for record in recent[-FOCUS_WINDOW:]:
        touched |= record.touched
    if not touched:
        return list(suggestions)
    front: list[Suggestion] = []
    back: list[Suggestion] = []
    for s in suggestions:
        (front if s.related_frames & touched else back).append(s)
    moved_over = len(back) > 0
    for s in front:
        if not moved_over:
            continue
        note = "moved up: relates to frames changed by recent operations"
        if not any(
            e.kind is ExplanationKind.FOCUS_MOVE and e.text == note for e in s.explanations
        ):
            s.explanations.append(
                Explanation(
                    ExplanationKind.FOCUS_MOVE,
                    note,
                    evidence=tuple(sorted(s.related_frames & touched)),
                )
            )
    return front + back


def detect_conflicts(session: MergeSession, touched: set[FrameId] | None = None) -> list[Conflict]:
    """Scan the merged ontology for inconsistencies.

    With ``touched`` given, only conflicts involving those frames are
    returned (the incremental form used inside step).
    """
    merged = session.merged
    out: list[Conflict] = []

    by_name: dict[tuple[FrameKind, str], list[FrameId]] = {}
    for kind, table in (
        (FrameKind.CLASS, merged.classes),
        (FrameKind.SLOT, merged.slots),
        (FrameKind.INSTANCE, merged.instances),
    ):
        for fid in table:
            by_name.setdefault((kind, fid.name), []).append(fid)
    for (kind, name), fids in sorted(by_name.items()):
        if len(fids) < 2:
            continue
        fids = sorted(fids)
        resolutions: list[Operation] = [
            RenameFrame(kind, fid, _free_name(session, kind, f"{name}_{i + 2}"))
            for i, fid in enumerate(fids[1:])
        ]
        out.append(
            Conflict(
                ConflictKind.NAME_COLLISION,
                frozenset(fids),
                resolutions,
                detail=f"{len(fids)} {kind.value} frames share the name {name!r}",
            )
        )

    for violation in validate(merged):
        if violation.invariant.endswith("-unresolved"):
            kind = (
                FrameKind.CLASS
                if violation.frame in merged.classes
                else FrameKind.SLOT
                if violation.frame in merged.slots
                else FrameKind.INSTANCE
            )
            out.append(
                Conflict(
                    ConflictKind.DANGLING_REFERENCE,
                    frozenset((violation.frame,)),
                    [RemoveFrame(kind, violation.frame)],
                    detail=violation.detail,
                )
            )

    for cid in sorted(merged.classes):
        supers = sorted(merged.classes[cid].superclasses)
        for direct in supers:
            if direct not in merged.classes:
                continue
            others = [s for s in supers if s != direct and s in merged.classes]
            if any(direct in ancestors(merged, o) for o in others):
                out.append(
                    Conflict(
                        ConflictKind.REDUNDANT_SUBCLASS,
                        frozenset((cid, direct)),
                        [RemoveSuperclass(cid, direct)],
                        detail=f"{cid.name} is a direct subclass of {direct.name} "
                        "and of one of its descendants",
                    )
                )

    descendants_cache: dict[FrameId, set[FrameId]] = {}

    def with_descendants(roots: set[FrameId]) -> set[FrameId]:
        allowed = set(roots)
        stack = list(roots)
        while stack:
            cur = stack.pop()
            if cur in descendants_cache:
                allowed |= descendants_cache[cur]
                continue
            for sub in merged.subclasses_of(cur):
                if sub not in allowed:
                    allowed.add(sub)
                    stack.append(sub)
        return allowed

    for iid in sorted(merged.instances):
        inst = merged.instances[iid]
        for slot_id in sorted(inst.values):
            slot = merged.slots.get(slot_id)
            if slot is None:
                continue
            values = inst.values[slot_id]
            if slot.kind is SlotKind.OBJECT:
                allowed = with_descendants(set(slot.range.classes))
                for value in values:
                    if value.is_primitive:
                        out.append(
                            Conflict(
                                ConflictKind.RANGE_VIOLATION,
                                frozenset((iid, slot_id)),
                                [RemoveFrame(FrameKind.INSTANCE, iid)],
                                detail=f"primitive value on object slot {slot_id.name}",
                            )
                        )
                        continue
                    target = merged.instances.get(value.ref)
                    if target is None or not target.types:
                        continue  # dangling handled above
                    if not (target.types & allowed):
                        out.append(
                            Conflict(
                                ConflictKind.RANGE_VIOLATION,
                                frozenset((iid, slot_id, value.ref)),
                                [
                                    MergeClasses(t, r)
                                    for t in sorted(target.types)
                                    for r in sorted(slot.range.classes)
                                ],
                                detail=f"value {value.ref.name} is outside the range of "
                                f"{slot_id.name}",
                            )
                        )
            else:
                for value in values:
                    if value.is_primitive and value.kind is not slot.range.kind:
                        out.append(
                            Conflict(
                                ConflictKind.RANGE_VIOLATION,
                                frozenset((iid, slot_id)),
                                [RemoveFrame(FrameKind.INSTANCE, iid)],
                                detail=f"{value.lexical!r} is {value.kind.value}, "
                                f"slot {slot_id.name} expects {slot.range.kind.value}",
                            )
                        )
            count = len(values)
            if (slot.max_card is not None and count > slot.max_card) or count < slot.min_card:
                refs = sorted(v.ref for v in values if not v.is_primitive)
                resolutions: list[Operation] = [
                    MergeInstances(x, y) for x, y in combinations(refs, 2)
                ]
                resolutions.append(RemoveFrame(FrameKind.INSTANCE, iid))
                upper = "n" if slot.max_card is None else slot.max_card
                out.append(
                    Conflict(
                        ConflictKind.CARDINALITY_VIOLATION,
                        frozenset((iid, slot_id)),
                        resolutions,
                        detail=f"{count} values on {slot_id.name}, allowed "
                        f"{slot.min_card}..{upper}",
                    )
                )
        # a slot attached to the instance's types but entirely missing
        reachable = set(inst.types)
        for t in inst.types:
            if t in merged.classes:
                reachable |= set(ancestors(merged, t))
        for slot in merged.slots.values():
            if slot.min_card > 0 and (slot.domain & reachable) and slot.id not in inst.values:
                out.append(
                    Conflict(
                        ConflictKind.CARDINALITY_VIOLATION,
                        frozenset((iid, slot.id)),
                        [RemoveFrame(FrameKind.INSTANCE, iid)],
                        detail=f"no value on {slot.id.name}, allowed "
                        f"{slot.min_card}..{'n' if slot.max_card is None else slot.max_card}",
                    )
                )

    if touched is not None:
        out = [c for c in out if c.frames & touched]
    return out


def _free_name(session: MergeSession, kind: FrameKind, base: str) -> str:
    taken = session.merged.local_names(kind)
    name, i = base, 2
    while name in taken:
        name = f"{base}_{i}"
        i += 1
    return name


@dataclass
class AutoMergeReport:
    applied: int
    unresolved: list[Conflict]
    remaining: list[Suggestion]


@dataclass
class Advisor:
    """Standing suggestion/conflict state bound to one merge session."""

    session: MergeSession
    config: MatchConfig = field(default_factory=MatchConfig)
    suggestions: list[Suggestion] = field(default_factory=list)
    pending: list[Conflict] = field(default_factory=list)
    dismissed: set = field(default_factory=set)
    _seeded: bool = False

    def seed(self) -> list[Suggestion]:
        """Build the initial match list over every source pair."""
        gathered: list[Suggestion] = []
        sources = list(self.session.sources.values())
        for i, first in enumerate(sources):
            for second in sources[i + 1 :]:
                gathered.extend(initial_matches(first, second, self.config))
        gathered.sort(key=_suggestion_order)
        self.suggestions = [s for s in gathered if s.key not in self.dismissed]
        self._seeded = True
        return list(self.suggestions)

    def dismiss(self, key) -> None:
        self.dismissed.add(key)
        self.suggestions = [s for s in self.suggestions if s.key != key]

    def step(self, op: Operation) -> tuple[list[Suggestion], list[Conflict]]:
        """Apply one operation and update the standing lists.

        A datatype disagreement does not raise: it comes back as a pending
        conflict whose resolutions are ready-to-apply operations.
        """
        if not self._seeded:
            self.seed()
        try:
            record = self.session.apply(op)
        except DatatypeMismatchError as exc:
            conflict = Conflict(
                ConflictKind.DATATYPE_MISMATCH,
                frozenset(_op_frames(op)),
                exc.resolutions,
                detail=str(exc),
            )
            self.pending = [p for p in self.pending if p.frames != conflict.frames]
            self.pending.append(conflict)
            return list(self.suggestions), [conflict]

        self.pending = [p for p in self.pending if not (p.frames & record.touched)]
        for followup in record.followups:
            self._add_followup(followup)
        self.suggestions = [s for s in self.suggestions if self._still_valid(s)]
        self.suggestions = refocus(self.suggestions, self.session.records)
        conflicts = detect_conflicts(self.session, touched=record.touched)
        conflicts.extend(p for p in self.pending if p.frames & record.touched)
        return list(self.suggestions), conflicts

    def _add_followup(self, followup) -> None:
        if followup.op == "merge-classes":
            proposed: Operation = MergeClasses(followup.left, followup.right)
            kind = ExplanationKind.SLOT_MERGE_FOLLOWUP
            text = (
                f"{followup.left.name} and {followup.right.name} come from different "
                f"sources and meet in the {followup.role} of {followup.via.name}"
            )
        else:
            proposed = MergeInstances(followup.left, followup.right)
            kind = ExplanationKind.INSTANCE_VALUE_FOLLOWUP
            text = (
                f"{followup.left.name} and {followup.right.name} are values of "
                f"{followup.via.name} coming from different sources"
            )
        if proposed.key in self.dismissed:
            return
        if any(s.key == proposed.key for s in self.suggestions):
            return
        self.suggestions.append(
            Suggestion(
                proposed=proposed,
                score=FOLLOWUP_SCORE,
                explanations=[
                    Explanation(kind, text, evidence=(followup.left, followup.right, followup.via))
                ],
                related_frames=frozenset((followup.left, followup.right, followup.via)),
            )
        )

    def _still_valid(self, suggestion: Suggestion) -> bool:
        op = suggestion.proposed
        if isinstance(op, MergeClasses):
            pairs = [(FrameKind.CLASS, op.a), (FrameKind.CLASS, op.b)]
        elif isinstance(op, MergeSlots):
            pairs = [(FrameKind.SLOT, op.s1), (FrameKind.SLOT, op.s2)]
        elif isinstance(op, MergeInstances):
            pairs = [(FrameKind.INSTANCE, op.i1), (FrameKind.INSTANCE, op.i2)]
        else:
            return True
        images = []
        for kind, fid in pairs:
            if not self.session.resolves(kind, fid):
                return False
            images.append(self.session.image_of(kind, fid))
        if images[0] is not None and images[0] == images[1]:
            return False  # the pair is already merged
        return True

    def detect_conflicts(self) -> list[Conflict]:
        return detect_conflicts(self.session) + list(self.pending)

    def resolve_with_preferred(self, conflict: Conflict) -> AppliedRecord:
        """Apply the resolution consistent with the preferred source."""
        preferred = self.session.preferred_source
        if not preferred:
            raise NoPreferredSourceError("no preferred source is set on the session")
        resolution = self._pick_resolution(conflict, preferred)
        if resolution is None:
            raise UnresolvableConflictError(
                f"no resolution of {conflict.kind.value} involves source {preferred!r}"
            )
        suggestions, conflicts = self.step(resolution)
        record = self.session.records[-1]
        record.notes.append(
            f"resolved {conflict.kind.value} automatically in favour of {preferred}"
        )
        self.pending = [p for p in self.pending if p is not conflict]
        return record

    def _pick_resolution(self, conflict: Conflict, preferred: str) -> Operation | None:
        if len(conflict.resolutions) == 1:
            return conflict.resolutions[0]
        if conflict.kind is ConflictKind.DATATYPE_MISMATCH:
            for res in conflict.resolutions:
                if not isinstance(res, MergeSlots) or res.range_kind is None:
                    continue
                holder = {res.s1.source: res.s1, res.s2.source: res.s2}.get(preferred)
                if holder is None:
                    continue
                slot, _ = self.session._find(FrameKind.SLOT, holder)
                if slot.range.kind is res.range_kind:
                    return res
            return None
        if conflict.kind is ConflictKind.NAME_COLLISION:
            # rename the frame that does not come from the preferred source
            for res in conflict.resolutions:
                if not isinstance(res, RenameFrame):
                    continue
                origins = self.session.origins_of(res.kind, res.frame)
                if preferred not in origins:
                    return res
            return None
        for res in conflict.resolutions:
            for fid in _op_frames(res):
                if preferred in self.session.origins_of(FrameKind.CLASS, fid) | \
                        self.session.origins_of(FrameKind.SLOT, fid) | \
                        self.session.origins_of(FrameKind.INSTANCE, fid):
                    return res
        return None

    def auto_merge(self, strict: bool = True) -> AutoMergeReport:
        """Apply the best suggestion until none clears the threshold, then
        copy every unimaged class (deep) and slot."""
        if strict and not self.session.preferred_source:
            raise NoPreferredSourceError(
                "auto-merge in strict mode needs a preferred source; "
                "pass strict=False to keep unresolved conflicts in the report"
            )
        if not self._seeded:
            self.seed()
        budget = 10 * self.session.total_source_frames()
        applied = 0
        unresolved: list[Conflict] = []

        def bump():
            nonlocal applied
            applied += 1
            if applied > budget:
                raise NonterminationError(
                    f"auto-merge exceeded {budget} operations; this is a bug"
                )

        while True:
            candidates = [
                s
                for s in self.suggestions
                if s.score >= self.config.threshold and self._still_valid(s)
            ]
            if not candidates:
                break
            top = max(candidates, key=lambda s: s.score)
            before = len(self.session.op_log)
            try:
                _, conflicts = self.step(top.proposed)
            except OntomergeError:
                self.dismiss(top.key)
                continue
            if len(self.session.op_log) == before:
                # the step came back as a pending conflict instead of applying
                mismatch = next(
                    (c for c in conflicts if c.kind is ConflictKind.DATATYPE_MISMATCH),
                    None,
                )
                if mismatch is not None and self.session.preferred_source:
                    try:
                        self.resolve_with_preferred(mismatch)
                        bump()
                    except UnresolvableConflictError:
                        if strict:
                            raise
                        unresolved.append(mismatch)
                        self.dismiss(top.key)
                else:
                    if strict:
                        raise UnresolvableConflictError(mismatch.detail if mismatch else "stuck")
                    if mismatch is not None:
                        unresolved.append(mismatch)
                    self.dismiss(top.key)
                continue
            bump()

        for cid in self.session.unimaged_classes():
            if self.session.image_of(FrameKind.CLASS, cid) is None:
                self.step(DeepCopy(cid))
                bump()
        for sid in self.session.unimaged_slots():
            if self.session.image_of(FrameKind.SLOT, sid) is None:
                self.step(CopySlot(sid))
                bump()

        unresolved.extend(self.pending)
        return AutoMergeReport(
            applied=applied,
            unresolved=unresolved,
            remaining=list(self.suggestions),
        )

    def undo(self) -> None:
        """Undo the last operation and rebuild the advisor state by replay."""
        if not self.session.op_log:
            raise EmptyLogError("nothing to undo")
        ops = self.session.op_log[:-1]
        self.session.reset()
        self.pending.clear()
        self.seed()
        for op in ops:
            self.step(op)


def _suggestion_order(s: Suggestion):
    names = tuple(sorted(f.name for f in s.related_frames))
    return (-s.score, names)


def _op_frames(op: Operation) -> list[FrameId]:
    out = []
    for attr in ("a", "b", "s1", "s2", "i1", "i2", "cls", "slot", "frame", "superclass"):
        fid = getattr(op, attr, None)
        if isinstance(fid, FrameId):
            out.append(fid)
    return out
