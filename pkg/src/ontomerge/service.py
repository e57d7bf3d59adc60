"""HTTP session service: the interactive merge cycle over JSON.

Sessions are optimistic-concurrency resources: every mutation carries the
client's last-seen state version and is rejected with 409 when stale.
State persists to disk as sources plus the operation log, so a restarted
service replays every session to the identical state.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Form, HTTPException, Request, UploadFile
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .advisor import Advisor
from .engine import DEFAULT_MERGED_NAME, MergeSession, NamePolicy
from .errors import OntomergeError
from .matching import MatchConfig
from .model import Ontology, SlotKind
from .operations import op_from_dict, op_to_dict
from .owlio import read_owl, write_canonical, write_owl
from .suggestions import Conflict, Suggestion


def ontology_json(onto: Ontology) -> dict:
    classes = []
    for cls in sorted(onto.classes.values(), key=lambda c: c.id):
        classes.append(
            {
                "name": cls.id.name,
                "superclasses": sorted(s.name for s in cls.superclasses),
                "slots": sorted(s.id.name for s in onto.attached_slots(cls.id)),
            }
        )
    slots = []
    for slot in sorted(onto.slots.values(), key=lambda s: s.id):
        slots.append(
            {
                "name": slot.id.name,
                "kind": slot.kind.value,
                "domain": sorted(d.name for d in slot.domain),
                "range": slot.range.kind.value
                if slot.kind is SlotKind.DATATYPE
                else sorted(r.name for r in slot.range.classes),
                "minCard": slot.min_card,
                "maxCard": slot.max_card,
            }
        )
    instances = []
    for inst in sorted(onto.instances.values(), key=lambda i: i.id):
        instances.append(
            {
                "name": inst.id.name,
                "types": sorted(t.name for t in inst.types),
                "values": {
                    slot_id.name: [
                        {"kind": v.kind.value, "lexical": v.lexical}
                        if v.is_primitive
                        else {"ref": v.ref.name}
                        for v in values
                    ]
                    for slot_id, values in sorted(inst.values.items())
                },
            }
        )

    def tree_node(cid, trail):
        children = [
            tree_node(sub, trail | {cid})
            for sub in onto.subclasses_of(cid)
            if sub not in trail
        ]
        return {"name": cid.name, "children": children}

    tree = [tree_node(root, {root}) for root in onto.roots()]
    return {
        "name": onto.name,
        "classes": classes,
        "slots": slots,
        "instances": instances,
        "tree": tree,
    }


def suggestion_json(s: Suggestion) -> dict:
    return {
        "key": json.dumps(op_to_dict(s.proposed), sort_keys=True),
        "operation": op_to_dict(s.proposed),
        "score": s.score,
        "explanations": [
            {
                "kind": e.kind.value,
                "text": e.text,
                "evidence": [str(f) for f in e.evidence],
                "score": e.score,
            }
            for e in s.explanations
        ],
        "relatedFrames": sorted(str(f) for f in s.related_frames),
    }


def conflict_json(c: Conflict) -> dict:
    return {
        "kind": c.kind.value,
        "frames": sorted(str(f) for f in c.frames),
        "detail": c.detail,
        "resolutions": [op_to_dict(r) for r in c.resolutions],
    }


@dataclass
class LiveSession:
    advisor: Advisor
    version: int
    directory: Path
    dismissed_ops: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def session(self) -> MergeSession:
        return self.advisor.session


class SessionStore:
    """Disk-backed registry of live sessions."""

    def __init__(self, state_dir: Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, LiveSession] = {}
        self._lock = threading.Lock()

    def create(
        self,
        sources: list[Ontology],
        merged_name: str,
        threshold: float | None,
        preferred: str | None,
        suffix_policy: str | None,
    ) -> tuple[str, LiveSession]:
        session_id = uuid.uuid4().hex[:12]
        directory = self.state_dir / session_id
        (directory / "sources").mkdir(parents=True)
        config = MatchConfig()
        if threshold is not None:
            config.threshold = threshold
        session = MergeSession(
            sources,
            merged_name=merged_name,
            preferred_source=preferred,
            policy=NamePolicy(suffix_policy) if suffix_policy else NamePolicy.SUFFIX_ON_COLLISION,
        )
        advisor = Advisor(session, config=config)
        advisor.seed()
        live = LiveSession(advisor=advisor, version=0, directory=directory)
        for onto in sources:
            (directory / "sources" / f"{onto.name}.owl").write_text(
                write_owl(onto), encoding="utf-8"
            )
        self._write_meta(live)
        (directory / "oplog.script").write_text("", encoding="utf-8")
        with self._lock:
            self._sessions[session_id] = live
        return session_id, live

    def get(self, session_id: str) -> LiveSession:
        with self._lock:
            live = self._sessions.get(session_id)
        if live is None:
            live = self._load(session_id)
            if live is None:
                raise HTTPException(status_code=404, detail="unknown-session")
            with self._lock:
                self._sessions.setdefault(session_id, live)
        return live

    def _meta_path(self, directory: Path) -> Path:
        return directory / "session.json"

    def _write_meta(self, live: LiveSession) -> None:
        session = live.session
        meta = {
            "version": live.version,
            "mergedName": session.merged.name,
            "preferred": session.preferred_source,
            "policy": session.policy.value,
            "threshold": live.advisor.config.threshold,
            "sources": list(session.sources),
            "dismissed": live.dismissed_ops,
        }
        self._meta_path(live.directory).write_text(json.dumps(meta, indent=2))

    def persist_after_mutation(self, live: LiveSession) -> None:
        lines = []
        for op in live.session.op_log:
            d = op_to_dict(op)
            op_type = d.pop("type")
            fields_text = " ".join(f"{k}={v}" for k, v in d.items())
            lines.append(f"step {op_type} {fields_text}".rstrip())
        (live.directory / "oplog.script").write_text(
            "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
        )
        self._write_meta(live)

    def _load(self, session_id: str) -> LiveSession | None:
        directory = self.state_dir / session_id
        meta_path = self._meta_path(directory)
        if not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text())
        sources = []
        for name in meta["sources"]:
            text = (directory / "sources" / f"{name}.owl").read_text(encoding="utf-8")
            onto, _ = read_owl(text)
            sources.append(onto)
        config = MatchConfig()
        config.threshold = meta.get("threshold", config.threshold)
        session = MergeSession(
            sources,
            merged_name=meta["mergedName"],
            preferred_source=meta.get("preferred"),
            policy=NamePolicy(meta.get("policy", "on-collision")),
        )
        advisor = Advisor(session, config=config)
        advisor.seed()
        dismissed_ops = meta.get("dismissed", [])
        for d in dismissed_ops:
            advisor.dismiss(op_from_dict(d).key)
        for raw in (directory / "oplog.script").read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or not line.startswith("step "):
                continue
            _, _, rest = line.partition(" ")
            op_type, _, fields_text = rest.partition(" ")
            d = {"type": op_type}
            for chunk in fields_text.split():
                key, _, value = chunk.partition("=")
                d[key] = value
            advisor.step(op_from_dict(d))
        return LiveSession(
            advisor=advisor,
            version=meta.get("version", len(session.op_log)),
            directory=directory,
            dismissed_ops=dismissed_ops,
        )


def create_app(state_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="ontomerge session service")
    store = SessionStore(Path(state_dir))
    app.state.store = store

    def state_payload(session_id: str, live: LiveSession) -> dict:
        session = live.session
        return {
            "sessionId": session_id,
            "stateVersion": live.version,
            "mergedName": session.merged.name,
            "preferred": session.preferred_source,
            "sources": [ontology_json(o) for o in session.sources.values()],
            "merged": ontology_json(session.merged),
            "opLog": [op_to_dict(op) for op in session.op_log],
        }

    @app.post("/sessions", status_code=201)
    async def create_session(
        files: list[UploadFile],
        merged_name: str = Form(DEFAULT_MERGED_NAME),
        threshold: float | None = Form(None),
        preferred: str | None = Form(None),
        suffix_policy: str | None = Form(None),
    ):
        sources = []
        for upload in files:
            text = (await upload.read()).decode("utf-8")
            try:
                onto, _ = read_owl(text)
            except OntomergeError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            sources.append(onto)
        try:
            session_id, live = store.create(
                sources, merged_name, threshold, preferred, suffix_policy
            )
        except (ValueError, OntomergeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            **state_payload(session_id, live),
            "suggestions": [suggestion_json(s) for s in live.advisor.suggestions],
            "conflicts": [conflict_json(c) for c in live.advisor.detect_conflicts()],
        }

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        live = store.get(session_id)
        with live.lock:
            return state_payload(session_id, live)

    @app.get("/sessions/{session_id}/suggestions")
    def get_suggestions(session_id: str):
        live = store.get(session_id)
        with live.lock:
            return {
                "stateVersion": live.version,
                "suggestions": [suggestion_json(s) for s in live.advisor.suggestions],
            }

    @app.get("/sessions/{session_id}/conflicts")
    def get_conflicts(session_id: str):
        live = store.get(session_id)
        with live.lock:
            return {
                "stateVersion": live.version,
                "conflicts": [conflict_json(c) for c in live.advisor.detect_conflicts()],
            }

    def check_version(live: LiveSession, expected) -> None:
        if expected is None:
            raise HTTPException(status_code=422, detail="expectedVersion is required")
        if int(expected) != live.version:
            raise HTTPException(
                status_code=409,
                detail={
                    "error": "version-conflict",
                    "stateVersion": live.version,
                },
            )

    @app.post("/sessions/{session_id}/operations")
    async def apply_operation(session_id: str, request: Request):
        body = await request.json()
        live = store.get(session_id)
        with live.lock:
            check_version(live, body.get("expectedVersion"))
            try:
                op = op_from_dict(body.get("operation") or {})
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            before = len(live.session.op_log)
            try:
                suggestions, conflicts = live.advisor.step(op)
            except OntomergeError as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": "operation-error", "kind": type(exc).__name__,
                            "message": str(exc)},
                ) from exc
            applied = len(live.session.op_log) > before
            if applied:
                live.version += 1
                store.persist_after_mutation(live)
            record = live.session.records[-1] if applied else None
            return {
                "stateVersion": live.version,
                "applied": applied,
                "result": str(record.result) if record and record.result else None,
                "created": [str(f) for _, f in record.created] if record else [],
                "deleted": [str(f) for _, f in record.deleted] if record else [],
                "suggestions": [suggestion_json(s) for s in suggestions],
                "conflicts": [conflict_json(c) for c in conflicts],
                "merged": ontology_json(live.session.merged),
            }

    @app.post("/sessions/{session_id}/undo")
    async def undo(session_id: str, request: Request):
        body = await request.json()
        live = store.get(session_id)
        with live.lock:
            check_version(live, body.get("expectedVersion"))
            try:
                live.advisor.undo()
            except OntomergeError as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": "operation-error", "kind": type(exc).__name__,
                            "message": str(exc)},
                ) from exc
            live.version += 1
            store.persist_after_mutation(live)
            return {
                "stateVersion": live.version,
                "suggestions": [suggestion_json(s) for s in live.advisor.suggestions],
                "conflicts": [conflict_json(c) for c in live.advisor.detect_conflicts()],
                "merged": ontology_json(live.session.merged),
            }

    @app.post("/sessions/{session_id}/preferred")
    async def set_preferred(session_id: str, request: Request):
        body = await request.json()
        live = store.get(session_id)
        with live.lock:
            preferred = body.get("preferred")
            if preferred is not None and preferred not in live.session.sources:
                raise HTTPException(status_code=422, detail=f"unknown source {preferred!r}")
            live.session.preferred_source = preferred
            store.persist_after_mutation(live)
            return {"stateVersion": live.version, "preferred": preferred}

    @app.post("/sessions/{session_id}/dismissals")
    async def dismiss(session_id: str, request: Request):
        body = await request.json()
        live = store.get(session_id)
        with live.lock:
            try:
                op_dict = body.get("operation") or {}
                op = op_from_dict(op_dict)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            live.advisor.dismiss(op.key)
            if op_dict not in live.dismissed_ops:
                live.dismissed_ops.append(op_dict)
            store.persist_after_mutation(live)
            return {
                "stateVersion": live.version,
                "suggestions": [suggestion_json(s) for s in live.advisor.suggestions],
            }

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, format: str = "canonical"):
        live = store.get(session_id)
        with live.lock:
            if format == "canonical":
                return PlainTextResponse(write_canonical(live.session.merged))
            if format == "owl":
                return PlainTextResponse(
                    write_owl(live.session.merged), media_type="application/rdf+xml"
                )
            raise HTTPException(status_code=422, detail=f"unknown format {format!r}")

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
