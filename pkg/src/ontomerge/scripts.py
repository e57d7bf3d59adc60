"""Replayable merge scripts: one operation per line, '#' comments.

Header lines name the source files and session configuration; step lines
carry an operation type plus ``key=value`` fields, with frames written as
``ontology:name``.  Replay loads the sources, applies every step through
the advisor, and fails atomically with the index of the first bad step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .advisor import Advisor
from .engine import DEFAULT_MERGED_NAME, MergeSession, NamePolicy
from .errors import ScriptError, StepFailureError
from .matching import MatchConfig, load_synonyms
from .operations import Operation, op_from_dict, op_to_dict
from .owlio import read_owl_file


@dataclass
class MergeScript:
    sources: list[tuple[str, str]]  # (ontology name, path)
    merged_name: str = DEFAULT_MERGED_NAME
    threshold: float | None = None
    suffix_policy: NamePolicy = NamePolicy.SUFFIX_ON_COLLISION
    preferred: str | None = None
    synonyms: str | None = None
    steps: list[Operation] = field(default_factory=list)


def parse_script(text: str) -> MergeScript:
    script = MergeScript(sources=[])
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if keyword == "source":
                name, _, path = rest.partition(" ")
                if not name or not path.strip():
                    raise ValueError("expected: source <name> <path>")
                script.sources.append((name, path.strip()))
            elif keyword == "merged":
                script.merged_name = rest
            elif keyword == "threshold":
                script.threshold = float(rest)
            elif keyword == "suffix-policy":
                script.suffix_policy = NamePolicy(rest)
            elif keyword == "preferred":
                script.preferred = rest
            elif keyword == "synonyms":
                script.synonyms = rest
            elif keyword == "step":
                op_type, _, fields_text = rest.partition(" ")
                d = {"type": op_type}
                for chunk in fields_text.split():
                    key, sep, value = chunk.partition("=")
                    if not sep:
                        raise ValueError(f"malformed field {chunk!r}")
                    d[key] = value
                script.steps.append(op_from_dict(d))
            else:
                raise ValueError(f"unknown keyword {keyword!r}")
        except (ValueError, KeyError) as exc:
            raise ScriptError(f"line {lineno}: {exc}") from exc
    if not script.sources:
        raise ScriptError("script declares no sources")
    return script


def serialize_script(script: MergeScript) -> str:
    lines = [f"source {name} {path}" for name, path in script.sources]
    lines.append(f"merged {script.merged_name}")
    if script.threshold is not None:
        lines.append(f"threshold {script.threshold}")
    if script.suffix_policy is not NamePolicy.SUFFIX_ON_COLLISION:
        lines.append(f"suffix-policy {script.suffix_policy.value}")
    if script.preferred:
        lines.append(f"preferred {script.preferred}")
    if script.synonyms:
        lines.append(f"synonyms {script.synonyms}")
    for op in script.steps:
        d = op_to_dict(op)
        op_type = d.pop("type")
        fields_text = " ".join(f"{k}={v}" for k, v in d.items())
        lines.append(f"step {op_type} {fields_text}".rstrip())
    return "\n".join(lines) + "\n"


def load_script(path: str | Path) -> MergeScript:
    return parse_script(Path(path).read_text(encoding="utf-8"))


def build_session(script: MergeScript, base_dir: str | Path | None = None) -> Advisor:
    """Load the script's sources and configuration into a fresh advisor."""
    base = Path(base_dir) if base_dir else Path(".")
    sources = []
    for name, path in script.sources:
        resolved = Path(path)
        if not resolved.is_absolute():
            resolved = base / resolved
        onto, _ = read_owl_file(resolved)
        if onto.name != name:
            raise ScriptError(
                f"source file {path} declares ontology {onto.name!r}, expected {name!r}"
            )
        sources.append(onto)
    session = MergeSession(
        sources,
        merged_name=script.merged_name,
        preferred_source=script.preferred,
        policy=script.suffix_policy,
    )
    config = MatchConfig()
    if script.threshold is not None:
        config.threshold = script.threshold
    if script.synonyms:
        synonyms_path = Path(script.synonyms)
        if not synonyms_path.is_absolute():
            synonyms_path = base / synonyms_path
        config.synonym_table = load_synonyms(synonyms_path)
    return Advisor(session, config=config)


def replay(script: MergeScript, base_dir: str | Path | None = None) -> Advisor:
    """Apply every step in order; abort atomically at the first failure."""
    advisor = build_session(script, base_dir)
    for index, op in enumerate(script.steps):
        try:
            advisor.step(op)
        except Exception as exc:
            raise StepFailureError(index, exc) from exc
    return advisor


def replay_file(path: str | Path) -> Advisor:
    path = Path(path)
    return replay(load_script(path), base_dir=path.parent)
