"""Lexical name-similarity strategies and the initial cross-ontology match list."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .model import FrameId, Ontology
from .operations import MergeClasses, MergeSlots
from .suggestions import Explanation, ExplanationKind, Suggestion

PAD = "#"  # boundary marker for n-grams; never occurs in an XML name

_CAMEL = re.compile(
    r"""
    (?<=[a-z0-9])(?=[A-Z])      # fooBar -> foo | Bar
    | (?<=[A-Z])(?=[A-Z][a-z])  # XMLFile -> XML | File
    """,
    re.VERBOSE,
)


@dataclass
class MatchConfig:
    threshold: float = 0.8
    ngram_n: int = 3
    strategy_weights: dict[str, float] = field(
        default_factory=lambda: {"exact": 1.0, "levenshtein": 1.0, "ngram": 1.0, "synonym": 1.0}
    )
    synonym_table: set[frozenset[str]] = field(default_factory=set)

    def __post_init__(self):
        if not any(w > 0 for w in self.strategy_weights.values()):
            raise ValueError("at least one strategy weight must be positive")


def load_synonyms(path: str | Path) -> set[frozenset[str]]:
    """Read a synonym table: one tab-separated pair per line, '#' comments."""
    table: set[frozenset[str]] = set()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t") if p.strip()]
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two tab-separated names")
        table.add(frozenset(p.lower() for p in parts))
    return table


def normalize_name(name: str) -> list[str]:
    """Lowercased tokens split on underscores, hyphens and camelCase bounds."""
    if not name:
        raise ValueError("empty name")
    tokens: list[str] = []
    for chunk in re.split(r"[_\-]+", name):
        if not chunk:
            continue
        tokens.extend(t.lower() for t in _CAMEL.split(chunk) if t)
    return tokens


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character insertions, deletions and substitutions."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, 1):
            append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_similarity(a: str, b: str) -> float:
    """1 − d/max(|a|,|b|); defined as 1.0 when both strings are empty."""
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


def _grams(s: str, n: int) -> dict[str, int]:
    padded = PAD * (n - 1) + s + PAD * (n - 1)
    out: dict[str, int] = {}
    for i in range(len(padded) - n + 1):
        g = padded[i : i + n]
        out[g] = out.get(g, 0) + 1
    return out


def ngram_similarity(a: str, b: str, n: int = 3) -> float:
    """Dice coefficient over character n-gram multisets of the lowercased
    strings, padded with n−1 boundary markers on each side."""
    if n < 1:
        raise ValueError(f"invalid n: {n}")
    if not a and not b:
        return 1.0
    ga, gb = _grams(a.lower(), n), _grams(b.lower(), n)
    common = sum(min(c, gb.get(g, 0)) for g, c in ga.items())
    total = sum(ga.values()) + sum(gb.values())
    return 2.0 * common / total if total else 1.0


def _strategy_scores(a: str, b: str, config: MatchConfig) -> dict[str, float]:
    scores: dict[str, float] = {}
    weights = config.strategy_weights
    if weights.get("exact", 0) > 0:
        scores["exact"] = 1.0 if normalize_name(a) == normalize_name(b) else 0.0
    if weights.get("synonym", 0) > 0:
        scores["synonym"] = 1.0 if frozenset((a.lower(), b.lower())) in config.synonym_table else 0.0
    if weights.get("levenshtein", 0) > 0:
        scores["levenshtein"] = levenshtein_similarity(
            "".join(normalize_name(a)), "".join(normalize_name(b))
        )
    if weights.get("ngram", 0) > 0:
        scores["ngram"] = ngram_similarity(a, b, config.ngram_n)
    return scores


# tie-break order when several strategies reach the same score
_STRATEGY_ORDER = ("exact", "synonym", "levenshtein", "ngram")


def name_similarity(a: str, b: str, config: MatchConfig | None = None) -> float:
    """Weighted maximum over the enabled strategies, clamped to [0, 1]."""
    return best_strategy(a, b, config or MatchConfig())[1]


def best_strategy(a: str, b: str, config: MatchConfig) -> tuple[str, float]:
    scores = _strategy_scores(a, b, config)
    best_name, best_score = "none", 0.0
    for strategy in _STRATEGY_ORDER:
        if strategy not in scores:
            continue
        weighted = min(1.0, scores[strategy] * config.strategy_weights[strategy])
        if weighted > best_score:
            best_name, best_score = strategy, weighted
    return best_name, best_score


def initial_matches(
    o1: Ontology, o2: Ontology, config: MatchConfig | None = None
) -> list[Suggestion]:
    """All cross-ontology class and slot pairs at or above the threshold,
    as merge suggestions sorted by score descending then pair name."""
    config = config or MatchConfig()
    out: list[tuple[float, str, str, Suggestion]] = []

    def consider(a: FrameId, b: FrameId, make_op) -> None:
        strategy, score = best_strategy(a.name, b.name, config)
        if score < config.threshold:
            return
        explanation = Explanation(
            kind=ExplanationKind.LEXICAL_MATCH,
            text=f"{a.name} ~ {b.name}: {strategy} similarity {score:.2f}",
            evidence=(a, b),
            score=score,
        )
        out.append(
            (
                score,
                a.name,
                b.name,
                Suggestion(
                    proposed=make_op(a, b),
                    score=score,
                    explanations=[explanation],
                    related_frames=frozenset((a, b)),
                ),
            )
        )

    for c1 in sorted(o1.classes):
        for c2 in sorted(o2.classes):
            consider(c1, c2, lambda a, b: MergeClasses(a, b))
    for s1 in sorted(o1.slots):
        for s2 in sorted(o2.slots):
            if o1.slots[s1].kind is not o2.slots[s2].kind:
                continue  # a merge across slot kinds would be rejected
            consider(s1, s2, lambda a, b: MergeSlots(a, b))

    out.sort(key=lambda item: (-item[0], item[1], item[2]))
    return [s for *_ , s in out]
