"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Everything asserts
at its stated tolerance; the golden comparisons are byte-exact.
"""

import itertools
import multiprocessing
import random

import numpy as np
from click.testing import CliRunner
from fastapi.testclient import TestClient

from conftest import lift_niagara, lift_ruby, lift_sigmod, random_ontology
from ontomerge.advisor import Advisor
from ontomerge.cli import main as cli_main
from ontomerge.engine import MergeSession
from ontomerge.fixturedata import NIAGARA, RUBY, fixture_path
from ontomerge.matching import initial_matches, levenshtein, ngram_similarity
from ontomerge.model import (
    ClassFrame,
    FrameKind,
    Ontology,
    RangeSpec,
    SlotFrame,
    SlotKind,
    XsdKind,
    validate,
)
from ontomerge.operations import MergeClasses, MergeSlots
from ontomerge.owlio import read_owl, write_canonical, write_owl
from ontomerge.scripts import load_script, replay_file
from ontomerge.service import create_app

PASS = "ACCEPTANCE {n}{part}: PASS — {text}"


def ok(n, text, part=""):
    print(PASS.format(n=n, part=part, text=text))


# Reference property rows of the merged ontology, expanded per domain;
# domain names follow the lifted element names.
TWO_SOURCE_OBJECT_ROWS = {
    ("hasbiblioentry", "bibliography", "biblioentry"),
    ("hasvendor", "bibliography", "vendor"),
    ("hasbook", "vendor", "book"),
    ("hasauthor", "book", "author"),
    ("hasauthor", "biblioentry", "author"),
    ("haspublisher", "biblioentry", "publisher"),
}
TWO_SOURCE_DATATYPE_ROWS = {
    ("id", "bibliography", "NCName"),
    ("id", "biblioentry", "NCName"),
    ("id", "vendor", "NCName"),
    ("name", "vendor", "NCName"),
    ("email", "vendor", "string"),
    ("phone", "vendor", "NMTOKEN"),
    ("title", "book", "string"),
    ("publisher", "book", "string"),
    ("year", "book", "integer"),
    ("price", "book", "decimal"),
    ("title", "biblioentry", "string"),
    ("pubdate", "biblioentry", "integer"),
    ("firstname", "author", "NCName"),
    ("lastname", "author", "NCName"),
}
THIRD_SOURCE_OBJECT_ROWS = {
    ("hasissue", "SigmodRecord", "issue"),
    ("hasarticles", "issue", "articles"),
    ("hasarticle", "articles", "article"),
    ("hasauthors", "article", "authors"),
    ("hasauthor", "authors", "author"),
}
THIRD_SOURCE_DATATYPE_ROWS = {
    ("volume", "issue", "integer"),
    ("number", "issue", "integer"),
    ("title", "article", "string"),
    ("initPage", "article", "integer"),
    ("endPage", "article", "integer"),
    ("position", "author", "integer"),
    ("surname", "author", "NCName"),
}


def object_rows(onto: Ontology) -> set[tuple[str, str, str]]:
    return {
        (slot.id.name, d.name, r.name)
        for slot in onto.slots.values()
        if slot.kind is SlotKind.OBJECT
        for d in slot.domain
        for r in slot.range.classes
    }


def datatype_rows(onto: Ontology) -> set[tuple[str, str, str]]:
    return {
        (slot.id.name, d.name, slot.range.kind.value)
        for slot in onto.slots.values()
        if slot.kind is SlotKind.DATATYPE
        for d in slot.domain
    }


class TestCriterion1FixtureLift:
    def test_exact_class_sets(self):
        ruby = lift_ruby()
        assert ruby.local_names(FrameKind.CLASS) == {
            "bibliography",
            "biblioentry",
            "author",
            "publisher",
        }
        niagara = lift_niagara()
        assert niagara.local_names(FrameKind.CLASS) == {"bib", "vendor", "book", "author"}
        ok(1, "lifted class sets match the two source trees exactly")


class TestCriterion2DatatypeInference:
    def test_exact_ranges(self):
        niagara = lift_niagara()
        kinds = {
            s.id.name: s.range.kind
            for s in niagara.slots.values()
            if s.kind is SlotKind.DATATYPE
        }
        assert kinds == {
            "name": XsdKind.NCNAME,
            "email": XsdKind.STRING,
            "phone": XsdKind.NMTOKEN,
            "title": XsdKind.STRING,
            "publisher": XsdKind.STRING,
            "year": XsdKind.INTEGER,
            "price": XsdKind.DECIMAL,
            "id": XsdKind.NCNAME,
            "firstname": XsdKind.NCNAME,
            "lastname": XsdKind.NCNAME,
        }
        ruby = lift_ruby()
        assert ruby.slots[ruby.cid("id")].range.kind is XsdKind.NCNAME
        ok(2, "lifted datatype ranges match the property table rows exactly")


class TestCriterion3ReplayGolden:
    def test_two_way_replay(self):
        advisor = replay_file(fixture_path("bibliography_two_way.script"))
        merged = advisor.session.merged
        golden = fixture_path("golden/bibliography_two_way.canonical.txt").read_text()
        assert write_canonical(merged) == golden  # byte-exact
        assert object_rows(merged) == TWO_SOURCE_OBJECT_ROWS
        assert datatype_rows(merged) == TWO_SOURCE_DATATYPE_ROWS
        assert validate(merged) == []
        ok(3, "two-way replay is byte-identical to golden and matches both tables", "a")

    def test_three_way_replay(self):
        advisor = replay_file(fixture_path("bibliography_three_way.script"))
        merged = advisor.session.merged
        golden = fixture_path("golden/bibliography_three_way.canonical.txt").read_text()
        assert write_canonical(merged) == golden
        assert object_rows(merged) == TWO_SOURCE_OBJECT_ROWS | THIRD_SOURCE_OBJECT_ROWS
        assert datatype_rows(merged) == (
            TWO_SOURCE_DATATYPE_ROWS | THIRD_SOURCE_DATATYPE_ROWS
        )
        assert validate(merged) == []
        ok(3, "three-way replay reproduces the full table row sets", "b")


class TestCriterion4MatcherBehavior:
    def test_membership_at_default_threshold(self):
        ruby, niagara = lift_ruby(), lift_niagara()
        ops = [s.proposed for s in initial_matches(ruby, niagara)]
        assert MergeClasses(ruby.cid("author"), niagara.cid("author")) in ops
        assert MergeClasses(ruby.cid("bibliography"), niagara.cid("bib")) not in ops
        ok(4, "author/author suggested; bibliography/bib left to the user")


class TestCriterion5FollowupRule:
    def test_gender_sex_suggestion(self):
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
        advisor = Advisor(MergeSession([o1, o2]))
        suggestions, _ = advisor.step(MergeSlots(o1.cid("sex"), o2.cid("sex")))
        assert any(
            isinstance(s.proposed, MergeClasses)
            and {s.proposed.a.name, s.proposed.b.name} == {"Gender", "Sex"}
            for s in suggestions
        )
        ok(5, "merging the sex slots leaves a standing Gender/Sex class suggestion")


class TestCriterion6aRandomOperations:
    def test_thousand_random_sequences(self):
        from test_engine import random_operation

        rng = random.Random(20260810)
        for round_no in range(1000):
            session = MergeSession(
                [
                    random_ontology(rng, "src1"),
                    random_ontology(rng, "src2"),
                ]
            )
            for _ in range(rng.randint(1, 8)):
                op = random_operation(rng, session)
                try:
                    session.apply(op)
                except Exception:
                    continue
            violations = validate(session.merged)
            assert violations == [], f"round {round_no}: {violations}"
            for value in session.image_map.values():
                assert (
                    value in session.merged.classes
                    or value in session.merged.slots
                    or value in session.merged.instances
                ), f"round {round_no}: stale image {value}"
            assert session.accounting_gaps() == [], f"round {round_no}"
        ok(6, "1000 random operation sequences keep every session invariant", "a")


ALPHABET = "abc"
MAX_LEN = 7


def _oracle_tables():
    """The naive recursive definition evaluated bottom-up for all strings
    over the 3-symbol alphabet up to length 7.

    Encoding: character i of a string is base-3 digit i (first character
    least significant), so code//3 strips the first character.
    """
    tables = {}
    for la in range(MAX_LEN + 1):
        for lb in range(MAX_LEN + 1):
            na, nb = 3**la, 3**lb
            if la == 0:
                tables[la, lb] = np.full((1, nb), lb, dtype=np.int8)
                continue
            if lb == 0:
                tables[la, lb] = np.full((na, 1), la, dtype=np.int8)
                continue
            ia, ib = np.arange(na), np.arange(nb)
            first_a = (ia % 3)[:, None]
            first_b = (ib % 3)[None, :]
            rest_a, rest_b = ia // 3, ib // 3
            tail_tail = tables[la - 1, lb - 1][np.ix_(rest_a, rest_b)]
            tail_b = tables[la - 1, lb][np.ix_(rest_a, ib)]
            a_tail = tables[la, lb - 1][np.ix_(ia, rest_b)]
            step = np.minimum(np.minimum(tail_b, a_tail), tail_tail) + 1
            tables[la, lb] = np.where(first_a == first_b, tail_tail, step).astype(np.int8)
    return tables


def _naive_recursion(a, b):
    if not a:
        return len(b)
    if not b:
        return len(a)
    if a[0] == b[0]:
        return _naive_recursion(a[1:], b[1:])
    return 1 + min(
        _naive_recursion(a[1:], b),
        _naive_recursion(a, b[1:]),
        _naive_recursion(a[1:], b[1:]),
    )


def _all_strings():
    out = [("", 0, 0)]
    for length in range(1, MAX_LEN + 1):
        for chars in itertools.product(ALPHABET, repeat=length):
            code = 0
            for i, ch in enumerate(chars):
                code += ALPHABET.index(ch) * 3**i
            out.append(("".join(chars), length, code))
    return out


_WORKER_STATE = {}


def _init_worker():
    _WORKER_STATE["tables"] = {k: v.tolist() for k, v in _oracle_tables().items()}
    _WORKER_STATE["strings"] = _all_strings()


def _check_range(bounds):
    lo, hi = bounds
    tables = _WORKER_STATE["tables"]
    strings = _WORKER_STATE["strings"]
    n = len(strings)
    bad = []
    for i in range(lo, hi):
        a, la, ca = strings[i]
        for j in range(i, n):
            b, lb, cb = strings[j]
            if levenshtein(a, b) != tables[la, lb][ca][cb]:
                bad.append((a, b))
    return bad


class TestCriterion6bLevenshteinOracle:
    def test_oracle_agrees_with_literal_recursion_on_sample(self):
        tables = _oracle_tables()
        strings = _all_strings()
        rng = random.Random(7)
        for _ in range(400):
            a, la, ca = rng.choice(strings)
            b, lb, cb = rng.choice(strings)
            if la + lb > 9:
                continue  # keep the un-memoized recursion cheap
            assert int(tables[la, lb][ca, cb]) == _naive_recursion(a, b)
        # the recursion is symmetric over all ordered pairs
        for la in range(MAX_LEN + 1):
            for lb in range(MAX_LEN + 1):
                assert np.array_equal(tables[la, lb], tables[lb, la].T)

    def test_exhaustive_pairs_up_to_length_seven(self):
        strings = _all_strings()
        n = len(strings)
        # split the triangular pair space into similar-cost chunks
        bounds, lo = [], 0
        total = n * (n + 1) // 2
        target = total / 16
        acc = 0
        for i in range(n):
            acc += n - i
            if acc >= target:
                bounds.append((lo, i + 1))
                lo, acc = i + 1, 0
        if lo < n:
            bounds.append((lo, n))
        with multiprocessing.Pool(2, initializer=_init_worker) as pool:
            for bad in pool.imap_unordered(_check_range, bounds):
                assert bad == [], f"mismatches: {bad[:5]}"
        ok(6, f"edit distance equals the recursion oracle on all {total} pairs", "b")

    def test_metric_axioms_on_random_pairs(self):
        rng = random.Random(99)

        def rand_string():
            return "".join(rng.choice("abcdef") for _ in range(rng.randint(0, 10)))

        for _ in range(10000):
            a, b, c = rand_string(), rand_string(), rand_string()
            dab = levenshtein(a, b)
            assert dab == levenshtein(b, a)
            assert (dab == 0) == (a == b)
            assert levenshtein(a, c) <= dab + levenshtein(b, c)
        ok(6, "metric axioms hold on 10000 random string pairs", "b2")


class TestCriterion6cNgram:
    def test_bounded_and_symmetric(self):
        rng = random.Random(5)
        for _ in range(10000):
            a = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 8)))
            n = rng.randint(1, 4)
            s = ngram_similarity(a, b, n)
            assert 0.0 <= s <= 1.0
            assert s == ngram_similarity(b, a, n)
        ok(6, "n-gram similarity stays in [0,1] and is symmetric", "c")


class TestCriterion6dUndo:
    def test_undo_k_restores_byte_identical_export(self):
        from test_engine import random_operation

        rng = random.Random(31)
        for _ in range(60):
            session = MergeSession(
                [random_ontology(rng, "src1"), random_ontology(rng, "src2")]
            )
            snapshots = [write_canonical(session.merged)]
            applied = 0
            attempts = 0
            while applied < rng.randint(1, 6) and attempts < 30:
                attempts += 1
                try:
                    session.apply(random_operation(rng, session))
                except Exception:
                    continue
                applied += 1
                snapshots.append(write_canonical(session.merged))
            for depth in range(applied, 0, -1):
                session.undo()
                assert write_canonical(session.merged) == snapshots[depth - 1]
        ok(6, "k undos after k operations restore byte-identical exports", "d")


class TestCriterion6eSelfMerge:
    def test_auto_merge_with_exact_copy_keeps_frame_counts(self):
        rng = random.Random(1234)
        for _ in range(8):
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
                clone.add_slot(
                    SlotFrame(
                        clone.cid(slot.id.name),
                        slot.kind,
                        domain={clone.cid(d.name) for d in slot.domain},
                        range=RangeSpec.datatype(slot.range.kind)
                        if slot.range.is_datatype
                        else RangeSpec.of_classes(
                            {clone.cid(r.name) for r in slot.range.classes}
                        ),
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
        ok(6, "auto-merging an ontology with its copy is frame-count neutral", "e")


class TestCriterion6fOwlFixpoint:
    def test_write_read_write_on_all_fixtures(self):
        fixtures = [lift_ruby(), lift_niagara(), lift_sigmod()]
        for script in ("bibliography_two_way.script", "bibliography_three_way.script"):
            fixtures.append(replay_file(fixture_path(script)).session.merged)
        from ontomerge.ingest import LiftConfig, infer_schema, lift
        from ontomerge.fixturedata import fixture_text

        docs = [fixture_text("niagara_bib.xml")]
        fixtures.append(
            lift(infer_schema(docs), docs, LiftConfig(with_instances=True), name=NIAGARA)
        )
        for onto in fixtures:
            once = write_owl(onto)
            reread, _ = read_owl(once)
            assert write_owl(reread) == once
        ok(6, "OWL write/read/write is a fixpoint on every fixture", "f")


class TestCriterion7CliServiceEquivalence:
    def test_same_script_through_cli_and_http(self, tmp_path):
        script_file = fixture_path("bibliography_two_way.script")
        runner = CliRunner()
        result = runner.invoke(
            cli_main,
            ["merge", "--script", str(script_file), "--format", "canonical"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        cli_canonical = result.output

        script = load_script(script_file)
        with TestClient(create_app(tmp_path / "state")) as client:
            files = [
                (
                    "files",
                    (f"{name}.owl", fixture_path(path).read_text(), "application/rdf+xml"),
                )
                for name, path in [
                    (RUBY, "ruby_bibliography.owl"),
                    (NIAGARA, "niagara_bib.owl"),
                ]
            ]
            created = client.post("/sessions", files=files)
            assert created.status_code == 201, created.text
            sid = created.json()["sessionId"]
            version = created.json()["stateVersion"]
            from ontomerge.operations import op_to_dict

            for op in script.steps:
                response = client.post(
                    f"/sessions/{sid}/operations",
                    json={"expectedVersion": version, "operation": op_to_dict(op)},
                )
                assert response.status_code == 200, response.text
                version = response.json()["stateVersion"]
            http_canonical = client.get(f"/sessions/{sid}/export?format=canonical").text
        assert http_canonical == cli_canonical
        golden = fixture_path("golden/bibliography_two_way.canonical.txt").read_text()
        assert http_canonical == golden
        ok(7, "CLI and HTTP replays export byte-identical canonical text")
