
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathrules import (
    Fact,
    Vocabulary,
    augment_inverse,
    build_index,
    export_triples,
    load_triples,
)

from conftest import make_kg, random_kg


def write_lines(tmp_path, lines, name="triples.txt"):
    path = tmp_path / name
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestLoadTriples:
    def test_singleton(self, tmp_path):
        path = write_lines(tmp_path, ["a\tr\tb"])
        facts, vocab = load_triples(path)
        assert facts == [Fact(0, 0, 1)]
        assert len(vocab.entities) == 2
        assert len(vocab.relations) == 1

    def test_duplicate_lines_collapse(self, tmp_path):
        path = write_lines(tmp_path, ["a\tr\tb", "a\tr\tb"])
        facts, _ = load_triples(path)
        assert len(facts) == 1

    def test_ids_in_first_seen_order(self, tmp_path):
        path = write_lines(tmp_path, ["b\ts\ta", "a\tr\tb"])
        _, vocab = load_triples(path)
        assert vocab.entities.names == ["b", "a"]
        assert vocab.relations.names == ["s", "r"]

    def test_malformed_line_reports_number(self, tmp_path):
        path = write_lines(tmp_path, ["a\tr\tb", "only two\tfields"])
        with pytest.raises(ValueError, match="line 2"):
            load_triples(path)

    def test_empty_file_rejected(self, tmp_path):
        path = write_lines(tmp_path, [])
        with pytest.raises(ValueError, match="no facts"):
            load_triples(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_triples(tmp_path / "nope.txt")

    def test_blank_lines_skipped(self, tmp_path):
        path = write_lines(tmp_path, ["a\tr\tb", "", "c\tr\td"])
        facts, _ = load_triples(path)
        assert len(facts) == 2

    def test_reversed_column_order(self, tmp_path):
        path = write_lines(tmp_path, ["b\tr\ta"])
        facts, vocab = load_triples(path, column_order="ors")
        (fact,) = facts
        assert vocab.entities.name_of(fact.subject) == "a"
        assert vocab.entities.name_of(fact.object) == "b"

    def test_shared_vocab_extends(self, tmp_path):
        train = write_lines(tmp_path, ["a\tr\tb"], "train.txt")
        test = write_lines(tmp_path, ["c\tr\ta"], "test.txt")
        facts, vocab = load_triples(train)
        more, _ = load_triples(test, vocab)
        assert len(vocab.entities) == 3
        assert more[0].relation == facts[0].relation

    @given(
        st.lists(
            st.tuples(
                st.text(alphabet="abcxyz/._", min_size=1, max_size=6),
                st.text(alphabet="rs_", min_size=1, max_size=3),
                st.text(alphabet="abcxyz/._", min_size=1, max_size=6),
            ),
            min_size=1,
            max_size=40,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_string_round_trip(self, tmp_path_factory, triples):
        tmp = tmp_path_factory.mktemp("rt")
        path = write_lines(tmp, ["\t".join(t) for t in triples])
        facts, vocab = load_triples(path)
        assert set(export_triples(facts, vocab)) == set(triples)


class TestAugmentInverse:
    def test_single_fact(self):
        vocab = Vocabulary()
        facts = [Fact(vocab.entities.intern("a"), vocab.intern_relation("r"), vocab.entities.intern("b"))]
        augmented = augment_inverse(facts, vocab)
        assert augmented == [Fact(0, 0, 1), Fact(1, 1, 0)]
        assert vocab.relations.name_of(1) == "INV_r"

    def test_relation_count_doubles(self, toy_kg):
        _, vocab, _ = toy_kg
        base = [n for n in vocab.relations.names if not n.startswith("INV_")]
        assert len(vocab.relations) == 2 * len(base)

    def test_self_loop_preserved(self):
        vocab = Vocabulary()
        facts = [Fact(vocab.entities.intern("a"), vocab.intern_relation("r"), 0)]
        augmented = augment_inverse(facts, vocab)
        assert augmented == [Fact(0, 0, 0), Fact(0, 1, 0)]

    def test_output_exactly_double(self):
        facts, vocab, _ = make_kg([("a", "r", "b"), ("b", "r", "a"), ("a", "s", "a")])
        assert len(augment_inverse(facts, vocab)) == 2 * len(facts)

    def test_inverse_is_involution(self, toy_kg):
        _, vocab, _ = toy_kg
        for rid in range(len(vocab.relations)):
            assert vocab.inverse_of(vocab.inverse_of(rid)) == rid

    def test_late_relation_gets_paired_inverse(self):
        facts, vocab, _ = make_kg([("a", "r", "b")])
        rid = vocab.intern_relation("brand_new")
        inv = vocab.inverse_of(rid)
        assert vocab.relations.name_of(inv) == "INV_brand_new"
        assert vocab.inverse_of(inv) == rid

    def test_inverse_name_collision_rejected(self):
        vocab = Vocabulary()
        vocab.intern_relation("r")
        vocab.intern_relation("INV_r")
        with pytest.raises(ValueError, match="INV_r"):
            vocab.ensure_inverse_relations()


class TestGraphIndex:
    def test_direct_construction(self):
        _, vocab, index = make_kg([("a", "r", "b"), ("a", "r", "c")])
        a = vocab.entities.id_of("a")
        r = vocab.relations.id_of("r")
        b, c = vocab.entities.id_of("b"), vocab.entities.id_of("c")
        assert index.q_lookup(a, r) == tuple(sorted((b, c)))
        assert index.fanout(a, r) == 2

    def test_absent_key_is_empty(self):
        _, vocab, index = make_kg([("a", "r", "b")])
        b = vocab.entities.id_of("b")
        r = vocab.relations.id_of("r")
        assert index.q_lookup(b, r) == ()
        assert index.fanout(b, r) == 0

    def test_lookup_matches_linear_scan(self):
        for seed in range(25):
            facts, vocab, index = random_kg(seed, n_entities=50, n_relations=5, n_facts=120)
            augmented = augment_inverse(facts, vocab)
            for s in range(len(vocab.entities)):
                for r in range(len(vocab.relations)):
                    expected = sorted(o for fs, fr, o in augmented if fs == s and fr == r)
                    assert list(index.q_lookup(s, r)) == expected
                    assert index.fanout(s, r) == len(expected)

    def test_inverse_closure(self):
        _, _, index = random_kg(3, n_entities=15, n_facts=40)
        for (s, r), objects in index.forward.items():
            for o in objects:
                assert index.has_fact(o, index.inverse_of(r), s)

    def test_has_fact(self):
        _, vocab, index = make_kg([("a", "r", "b")])
        a, b = vocab.entities.id_of("a"), vocab.entities.id_of("b")
        r = vocab.relations.id_of("r")
        assert index.has_fact(a, r, b)
        assert not index.has_fact(b, r, a)
        assert index.has_fact(b, vocab.inverse_of(r), a)

    def test_edges_of_sorted_and_complete(self):
        _, _, index = random_kg(9, n_entities=12, n_facts=30)
        for s in range(index.entity_count):
            edges = index.edges_of(s)
            assert edges == sorted(edges)
            expected = [
                (r, o)
                for r in index.relations_of.get(s, ())
                for o in index.q_lookup(s, r)
            ]
            assert edges == expected

    def test_duplicate_facts_collapse(self):
        vocab = Vocabulary()
        a = vocab.entities.intern("a")
        b = vocab.entities.intern("b")
        r = vocab.intern_relation("r")
        vocab.ensure_inverse_relations()
        index = build_index([Fact(a, r, b), Fact(a, r, b)], vocab)
        assert index.fact_count == 1
        assert index.fanout(a, r) == 1

    def test_adjacency_is_immutable_type(self, toy_kg):
        _, _, index = toy_kg
        for objects in index.forward.values():
            assert isinstance(objects, tuple)

    def test_wn18rr_counts(self):
        from conftest import require_dataset

        paths = require_dataset("wn18rr")
        facts, vocab = load_triples(paths["train"])
        assert len(facts) == 86_835
        assert len(vocab.entities) == 40_559
        assert len(vocab.relations) == 11
        augmented = augment_inverse(facts, vocab)
        assert len(vocab.relations) == 22
        assert len(augmented) == 2 * 86_835
