import json
import random

import pytest

from latentwsd.corpus import (
    CorpusMatrices,
    Instance,
    Role,
    Token,
    Vocabulary,
    arc_counts,
    build_corpus_matrices,
    build_matrix_A,
    build_matrix_B,
    build_matrix_C_local,
    build_matrix_D_global,
    build_vocab,
    iter_sentences,
    load_instances,
    matrix_D_from_arcs,
    write_instances,
)
from latentwsd.errors import ConfigError, ParseError


def tok(lemma, head=None, pos="NOUN"):
    return Token(surface=lemma, lemma=lemma, pos=pos, head=head, deprel=None if head is None else "dep")


def inst(lemmas, target, sense=None, id="i"):
    return Instance(id=id, target_lemma=lemmas[target], target_index=target,
                    tokens=tuple(tok(l) for l in lemmas), sense_id=sense)


def row(M, i=0):
    return {j: v for r, j, v in M.triplets() if r == i}


def V(*lemmas):
    return Vocabulary(lemmas).freeze()


class TestLoad:
    def test_empty_file(self, tmp_path):
        (tmp_path / "e.jsonl").write_text("")
        assert load_instances(tmp_path / "e.jsonl") == []

    def test_round_trip(self, tmp_path):
        obj = {
            "id": "x1", "target_lemma": "bank", "target_index": 1, "sense_id": "s1",
            "tokens": [
                {"surface": "The", "lemma": "the", "pos": "DET", "head": 1, "deprel": "det"},
                {"surface": "bank", "lemma": "bank", "pos": "NOUN", "head": None, "deprel": None},
            ],
        }
        (tmp_path / "one.jsonl").write_text(json.dumps(obj) + "\n")
        [loaded] = load_instances(tmp_path / "one.jsonl")
        assert loaded.to_dict() == obj

    def test_head_out_of_range_names_line(self, tmp_path):
        good = inst(["a", "t"], 1).to_dict()
        bad = inst(["a", "t"], 1).to_dict()
        bad["tokens"][0]["head"] = 5
        (tmp_path / "b.jsonl").write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
        with pytest.raises(ParseError) as err:
            load_instances(tmp_path / "b.jsonl")
        assert err.value.line == 2
        assert ":2:" in str(err.value)

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: d.update(target_index=9),
            lambda d: d.update(tokens=[]),
            lambda d: d.pop("id"),
            lambda d: d["tokens"][0].update(head=0),  # self-loop
            lambda d: d.update(target_index="1"),
        ],
    )
    def test_invalid_records(self, tmp_path, mutate):
        d = inst(["a", "t"], 1).to_dict()
        mutate(d)
        (tmp_path / "x.jsonl").write_text(json.dumps(d) + "\n")
        with pytest.raises(ParseError):
            load_instances(tmp_path / "x.jsonl")

    def test_bad_json(self, tmp_path):
        (tmp_path / "x.jsonl").write_text("{not json\n")
        with pytest.raises(ParseError):
            load_instances(tmp_path / "x.jsonl")

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_instances(tmp_path / "nope.jsonl")

    def test_write_then_load(self, tmp_path):
        items = [inst(["a", "t", "b"], 1, "s", id="1"), inst(["t", "c"], 0, None, id="2")]
        write_instances(items, tmp_path / "w.jsonl")
        assert load_instances(tmp_path / "w.jsonl") == items


class TestVocab:
    def test_min_count_one(self):
        assert len(build_vocab([inst(["t", "a", "b"], 0)], Role.A, 1)) == 2

    def test_min_count_two(self):
        assert len(build_vocab([inst(["t", "a", "b"], 0)], Role.A, 2)) == 0

    def test_deterministic_first_occurrence_order(self):
        items = [inst(["c", "t", "a"], 1), inst(["b", "a", "t"], 2)]
        v1 = build_vocab(items, Role.A)
        v2 = build_vocab(items, Role.A)
        assert v1.lemmas == v2.lemmas == ["c", "a", "b"]
        assert all(v1.lookup(v1.index(l)) == l for l in v1.lemmas)

    def test_role_B_uses_window(self):
        v = build_vocab([inst(["x", "a", "t", "b"], 2)], Role.B, window=1)
        assert v.lemmas == ["a", "b"]

    def test_frozen(self):
        with pytest.raises(ConfigError):
            V("a").add("b")

    def test_save_load(self, tmp_path):
        v = V("a", "銀行", "c")
        v.save(tmp_path / "v.txt")
        assert Vocabulary.load(tmp_path / "v.txt") == v


class TestMatrixA:
    def test_counts_excluding_target(self):
        A = build_matrix_A([inst(["t", "a", "b", "a"], 0)], V("a", "b"))
        assert row(A) == {0: 2.0, 1: 1.0}

    def test_only_target(self):
        A = build_matrix_A([inst(["t"], 0)], V("a"))
        assert A.shape == (1, 1) and A.nnz == 0

    def test_out_of_vocab_ignored(self):
        A = build_matrix_A([inst(["t", "a", "z"], 0)], V("a"))
        assert row(A) == {0: 1.0}

    def test_punctuation_filtered(self):
        i = Instance("p", "t", 0, (tok("t"), tok("a"), tok(".", pos="PUNCT")))
        assert row(build_matrix_A([i], V("a", "."))) == {0: 1.0}


class TestMatrixB:
    def test_window_one(self):
        B = build_matrix_B([inst(["a", "t", "b"], 1)], V("a", "b"), window=1)
        assert row(B) == {0: 1.0, 1: 1.0}

    def test_outside_window(self):
        B = build_matrix_B([inst(["x", "a", "t"], 2)], V("x", "a"), window=1)
        assert row(B) == {1: 1.0}

    def test_edge_clipping(self):
        B = build_matrix_B([inst(["t", "a", "b", "c"], 0)], V("a", "b", "c"), window=2)
        assert row(B) == {0: 1.0, 1: 1.0}

    def test_bad_window(self):
        with pytest.raises(ConfigError):
            build_matrix_B([inst(["a", "t"], 1)], V("a"), window=0)


class TestMatrixC:
    def test_worked_example(self):
        vb, va = V("a", "b"), V("a", "b", "t")
        C = build_matrix_C_local([inst(["t", "a", "b"], 0)], vb, va, window=2)
        assert row(C, 0) == {1: 1.0, 2: 1.0}  # a -> {b, t}
        assert row(C, 1) == {0: 1.0, 2: 1.0}  # b -> {a, t}

    def test_no_sentences(self):
        C = build_matrix_C_local([], V("a", "b"), V("a", "b", "c"), window=2)
        assert C.shape == (2, 3) and C.nnz == 0

    def test_shape_is_coupled(self, toy_dataset):
        cm = build_corpus_matrices(load_instances(toy_dataset["train"]))
        assert cm.C.shape == (cm.B.cols, cm.A.cols)


class TestMatrixD:
    def test_single_arc_symmetric(self):
        sent = [tok("a"), tok("b", head=0)]
        D = build_matrix_D_global([sent], V("a", "b"), V("a", "b"))
        assert D.to_dense().tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_out_of_vocab_arc(self):
        sent = [tok("x"), tok("y", head=0)]
        assert build_matrix_D_global([sent], V("a", "b"), V("a", "b")).nnz == 0

    def test_root_has_no_arc(self):
        assert build_matrix_D_global([[tok("a")]], V("a"), V("a")).nnz == 0

    def test_streams_from_file_and_matches_arc_projection(self, toy_dataset):
        cm = build_corpus_matrices(load_instances(toy_dataset["train"]))
        streamed = build_matrix_D_global(toy_dataset["global"], cm.vocab_B, cm.vocab_A)
        projected = matrix_D_from_arcs(arc_counts(iter_sentences(toy_dataset["global"])), cm.vocab_B, cm.vocab_A)
        assert streamed == projected
        assert streamed.shape == (len(cm.vocab_B), len(cm.vocab_A))
        assert streamed.nnz > 0

    def test_document_order_invariant(self, toy_dataset):
        sents = list(iter_sentences(toy_dataset["global"]))
        shuffled = sents[:]
        random.Random(3).shuffle(shuffled)
        vb, va = V("money", "river", "loan", "fish"), V("cash", "water", "money", "river")
        assert build_matrix_D_global(sents, vb, va) == build_matrix_D_global(shuffled, vb, va)


class TestCorpusMatrices:
    def test_coupling_and_integers(self, toy_dataset):
        train = load_instances(toy_dataset["train"])
        cm = build_corpus_matrices(train, global_corpus=toy_dataset["global"])
        assert cm.A.rows == cm.B.rows == len(train)
        for M in (cm.C, cm.D):
            assert M.shape == (cm.B.cols, cm.A.cols)
        for M in (cm.A, cm.B, cm.C, cm.D):
            _, _, v = M.coordinates()
            assert (v == v.round()).all() and (v > 0).all()

    def test_save_load(self, toy_dataset, tmp_path):
        cm = build_corpus_matrices(load_instances(toy_dataset["train"]), global_corpus=toy_dataset["global"])
        cm.save(tmp_path / "m")
        back = CorpusMatrices.load(tmp_path / "m")
        for name in "ABCD":
            assert getattr(back, name) == getattr(cm, name)
        assert back.vocab_A == cm.vocab_A and back.vocab_B == cm.vocab_B
        assert back.senses == cm.senses and back.window == cm.window

    def test_mixed_targets_rejected(self):
        with pytest.raises(ConfigError):
            build_corpus_matrices([inst(["t", "a"], 0), inst(["u", "a"], 0)])
