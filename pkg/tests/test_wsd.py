import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentwsd.corpus import Instance, Token, build_corpus_matrices, load_instances
from latentwsd.errors import ConfigError, ShapeError
from latentwsd.wsd import (
    SenseModel,
    TrainConfig,
    Variant,
    classify,
    classify_vector,
    cosine,
    fold_in,
    most_frequent,
    sense_centroids,
    test_vector,
    train,
)


def sent(lemmas, target, sense, id):
    toks = tuple(Token(l, l, "NOUN", None if i == 0 else 0, None) for i, l in enumerate(lemmas))
    return Instance(id=id, target_lemma=lemmas[target], target_index=target, tokens=toks, sense_id=sense)


class TestCentroids:
    def test_mean(self):
        [(sense, c)] = sense_centroids([(np.array([1.0, 0.0]), "s"), (np.array([0.0, 1.0]), "s")])
        assert sense == "s" and c.tolist() == [0.5, 0.5]

    def test_single_row(self):
        [(_, c)] = sense_centroids([(np.array([3.0, 1.0]), "s")])
        assert c.tolist() == [3.0, 1.0]

    def test_two_senses_first_seen_order(self):
        out = sense_centroids([(np.array([0.0, 2.0]), "y"), (np.array([1.0, 0.0]), "x")])
        assert [s for s, _ in out] == ["y", "x"]
        assert out[0][1].tolist() == [0.0, 2.0] and out[1][1].tolist() == [1.0, 0.0]


class TestFoldIn:
    def test_zero(self):
        M = np.random.default_rng(0).random((3, 4))
        assert not fold_in(np.zeros(4), M).any()

    def test_identity(self):
        v = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(fold_in(v, np.eye(3)), v)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(-10, 10), st.floats(-10, 10))
    def test_linearity(self, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        M, u, w = rng.random((3, 6)), rng.random(6), rng.random(6)
        np.testing.assert_allclose(
            fold_in(alpha * u + beta * w, M), alpha * fold_in(u, M) + beta * fold_in(w, M), atol=1e-12
        )

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            fold_in(np.ones(3), np.ones((2, 4)))


class TestCosine:
    def test_self(self):
        assert cosine([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_zero_vector(self):
        assert cosine([0.0, 0.0], [1.0, 2.0]) == 0.0

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            cosine([1.0], [1.0, 2.0])


def test_most_frequent_tie_goes_to_first_seen():
    assert most_frequent(["b", "a", "a", "b", "c"]) == "b"


@pytest.fixture(scope="module")
def tiny():
    train_items = [
        sent(["bank", "money", "loan", "cash"], 0, "fin", "1"),
        sent(["bank", "river", "water", "fish"], 0, "geo", "2"),
    ]
    return train_items, build_corpus_matrices(train_items)


class TestTrain:
    @pytest.mark.parametrize("variant", [Variant.BASELINE1, Variant.LOCAL])
    def test_shape_contract(self, tiny, variant):
        _, cm = tiny
        model = train(cm, variant, TrainConfig(k=2))
        assert model.sense_ids == ["fin", "geo"]
        assert model.sense_vectors.shape == (2, 2)
        assert model.sense_vectors.min() >= 0

    def test_single_sense(self):
        items = [sent(["bank", "a", "b"], 0, "s", "1"), sent(["bank", "b", "c"], 0, "s", "2")]
        cm = build_corpus_matrices(items)
        model = train(cm, Variant.LOCAL, TrainConfig(k=1))
        assert model.sense_ids == ["s"]
        mean_row = cm.A.to_dense().mean(axis=0)
        np.testing.assert_allclose(model.sense_vectors[0], fold_in(mean_row, model.fold_matrix_train), atol=1e-12)

    def test_two_clusters_separate(self, toy_dataset):
        cm = build_corpus_matrices(load_instances(toy_dataset["train"]), global_corpus=toy_dataset["global"])
        model = train(cm, Variant.GLOBAL, TrainConfig(k=2, seed=3))
        b1, b2 = model.sense_vectors
        assert cosine(b1, b2) < 0.5

    def test_missing_D(self, tiny):
        with pytest.raises(ConfigError):
            train(tiny[1], Variant.GLOBAL, TrainConfig(k=2))

    def test_unlabeled_rows(self):
        cm = build_corpus_matrices([sent(["bank", "a", "b"], 0, None, "1"), sent(["bank", "c", "d"], 0, "s", "2")])
        with pytest.raises(ConfigError):
            train(cm, Variant.BASELINE1, TrainConfig(k=1))

    def test_test_fold_map_per_variant(self, tiny):
        _, cm = tiny
        b1 = train(cm, Variant.BASELINE1, TrainConfig(k=2))
        assert b1.fold_matrix_test is b1.fold_matrix_train
        loc = train(cm, Variant.LOCAL, TrainConfig(k=2))
        assert loc.fold_matrix_test.shape == (2, len(cm.vocab_B))


class TestClassify:
    @pytest.mark.parametrize("variant", [Variant.BASELINE1, Variant.LOCAL])
    def test_recovers_training_instance(self, tiny, variant):
        items, cm = tiny
        model = train(cm, variant, TrainConfig(k=2, seed=1))
        for item in items:
            assert classify(model, item).sense_id == item.sense_id

    def test_fallback_without_known_words(self, tiny):
        _, cm = tiny
        model = train(cm, Variant.LOCAL, TrainConfig(k=2))
        pred = classify(model, sent(["bank", "zebra", "piano"], 0, None, "x"))
        assert pred.fallback and pred.sense_id == model.most_frequent_sense == "fin"

    def test_scores(self, tiny):
        items, cm = tiny
        model = train(cm, Variant.LOCAL, TrainConfig(k=2))
        pred = classify(model, items[0])
        assert len(pred.scores) == 2
        assert all(-1 <= s <= 1 for s in pred.scores)
        assert not pred.fallback

    def test_deterministic(self, tiny):
        items, cm = tiny
        model = train(cm, Variant.LOCAL, TrainConfig(k=2))
        assert classify(model, items[1]) == classify(model, items[1])

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 1e3))
    def test_scale_invariant(self, tiny_model_and_vectors, alpha):
        model, vectors = tiny_model_and_vectors
        for f in vectors:
            assert classify_vector(model, f).sense_id == classify_vector(model, alpha * f).sense_id

    def test_save_load_round_trip(self, toy_dataset, tmp_path):
        cm = build_corpus_matrices(load_instances(toy_dataset["train"]), global_corpus=toy_dataset["global"])
        model = train(cm, Variant.GLOBAL, TrainConfig(k=2))
        model.save(tmp_path / "model")
        back = SenseModel.load(tmp_path / "model")
        assert back.variant is Variant.GLOBAL and back.sense_ids == model.sense_ids
        np.testing.assert_array_equal(back.sense_vectors, model.sense_vectors)
        np.testing.assert_array_equal(back.fold_matrix_test, model.fold_matrix_test)
        for item in load_instances(toy_dataset["test"]):
            assert classify(back, item) == classify(model, item)


@pytest.fixture(scope="module")
def tiny_model_and_vectors(toy_dataset):
    cm = build_corpus_matrices(load_instances(toy_dataset["train"]), global_corpus=toy_dataset["global"])
    model = train(cm, Variant.GLOBAL, TrainConfig(k=2))
    vectors = [test_vector(model, item) for item in load_instances(toy_dataset["test"])[:10]]
    return model, vectors
