"""Sense models: fold per-sense centroids into the latent space, classify by cosine.

For every variant the sense vectors are ``b_i = c_i H^T`` where ``c_i`` is the
mean A-row of sense ``i``. Test vectors are folded with H (baseline 1, over
the sentence vocabulary) or with G (latent variants, over the window
vocabulary).
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    DEFAULT_STOP_POS,
    CorpusMatrices,
    Instance,
    Vocabulary,
    feature_vector,
    sentence_lemmas,
    window_lemmas,
)
from .errors import ConfigError, ParseError, ShapeError
from .interleaved import InterleavedConfig, interleaved_factorize
from .matrix import EPSILON, check_dense, dump_matrix, load_dense
from .nmf import NmfConfig, Objective, factorize

ZERO_NORM = 1e-12


class Variant(str, enum.Enum):
    BASELINE1 = "baseline1"
    LOCAL = "local"
    GLOBAL = "global"

    @property
    def is_latent(self) -> bool:
        return self is not Variant.BASELINE1


@dataclass(frozen=True)
class TrainConfig:
    """Factorization settings for :func:`train`.

    ``max_iters`` drives the single NMF of baseline 1; ``inner_iters`` and
    ``outer_iters`` drive the interleaved run of the latent variants.
    """

    k: int
    seed: int = 0
    objective: Objective = Objective.KL
    max_iters: int = 200
    tol: float = 1e-6
    inner_iters: int = 10
    outer_iters: int = 50
    epsilon: float = EPSILON

    def nmf_config(self) -> NmfConfig:
        return NmfConfig(
            k=self.k,
            max_iters=self.max_iters,
            tol=self.tol,
            seed=self.seed,
            objective=self.objective,
            epsilon=self.epsilon,
        )

    def interleaved_config(self) -> InterleavedConfig:
        inner = NmfConfig(
            k=self.k,
            max_iters=self.inner_iters,
            tol=self.tol,
            seed=self.seed,
            objective=self.objective,
            epsilon=self.epsilon,
        )
        return InterleavedConfig(k=self.k, outer_iters=self.outer_iters, inner=inner)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "objective": Objective(self.objective).value,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "inner_iters": self.inner_iters,
            "outer_iters": self.outer_iters,
            "epsilon": self.epsilon,
        }


@dataclass
class SenseModel:
    variant: Variant
    sense_ids: list[str]
    sense_vectors: np.ndarray  # one latent row per sense
    fold_matrix_train: np.ndarray  # H, k x |vocab_A|
    fold_matrix_test: np.ndarray  # H (baseline 1) or G, k x |vocab|
    vocab_A: Vocabulary
    vocab_B: Vocabulary
    window: int
    most_frequent_sense: str
    target_lemma: str = ""
    stop_pos: frozenset = DEFAULT_STOP_POS

    @property
    def k(self) -> int:
        return self.fold_matrix_train.shape[0]

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        dump_matrix(self.fold_matrix_train, d / "H.txt")
        if self.variant.is_latent:
            dump_matrix(self.fold_matrix_test, d / "G.txt")
        dump_matrix(self.sense_vectors, d / "sense_vectors.txt")
        self.vocab_A.save(d / "vocab_A.txt")
        self.vocab_B.save(d / "vocab_B.txt")
        manifest = {
            "variant": self.variant.value,
            "k": self.k,
            "window": self.window,
            "sense_ids": self.sense_ids,
            "most_frequent_sense": self.most_frequent_sense,
            "target_lemma": self.target_lemma,
            "stop_pos": sorted(self.stop_pos),
        }
        (d / "manifest.json").write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, directory) -> "SenseModel":
        d = Path(directory)
        try:
            manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid manifest: {exc.msg}", path=d / "manifest.json") from None
        variant = Variant(manifest["variant"])
        H = load_dense(d / "H.txt")
        test = load_dense(d / "G.txt") if variant.is_latent else H
        vectors = load_dense(d / "sense_vectors.txt")
        if vectors.shape != (len(manifest["sense_ids"]), manifest["k"]):
            raise ParseError("sense_vectors shape disagrees with manifest", path=d)
        return cls(
            variant=variant,
            sense_ids=list(manifest["sense_ids"]),
            sense_vectors=vectors,
            fold_matrix_train=H,
            fold_matrix_test=test,
            vocab_A=Vocabulary.load(d / "vocab_A.txt"),
            vocab_B=Vocabulary.load(d / "vocab_B.txt"),
            window=manifest["window"],
            most_frequent_sense=manifest["most_frequent_sense"],
            target_lemma=manifest.get("target_lemma", ""),
            stop_pos=frozenset(manifest.get("stop_pos", DEFAULT_STOP_POS)),
        )


@dataclass(frozen=True)
class Prediction:
    sense_id: str
    scores: list[float]
    fallback: bool = False


def sense_centroids(rows: Sequence[tuple[np.ndarray, str]]) -> list[tuple[str, np.ndarray]]:
    """Mean feature vector per sense, senses in first-occurrence order."""
    sums: dict[str, np.ndarray] = {}
    counts: Counter[str] = Counter()
    for vec, sense in rows:
        vec = np.asarray(vec, dtype=np.float64)
        if sense in sums:
            if sums[sense].shape != vec.shape:
                raise ShapeError("feature vectors differ in length")
            sums[sense] = sums[sense] + vec
        else:
            sums[sense] = vec.copy()
        counts[sense] += 1
    return [(sense, sums[sense] / counts[sense]) for sense in sums]


def fold_in(v, M) -> np.ndarray:
    """Project a feature vector into the latent space: ``v @ M.T``."""
    v = np.asarray(v, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if v.ndim != 1 or M.ndim != 2 or v.shape[0] != M.shape[1]:
        raise ShapeError(f"cannot fold vector of length {v.shape} with matrix {M.shape}")
    return M @ v


def cosine(u, v) -> float:
    """Cosine similarity; 0 when either vector has (near-)zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeError(f"cosine of vectors with shapes {u.shape} and {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < ZERO_NORM or nv < ZERO_NORM:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def most_frequent(labels: Sequence[str]) -> str:
    counts = Counter(labels)
    best = max(counts.values())
    return next(label for label in labels if counts[label] == best)


def _required(matrices: CorpusMatrices, variant: Variant):
    if variant is Variant.LOCAL:
        third = matrices.C
    elif variant is Variant.GLOBAL:
        third = matrices.D
    else:
        return None
    if third is None:
        name = "C" if variant is Variant.LOCAL else "D"
        raise ConfigError(f"variant {variant.value!r} needs matrix {name}, which was not built")
    return third


def train(matrices: CorpusMatrices, variant: Variant | str, config: TrainConfig) -> SenseModel:
    """Factorize the word's matrices and fold every sense centroid with H."""
    variant = Variant(variant)
    labels = matrices.senses
    if not labels or any(label is None for label in labels):
        raise ConfigError(f"{matrices.target_lemma!r}: every training row needs a sense label")
    if len(labels) != matrices.A.rows:
        raise ShapeError("number of sense labels does not match rows of A")

    third = _required(matrices, variant)
    if variant is Variant.BASELINE1:
        result = factorize(matrices.A, config.nmf_config())
        H = result.H
        test_map = H
    else:
        cf = interleaved_factorize(matrices.A, matrices.B, third, config.interleaved_config())
        H = cf.H
        test_map = cf.G

    A = matrices.A.to_dense()
    centroids = sense_centroids(list(zip(A, labels)))
    vectors = np.vstack([fold_in(c, H) for _, c in centroids])
    return SenseModel(
        variant=variant,
        sense_ids=[sense for sense, _ in centroids],
        sense_vectors=check_dense(vectors, "sense_vectors"),
        fold_matrix_train=H,
        fold_matrix_test=test_map,
        vocab_A=matrices.vocab_A,
        vocab_B=matrices.vocab_B,
        window=matrices.window,
        most_frequent_sense=most_frequent(labels),
        target_lemma=matrices.target_lemma,
        stop_pos=matrices.stop_pos,
    )


def test_vector(model: SenseModel, instance: Instance) -> np.ndarray:
    if model.variant is Variant.BASELINE1:
        return feature_vector(sentence_lemmas(instance, model.stop_pos), model.vocab_A)
    return feature_vector(window_lemmas(instance, model.window, model.stop_pos), model.vocab_B)


test_vector.__test__ = False  # keep pytest from collecting this


def classify_vector(model: SenseModel, f) -> Prediction:
    """Score a raw test feature vector against every sense."""
    f = np.asarray(f, dtype=np.float64)
    d = fold_in(f, model.fold_matrix_test)
    scores = [cosine(d, b) for b in model.sense_vectors]
    if not np.any(f) or np.linalg.norm(d) < ZERO_NORM:
        return Prediction(model.most_frequent_sense, scores, fallback=True)
    # argmax returns the first maximum, i.e. the earliest sense on ties
    return Prediction(model.sense_ids[int(np.argmax(scores))], scores)


def classify(model: SenseModel, instance: Instance) -> Prediction:
    return classify_vector(model, test_vector(model, instance))
