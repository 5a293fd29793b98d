"""Instance/corpus loading and the co-occurrence matrices A, B, C and D.

Rows of A and B are training instances. A counts every non-target lemma in
the sentence, B only lemmas within a +/-window of the target. C (local) and
D (global) are ``|vocab_B| x |vocab_A|``: C counts sentence co-occurrence of
windowed context words in the training set, D counts dependency arcs in an
external parsed corpus.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import ConfigError, ParseError
from .matrix import SparseMatrix, dump_matrix, from_triplets, load_matrix

DEFAULT_WINDOW = 5

# UD, Penn Treebank and UniDic/IPAdic punctuation-class tags
DEFAULT_STOP_POS = frozenset(
    {"PUNCT", "SYM", "補助記号", "記号", ".", ",", ":", "``", "''", "-LRB-", "-RRB-", "#", "$"}
)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str
    head: Optional[int] = None
    deprel: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "lemma": self.lemma,
            "pos": self.pos,
            "head": self.head,
            "deprel": self.deprel,
        }


@dataclass(frozen=True)
class Instance:
    id: str
    target_lemma: str
    target_index: int
    tokens: tuple[Token, ...]
    sense_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "target_lemma": self.target_lemma,
            "target_index": self.target_index,
            "sense_id": self.sense_id,
            "tokens": [t.to_dict() for t in self.tokens],
        }


# --- parsing ---------------------------------------------------------------


def _expect(obj, key, types, lineno, path, optional=False):
    if key not in obj:
        if optional:
            return None
        raise ParseError(f"missing field {key!r}", line=lineno, path=path)
    value = obj[key]
    if value is None and optional:
        return None
    # bool is an int subclass; reject it for index fields
    if not isinstance(value, types) or (int in types and isinstance(value, bool)):
        raise ParseError(f"field {key!r} has wrong type {type(value).__name__}", line=lineno, path=path)
    return value


def _parse_tokens(raw, lineno, path) -> tuple[Token, ...]:
    if not isinstance(raw, list) or not raw:
        raise ParseError("'tokens' must be a non-empty list", line=lineno, path=path)
    tokens = []
    for pos, t in enumerate(raw):
        if not isinstance(t, dict):
            raise ParseError(f"token {pos} is not an object", line=lineno, path=path)
        head = _expect(t, "head", (int,), lineno, path, optional=True)
        if head is not None and not (0 <= head < len(raw)) or head == pos:
            raise ParseError(f"token {pos} has invalid head {head}", line=lineno, path=path)
        tokens.append(
            Token(
                surface=_expect(t, "surface", (str,), lineno, path),
                lemma=_expect(t, "lemma", (str,), lineno, path),
                pos=_expect(t, "pos", (str,), lineno, path),
                head=head,
                deprel=_expect(t, "deprel", (str,), lineno, path, optional=True),
            )
        )
    return tuple(tokens)


def _json_lines(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, path=path) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line=lineno, path=path)
            yield lineno, obj


def parse_instance(obj: dict, lineno=None, path=None) -> Instance:
    tokens = _parse_tokens(obj.get("tokens"), lineno, path)
    target_index = _expect(obj, "target_index", (int,), lineno, path)
    if not 0 <= target_index < len(tokens):
        raise ParseError(f"target_index {target_index} out of range", line=lineno, path=path)
    return Instance(
        id=_expect(obj, "id", (str,), lineno, path),
        target_lemma=_expect(obj, "target_lemma", (str,), lineno, path),
        target_index=target_index,
        tokens=tokens,
        sense_id=_expect(obj, "sense_id", (str,), lineno, path, optional=True),
    )


def load_instances(path) -> list[Instance]:
    """Parse an instance JSONL file, preserving line order."""
    return [parse_instance(obj, lineno, path) for lineno, obj in _json_lines(path)]


def iter_sentences(path) -> Iterator[tuple[Token, ...]]:
    """Stream the token arrays of a global-corpus JSONL file."""
    for lineno, obj in _json_lines(path):
        yield _parse_tokens(obj.get("tokens"), lineno, path)


def write_instances(instances: Iterable[Instance], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), ensure_ascii=False) + "\n")


def group_by_target(instances: Iterable[Instance]) -> dict[str, list[Instance]]:
    groups: dict[str, list[Instance]] = {}
    for inst in instances:
        groups.setdefault(inst.target_lemma, []).append(inst)
    return groups


# --- vocabularies ----------------------------------------------------------


class Role(str, enum.Enum):
    A = "A"  # sentence-wide, non-target lemmas
    B = "B"  # lemmas inside the context window


class Vocabulary:
    """Bidirectional lemma <-> index map with dense indices ``0..size-1``."""

    def __init__(self, lemmas: Iterable[str] = (), frozen: bool = False):
        self._lemmas: list[str] = []
        self._index: dict[str, int] = {}
        for lemma in lemmas:
            self.add(lemma)
        self.frozen = frozen

    def add(self, lemma: str) -> int:
        if lemma in self._index:
            return self._index[lemma]
        if getattr(self, "frozen", False):
            raise ConfigError(f"vocabulary is frozen; cannot add {lemma!r}")
        self._index[lemma] = len(self._lemmas)
        self._lemmas.append(lemma)
        return self._index[lemma]

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        return self

    def index(self, lemma: str) -> Optional[int]:
        return self._index.get(lemma)

    def lookup(self, index: int) -> str:
        return self._lemmas[index]

    @property
    def lemmas(self) -> list[str]:
        return list(self._lemmas)

    def __contains__(self, lemma) -> bool:
        return lemma in self._index

    def __len__(self) -> int:
        return len(self._lemmas)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self._lemmas == other._lemmas

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)}, frozen={self.frozen})"

    def save(self, path) -> None:
        for lemma in self._lemmas:
            if "\n" in lemma or "\r" in lemma:
                raise ConfigError(f"lemma {lemma!r} contains a line break")
        text = "".join(lemma + "\n" for lemma in self._lemmas)
        Path(path).write_text(text, encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        lemmas = text.split("\n")
        if lemmas and lemmas[-1] == "":
            lemmas.pop()
        vocab = cls(lemmas)
        if len(vocab) != len(lemmas):
            raise ParseError("duplicate lemma in vocabulary file", path=path)
        return vocab.freeze()


def _kept(token: Token, stop_pos) -> bool:
    return token.pos not in stop_pos


def window_positions(inst: Instance, window: int) -> range:
    lo = max(0, inst.target_index - window)
    hi = min(len(inst.tokens), inst.target_index + window + 1)
    return range(lo, hi)


def sentence_lemmas(inst: Instance, stop_pos=DEFAULT_STOP_POS) -> list[str]:
    """Non-target lemmas of the sentence, in token order."""
    return [
        t.lemma
        for i, t in enumerate(inst.tokens)
        if i != inst.target_index and _kept(t, stop_pos)
    ]


def window_lemmas(inst: Instance, window: int, stop_pos=DEFAULT_STOP_POS) -> list[str]:
    """Lemmas within +/-window of the target (target excluded), clipped at sentence edges."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    toks = inst.tokens
    return [
        toks[i].lemma
        for i in window_positions(inst, window)
        if i != inst.target_index and _kept(toks[i], stop_pos)
    ]


def build_vocab(
    instances: Iterable[Instance],
    role: Role | str,
    min_count: int = 1,
    window: int = DEFAULT_WINDOW,
    stop_pos=DEFAULT_STOP_POS,
) -> Vocabulary:
    """Frozen vocabulary of lemmas seen at least ``min_count`` times, in first-occurrence order."""
    role = Role(role)
    counts: Counter[str] = Counter()
    order: list[str] = []
    for inst in instances:
        lemmas = sentence_lemmas(inst, stop_pos) if role is Role.A else window_lemmas(inst, window, stop_pos)
        for lemma in lemmas:
            if lemma not in counts:
                order.append(lemma)
            counts[lemma] += 1
    return Vocabulary(l for l in order if counts[l] >= min_count).freeze()


# --- matrices --------------------------------------------------------------


def feature_vector(lemmas: Iterable[str], vocab: Vocabulary) -> np.ndarray:
    """Count vector over ``vocab``; lemmas outside it are dropped."""
    vec = np.zeros(len(vocab))
    for lemma in lemmas:
        j = vocab.index(lemma)
        if j is not None:
            vec[j] += 1.0
    return vec


def _rows_matrix(rows: list[list[str]], vocab: Vocabulary) -> SparseMatrix:
    counts: Counter[tuple[int, int]] = Counter()
    for i, lemmas in enumerate(rows):
        for lemma in lemmas:
            j = vocab.index(lemma)
            if j is not None:
                counts[(i, j)] += 1
    return from_triplets(len(rows), len(vocab), ((i, j, v) for (i, j), v in counts.items()))


def build_matrix_A(instances, vocab_A: Vocabulary, stop_pos=DEFAULT_STOP_POS) -> SparseMatrix:
    return _rows_matrix([sentence_lemmas(inst, stop_pos) for inst in instances], vocab_A)


def build_matrix_B(
    instances, vocab_B: Vocabulary, window: int = DEFAULT_WINDOW, stop_pos=DEFAULT_STOP_POS
) -> SparseMatrix:
    return _rows_matrix([window_lemmas(inst, window, stop_pos) for inst in instances], vocab_B)


def build_matrix_C_local(
    instances,
    vocab_B: Vocabulary,
    vocab_A: Vocabulary,
    window: int = DEFAULT_WINDOW,
    stop_pos=DEFAULT_STOP_POS,
) -> SparseMatrix:
    """Context-word x word co-occurrence within training sentences.

    For every context token ``c`` in the target window (lemma in vocab_B) and
    every other token ``w`` of the same sentence (lemma in vocab_A), the entry
    ``(c, w)`` is incremented. "Other" is by token position, and the target
    token itself is eligible as ``w``.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    counts: Counter[tuple[int, int]] = Counter()
    for inst in instances:
        toks = inst.tokens
        a_idx = [
            (pos, vocab_A.index(t.lemma))
            for pos, t in enumerate(toks)
            if _kept(t, stop_pos) and t.lemma in vocab_A
        ]
        for c in window_positions(inst, window):
            if c == inst.target_index or not _kept(toks[c], stop_pos):
                continue
            row = vocab_B.index(toks[c].lemma)
            if row is None:
                continue
            for w, col in a_idx:
                if w != c:
                    counts[(row, col)] += 1
    return from_triplets(len(vocab_B), len(vocab_A), ((i, j, v) for (i, j), v in counts.items()))


def arc_counts(sentences: Iterable[Iterable[Token]], stop_pos=DEFAULT_STOP_POS) -> Counter:
    """Count ``(head_lemma, dependent_lemma)`` pairs over all dependency arcs."""
    counts: Counter[tuple[str, str]] = Counter()
    for tokens in sentences:
        tokens = tuple(tokens)
        for dep in tokens:
            if dep.head is None:
                continue
            head = tokens[dep.head]
            if _kept(dep, stop_pos) and _kept(head, stop_pos):
                counts[(head.lemma, dep.lemma)] += 1
    return counts


def matrix_D_from_arcs(arcs: Counter, vocab_B: Vocabulary, vocab_A: Vocabulary) -> SparseMatrix:
    """Direction-agnostic projection of arc counts onto ``vocab_B x vocab_A``."""
    counts: Counter[tuple[int, int]] = Counter()
    for (h, d), n in sorted(arcs.items()):
        hb, da = vocab_B.index(h), vocab_A.index(d)
        if hb is not None and da is not None:
            counts[(hb, da)] += n
        db, ha = vocab_B.index(d), vocab_A.index(h)
        if db is not None and ha is not None:
            counts[(db, ha)] += n
    return from_triplets(len(vocab_B), len(vocab_A), ((i, j, v) for (i, j), v in counts.items()))


def build_matrix_D_global(
    global_corpus, vocab_B: Vocabulary, vocab_A: Vocabulary, stop_pos=DEFAULT_STOP_POS
) -> SparseMatrix:
    """Single streaming pass over a parsed corpus, counting arcs between vocabulary words.

    ``global_corpus`` is a path to a sentence JSONL file or an iterable of
    token sequences. Only index pairs that land in D are kept in memory.
    """
    sentences = iter_sentences(global_corpus) if isinstance(global_corpus, (str, Path)) else global_corpus
    counts: Counter[tuple[int, int]] = Counter()
    for tokens in sentences:
        tokens = tuple(tokens)
        for dep in tokens:
            if dep.head is None:
                continue
            head = tokens[dep.head]
            if not (_kept(dep, stop_pos) and _kept(head, stop_pos)):
                continue
            hb, da = vocab_B.index(head.lemma), vocab_A.index(dep.lemma)
            if hb is not None and da is not None:
                counts[(hb, da)] += 1
            db, ha = vocab_B.index(dep.lemma), vocab_A.index(head.lemma)
            if db is not None and ha is not None:
                counts[(db, ha)] += 1
    return from_triplets(len(vocab_B), len(vocab_A), ((i, j, v) for (i, j), v in counts.items()))


@dataclass
class CorpusMatrices:
    """Matrices for one target word plus everything needed to rebuild test features."""

    target_lemma: str
    A: SparseMatrix
    B: SparseMatrix
    vocab_A: Vocabulary
    vocab_B: Vocabulary
    senses: list[Optional[str]]
    window: int = DEFAULT_WINDOW
    C: Optional[SparseMatrix] = None
    D: Optional[SparseMatrix] = None
    instance_ids: list[str] = field(default_factory=list)
    stop_pos: frozenset = DEFAULT_STOP_POS

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name in ("A", "B", "C", "D"):
            M = getattr(self, name)
            if M is not None:
                dump_matrix(M, d / f"{name}.txt")
        self.vocab_A.save(d / "vocab_A.txt")
        self.vocab_B.save(d / "vocab_B.txt")
        manifest = {
            "target_lemma": self.target_lemma,
            "window": self.window,
            "senses": self.senses,
            "instance_ids": self.instance_ids,
            "stop_pos": sorted(self.stop_pos),
            "has_C": self.C is not None,
            "has_D": self.D is not None,
        }
        (d / "matrices.json").write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, directory) -> "CorpusMatrices":
        d = Path(directory)
        try:
            manifest = json.loads((d / "matrices.json").read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid manifest: {exc.msg}", path=d / "matrices.json") from None
        return cls(
            target_lemma=manifest["target_lemma"],
            A=load_matrix(d / "A.txt"),
            B=load_matrix(d / "B.txt"),
            C=load_matrix(d / "C.txt") if manifest.get("has_C") else None,
            D=load_matrix(d / "D.txt") if manifest.get("has_D") else None,
            vocab_A=Vocabulary.load(d / "vocab_A.txt"),
            vocab_B=Vocabulary.load(d / "vocab_B.txt"),
            senses=manifest["senses"],
            window=manifest["window"],
            instance_ids=manifest.get("instance_ids", []),
            stop_pos=frozenset(manifest.get("stop_pos", DEFAULT_STOP_POS)),
        )


def build_corpus_matrices(
    train_instances: list[Instance],
    window: int = DEFAULT_WINDOW,
    min_count: int = 1,
    stop_pos=DEFAULT_STOP_POS,
    global_arcs: Optional[Counter] = None,
    global_corpus=None,
) -> CorpusMatrices:
    """Build A, B, C and (when a global corpus or its arc counts is given) D for one target word."""
    if not train_instances:
        raise ConfigError("no training instances")
    targets = {inst.target_lemma for inst in train_instances}
    if len(targets) != 1:
        raise ConfigError(f"expected one target lemma, got {sorted(targets)}")
    stop_pos = frozenset(stop_pos)
    vocab_A = build_vocab(train_instances, Role.A, min_count, window, stop_pos)
    vocab_B = build_vocab(train_instances, Role.B, min_count, window, stop_pos)
    D = None
    if global_arcs is not None:
        D = matrix_D_from_arcs(global_arcs, vocab_B, vocab_A)
    elif global_corpus is not None:
        D = build_matrix_D_global(global_corpus, vocab_B, vocab_A, stop_pos)
    return CorpusMatrices(
        target_lemma=train_instances[0].target_lemma,
        A=build_matrix_A(train_instances, vocab_A, stop_pos),
        B=build_matrix_B(train_instances, vocab_B, window, stop_pos),
        C=build_matrix_C_local(train_instances, vocab_B, vocab_A, window, stop_pos),
        D=D,
        vocab_A=vocab_A,
        vocab_B=vocab_B,
        senses=[inst.sense_id for inst in train_instances],
        window=window,
        instance_ids=[inst.id for inst in train_instances],
        stop_pos=stop_pos,
    )
