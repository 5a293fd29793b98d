"""Multi-run evaluation: per-word train/test, several seeded runs, precision reports."""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .corpus import (
    DEFAULT_WINDOW,
    arc_counts,
    build_corpus_matrices,
    group_by_target,
    iter_sentences,
    load_instances,
)
from .errors import ConfigError, LatentWsdError, ShapeError
from .nmf import Objective
from .seeding import derive_seed
from .wsd import TrainConfig, Variant, classify, train

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (0, 1, 2)


def precision(predicted: Sequence[str], gold: Sequence[str]) -> float:
    if len(predicted) != len(gold):
        raise ConfigError(f"{len(predicted)} predictions for {len(gold)} gold labels")
    if not gold:
        raise ConfigError("precision of an empty prediction list")
    return sum(p == g for p, g in zip(predicted, gold)) / len(gold)


@dataclass(frozen=True)
class RunSpec:
    variant: Variant
    train_path: Path
    test_path: Path
    global_path: Optional[Path] = None
    k: int = 5
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    window: int = DEFAULT_WINDOW
    min_count: int = 1
    objective: Objective = Objective.KL
    max_iters: int = 200
    tol: float = 1e-6
    inner_iters: int = 10
    outer_iters: int = 50

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.variant is Variant.GLOBAL and self.global_path is None:
            raise ConfigError("the global variant needs a global corpus")

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            k=self.k,
            seed=seed,
            objective=self.objective,
            max_iters=self.max_iters,
            tol=self.tol,
            inner_iters=self.inner_iters,
            outer_iters=self.outer_iters,
        )

    def echo(self) -> dict:
        # file names only, so reports do not depend on the working directory
        return {
            "variant": self.variant.value,
            "train": Path(self.train_path).name,
            "test": Path(self.test_path).name,
            "global": Path(self.global_path).name if self.global_path else None,
            "k": self.k,
            "seeds": list(self.seeds),
            "window": self.window,
            "min_count": self.min_count,
            "objective": self.objective.value,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "inner_iters": self.inner_iters,
            "outer_iters": self.outer_iters,
        }


@dataclass
class WordResult:
    word: str
    correct: int
    total: int
    fallbacks: int = 0

    @property
    def precision(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class RunResult:
    seed: Optional[int]
    precision: float
    correct: int = 0
    total: int = 0
    fallbacks: int = 0
    per_word: list[WordResult] = field(default_factory=list)


@dataclass
class EvalReport:
    system: str
    runs: list[RunResult] = field(default_factory=list)
    words: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @classmethod
    def from_precisions(cls, system: str, precisions: Sequence[float], seeds=None) -> "EvalReport":
        seeds = list(seeds) if seeds is not None else [None] * len(precisions)
        return cls(system=system, runs=[RunResult(seed=s, precision=float(p)) for s, p in zip(seeds, precisions)])

    @property
    def run_precisions(self) -> list[float]:
        return [r.precision for r in self.runs]

    @property
    def average(self) -> float:
        if not self.runs:
            return 0.0
        return math.fsum(self.run_precisions) / len(self.runs)

    @property
    def best_run(self) -> Optional[int]:
        """0-based index of the highest-precision run (earliest on ties)."""
        if not self.runs:
            return None
        values = self.run_precisions
        return values.index(max(values))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["average"] = self.average
        d["best_run"] = self.best_run
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        runs = [
            RunResult(
                seed=r["seed"],
                precision=r["precision"],
                correct=r["correct"],
                total=r["total"],
                fallbacks=r["fallbacks"],
                per_word=[WordResult(**w) for w in r["per_word"]],
            )
            for r in d["runs"]
        ]
        return cls(system=d["system"], runs=runs, words=list(d["words"]), config=dict(d["config"]))


def _fmt(p: float) -> str:
    return f"{p:.6f}"


def render_tsv(report: EvalReport) -> str:
    """Table with one row per target word plus a pooled ``ALL`` row.

    The highest run value of each row carries a trailing ``*``.
    """
    n = len(report.runs)
    header = ["system", "word"] + [f"run_{i + 1}" for i in range(n)] + ["average", "best_run"]
    out = io.StringIO()
    out.write("\t".join(header) + "\n")
    if not report.runs:
        return out.getvalue()

    def row(word, values):
        best = values.index(max(values))
        cells = [_fmt(v) + ("*" if i == best else "") for i, v in enumerate(values)]
        avg = math.fsum(values) / len(values)
        out.write("\t".join([report.system, word] + cells + [_fmt(avg), str(best + 1)]) + "\n")

    for w, word in enumerate(report.words):
        row(word, [run.per_word[w].precision for run in report.runs])
    row("ALL", report.run_precisions)
    return out.getvalue()


def render_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def report_render(report: EvalReport, fmt: str = "tsv") -> str:
    fmt = fmt.lower()
    if fmt == "tsv":
        return render_tsv(report)
    if fmt == "json":
        return render_json(report)
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_json_report(text: str) -> EvalReport:
    return EvalReport.from_dict(json.loads(text))


def run_experiment(spec: RunSpec) -> EvalReport:
    """Train and test every target word once per seed.

    Per-word factorizations are seeded with ``derive_seed(run_seed, word)`` so
    results do not depend on the order of words in the input. Precision per
    run is pooled over all test instances.
    """
    train_groups = group_by_target(load_instances(spec.train_path))
    test_groups = group_by_target(load_instances(spec.test_path))

    missing = [w for w in test_groups if w not in train_groups]
    if missing:
        raise ConfigError(f"test target words without training data: {missing}")
    for word, items in test_groups.items():
        unlabeled = [inst.id for inst in items if inst.sense_id is None]
        if unlabeled:
            raise ConfigError(f"target word {word!r}: test instances without gold sense: {unlabeled[:5]}")

    arcs = None
    if spec.variant is Variant.GLOBAL:
        arcs = arc_counts(iter_sentences(spec.global_path))

    words = [w for w in train_groups if w in test_groups]
    matrices = {}
    for word in words:
        try:
            matrices[word] = build_corpus_matrices(
                train_groups[word], window=spec.window, min_count=spec.min_count, global_arcs=arcs
            )
        except (ConfigError, ShapeError) as exc:
            raise ConfigError(f"target word {word!r}: {exc}") from exc

    runs = []
    for seed in spec.seeds:
        per_word = []
        for word in words:
            try:
                model = train(matrices[word], spec.variant, spec.train_config(derive_seed(seed, word)))
            except LatentWsdError as exc:
                raise ConfigError(f"target word {word!r}: {exc}") from exc
            correct = fallbacks = 0
            for inst in test_groups[word]:
                pred = classify(model, inst)
                correct += pred.sense_id == inst.sense_id
                fallbacks += pred.fallback
            per_word.append(WordResult(word, correct, len(test_groups[word]), fallbacks))
        total = sum(w.total for w in per_word)
        correct = sum(w.correct for w in per_word)
        runs.append(
            RunResult(
                seed=seed,
                precision=correct / total if total else 0.0,
                correct=correct,
                total=total,
                fallbacks=sum(w.fallbacks for w in per_word),
                per_word=per_word,
            )
        )
        log.info("seed %d: precision %.4f (%d/%d)", seed, runs[-1].precision, correct, total)

    if not words:
        runs = []
    return EvalReport(system=spec.variant.value, runs=runs, words=words, config=spec.echo())
