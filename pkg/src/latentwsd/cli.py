"""Command-line interface: build-matrices, train, classify, evaluate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corpus import (
    DEFAULT_WINDOW,
    CorpusMatrices,
    arc_counts,
    build_corpus_matrices,
    group_by_target,
    iter_sentences,
    load_instances,
)
from .errors import ConfigError, LatentWsdError
from .evaluation import RunSpec, report_render, run_experiment
from .nmf import Objective
from .seeding import derive_seed
from .wsd import SenseModel, TrainConfig, Variant, classify, train

INDEX_FILE = "index.json"

log = logging.getLogger("latentwsd")


def _write_index(directory: Path, words: list[str]) -> dict[str, str]:
    mapping = {word: f"w{i:04d}" for i, word in enumerate(words)}
    (directory / INDEX_FILE).write_text(
        json.dumps({"words": [[w, mapping[w]] for w in words]}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    return mapping


def _read_index(directory: Path, marker: str) -> list[tuple[str | None, Path]]:
    """Subdirectories of a multi-word output, or the directory itself if it holds one word."""
    if (directory / marker).exists():
        return [(None, directory)]
    index = directory / INDEX_FILE
    if not index.exists():
        raise ConfigError(f"{directory} has neither {marker} nor {INDEX_FILE}")
    entries = json.loads(index.read_text(encoding="utf-8"))["words"]
    return [(word, directory / sub) for word, sub in entries]


def cmd_build_matrices(args) -> None:
    groups = group_by_target(load_instances(args.train))
    arcs = arc_counts(iter_sentences(args.global_corpus)) if args.global_corpus else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mapping = _write_index(out, list(groups))
    for word, items in groups.items():
        cm = build_corpus_matrices(items, window=args.window, min_count=args.min_count, global_arcs=arcs)
        cm.save(out / mapping[word])
        log.info("%s: A %s, B %s, vocab_A %d, vocab_B %d", word, cm.A.shape, cm.B.shape, len(cm.vocab_A), len(cm.vocab_B))


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        k=args.k,
        seed=seed,
        objective=Objective(args.objective),
        max_iters=args.max_iters,
        tol=args.tol,
        inner_iters=args.inner_iters,
        outer_iters=args.outer_iters,
    )


def cmd_train(args) -> None:
    entries = _read_index(Path(args.matrices), "matrices.json")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    loaded = [CorpusMatrices.load(path) for _, path in entries]
    mapping = _write_index(out, [cm.target_lemma for cm in loaded])
    for cm in loaded:
        try:
            model = train(cm, args.variant, _train_config(args, derive_seed(args.seed, cm.target_lemma)))
        except LatentWsdError as exc:
            raise ConfigError(f"target word {cm.target_lemma!r}: {exc}") from exc
        model.save(out / mapping[cm.target_lemma])


def cmd_classify(args) -> None:
    entries = _read_index(Path(args.model), "manifest.json")
    models = {}
    for _, path in entries:
        model = SenseModel.load(path)
        models[model.target_lemma] = model
    rows = ["id\ttarget_lemma\tsense_id\tfallback\tscores"]
    for inst in load_instances(args.input):
        model = models.get(inst.target_lemma)
        if model is None:
            raise ConfigError(f"instance {inst.id!r}: no model for target {inst.target_lemma!r}")
        pred = classify(model, inst)
        scores = ";".join(f"{s}={v:.6f}" for s, v in zip(model.sense_ids, pred.scores))
        rows.append(f"{inst.id}\t{inst.target_lemma}\t{pred.sense_id}\t{int(pred.fallback)}\t{scores}")
    Path(args.out).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def cmd_evaluate(args) -> None:
    spec = RunSpec(
        variant=args.variant,
        train_path=Path(args.train),
        test_path=Path(args.test),
        global_path=Path(args.global_corpus) if args.global_corpus else None,
        k=args.k,
        seeds=args.seeds,
        window=args.window,
        min_count=args.min_count,
        objective=args.objective,
        max_iters=args.max_iters,
        tol=args.tol,
        inner_iters=args.inner_iters,
        outer_iters=args.outer_iters,
    )
    text = report_render(run_experiment(spec), args.format)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")


def _add_factor_options(p):
    p.add_argument("--variant", required=True, choices=[v.value for v in Variant])
    p.add_argument("--k", type=int, required=True, help="latent dimensions")
    p.add_argument("--objective", default="kl", choices=[o.value for o in Objective])
    p.add_argument("--max-iters", type=int, default=200, help="NMF iterations (baseline1)")
    p.add_argument("--inner-iters", type=int, default=10, help="per-block iterations (latent variants)")
    p.add_argument("--outer-iters", type=int, default=50, help="interleaved cycles (latent variants)")
    p.add_argument("--tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentwsd", description="Latent semantic WSD with interleaved NMF")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-matrices", help="build A, B, C (and D) per target word")
    p.add_argument("--train", required=True)
    p.add_argument("--global", dest="global_corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--min-count", type=int, default=1)
    p.set_defaults(func=cmd_build_matrices)

    p = sub.add_parser("train", help="train sense models from built matrices")
    p.add_argument("--matrices", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_factor_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="label instances with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="multi-seed train/test precision report")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--global", dest="global_corpus")
    p.add_argument("--seeds", type=_parse_seeds, default=(0, 1, 2))
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--format", default="tsv", choices=["tsv", "json"])
    p.add_argument("--out", required=True, help="output path, or - for stdout")
    _add_factor_options(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (LatentWsdError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"latentwsd {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
