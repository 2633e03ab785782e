"""Command line interface.

Subcommands cover single-step utilities (``synth``, ``split``, ``train``,
``segment``, ``evaluate``, ``regress``) and full experiment orchestration
(``experiment``, ``resume``, ``report``).

``experiment`` reads an optional flat ``key = value`` config file whose keys
mirror :class:`~morphsplit.runner.RunConfig` fields; ``#`` starts a comment.
Precedence per setting: command line flag, then the ``MORPHSPLIT_OUTPUT_DIR``
environment variable (output directory only), then the config file, then the
built-in default. List-valued keys are comma separated.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from fractions import Fraction
from pathlib import Path

from .corpus import (
    SyntheticSpec,
    generate_synthetic_corpus,
    parse_corpus,
    write_corpus,
)
from .errors import ConfigError, MorphsplitError, ParseError
from .evaluation import F1_VARIANTS, AVERAGES, corpus_f1
from .models import (
    FeatureTemplate,
    SegmenterId,
    TrainConfig,
    load_model,
    save_model,
    segment_corpus,
    train_segmenter,
)
from .runner import (
    OUTPUT_DIR_ENV,
    REPORT_KINDS,
    RunConfig,
    regression_records,
    report,
    resume,
    run_experiment,
)
from .splitter import (
    adversarial_split,
    as_fraction,
    heuristic_split,
    parse_ratio,
    random_split,
    save_manifest,
)
from .stats import fit_regression

SPLIT_STRATEGIES = ("random", "adversarial", "heuristic")


def _split_csv(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _parse_fractions(text: str) -> tuple[Fraction, ...]:
    return tuple(as_fraction(part) for part in _split_csv(text))


_CONFIG_COERCERS = {
    "corpus_paths": _split_csv,
    "output_dir": str,
    "fractions": _parse_fractions,
    "samples_per_fraction": int,
    "residual_splits": int,
    "residual_ratio": parse_ratio,
    "new_test_generations": _split_csv,
    "residual_strategies": _split_csv,
    "models": _split_csv,
    "seeds_per_model": int,
    "f1_variant": str,
    "f1_average": str,
    "collapse_epsilon": float,
    "master_seed": int,
    "adversarial_budget": int,
    "parallelism": int,
    "max_ngram": int,
    "window": int,
    "optimizer": str,
    "max_iterations": int,
    "convergence_tol": float,
    "l2_lambda": float,
    "unigram_smoothing": float,
}


def parse_config_file(path: str | Path) -> dict:
    """Read a flat ``key = value`` config file into typed RunConfig kwargs."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    kwargs = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_COERCERS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            kwargs[key] = _CONFIG_COERCERS[key](value)
        except MorphsplitError:
            raise
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return kwargs


def _experiment_config(args: argparse.Namespace) -> RunConfig:
    """Merge file, environment, and flags into a RunConfig."""
    kwargs: dict = {}
    if args.config:
        kwargs.update(parse_config_file(args.config))
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        kwargs["output_dir"] = env_out
    flag_map = {
        "corpus_paths": tuple(args.corpus) if args.corpus else None,
        "output_dir": args.output_dir,
        "fractions": _parse_fractions(args.fractions) if args.fractions else None,
        "samples_per_fraction": args.samples_per_fraction,
        "residual_splits": args.residual_splits,
        "residual_ratio": parse_ratio(args.residual_ratio) if args.residual_ratio else None,
        "new_test_generations": _split_csv(args.generations) if args.generations else None,
        "residual_strategies": _split_csv(args.strategies) if args.strategies else None,
        "models": _split_csv(args.models) if args.models else None,
        "seeds_per_model": args.seeds_per_model,
        "f1_variant": args.f1_variant,
        "f1_average": args.average,
        "collapse_epsilon": args.collapse_epsilon,
        "master_seed": args.master_seed,
        "adversarial_budget": args.budget,
        "parallelism": args.parallelism,
        "max_ngram": args.max_ngram,
        "window": args.window,
        "optimizer": args.optimizer,
        "max_iterations": args.max_iterations,
        "convergence_tol": args.convergence_tol,
        "l2_lambda": args.l2_lambda,
        "unigram_smoothing": args.smoothing,
    }
    kwargs.update({k: v for k, v in flag_map.items() if v is not None})
    if "corpus_paths" not in kwargs:
        raise ConfigError("no corpus given (use --corpus or corpus_paths in the config file)")
    if "output_dir" not in kwargs:
        raise ConfigError(
            "no output directory given (use --output-dir, the "
            f"{OUTPUT_DIR_ENV} environment variable, or output_dir in the config file)"
        )
    return RunConfig(**kwargs)


def _add_experiment_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--corpus", action="append", metavar="PATH",
                     help="corpus file (repeatable)")
    sub.add_argument("--output-dir", help="run output directory")
    sub.add_argument("--fractions", help="comma-separated new-test fractions")
    sub.add_argument("--samples-per-fraction", type=int)
    sub.add_argument("--residual-splits", type=int)
    sub.add_argument("--residual-ratio", help="train:eval ratio, e.g. 9:1")
    sub.add_argument("--generations", help="comma-separated new-test modes")
    sub.add_argument("--strategies", help="comma-separated residual strategies")
    sub.add_argument("--models", help="comma-separated model specs")
    sub.add_argument("--seeds-per-model", type=int)
    sub.add_argument("--f1-variant", choices=F1_VARIANTS)
    sub.add_argument("--average", choices=AVERAGES)
    sub.add_argument("--collapse-epsilon", type=float)
    sub.add_argument("--master-seed", type=int)
    sub.add_argument("--budget", type=int, help="adversarial swap-evaluation budget")
    sub.add_argument("--parallelism", type=int)
    sub.add_argument("--max-ngram", type=int)
    sub.add_argument("--window", type=int)
    sub.add_argument("--optimizer", choices=("lbfgs", "gradient_descent"))
    sub.add_argument("--max-iterations", type=int)
    sub.add_argument("--convergence-tol", type=float)
    sub.add_argument("--l2-lambda", type=float)
    sub.add_argument("--smoothing", type=float, help="unigram additive smoothing")


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        num_words=args.words,
        stems=args.stems,
        suffixes=args.suffixes,
        min_suffixes=args.min_suffixes,
        max_suffixes=args.max_suffixes,
        seed=args.seed,
        language_tag=args.language_tag,
    )
    corpus = generate_synthetic_corpus(spec)
    write_corpus(corpus, args.output)
    print(f"wrote {len(corpus)} words to {args.output}")
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    corpus = parse_corpus(args.corpus)
    ratio = parse_ratio(args.ratio)
    if args.strategy == "random":
        manifest = random_split(corpus, ratio, args.seed)
    elif args.strategy == "adversarial":
        manifest = adversarial_split(corpus, ratio, args.seed, budget=args.budget)
    else:
        manifest = heuristic_split(corpus, ratio, as_fraction(args.tolerance))
        if manifest is None:
            print("heuristic split: no morpheme-count threshold fits the "
                  "requested share within tolerance")
            return 0
    print(f"strategy={manifest.strategy} side_a={len(manifest.indices_a)} "
          f"side_b={len(manifest.indices_b)} "
          f"distance={manifest.achieved_distance:.6f}")
    if args.output:
        save_manifest(manifest, args.output)
        print(f"manifest written to {args.output}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    corpus = parse_corpus(args.corpus)
    sid = SegmenterId.parse(args.model)
    template = FeatureTemplate(max_ngram=args.max_ngram, window=args.window)
    config = TrainConfig(
        optimizer=args.optimizer,
        max_iterations=args.max_iterations,
        convergence_tol=args.convergence_tol,
        l2_lambda=args.l2_lambda,
        seed=args.seed,
    )
    model = train_segmenter(
        sid,
        corpus,
        template=template,
        config=config,
        unigram_smoothing=args.smoothing,
        workdir=args.workdir,
    )
    save_model(model, args.output)
    print(f"trained {sid.key()} on {len(corpus)} words -> {args.output}")
    return 0


def _cmd_segment(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    surfaces = [
        line.strip()
        for line in Path(args.input).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    words = segment_corpus(model, surfaces)
    lines = [f"{w.surface}\t{' '.join(w.morphemes)}" for w in words]
    if args.output:
        Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"segmented {len(words)} words -> {args.output}")
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold = parse_corpus(args.gold)
    pred = parse_corpus(args.pred)
    if len(gold) != len(pred):
        raise ConfigError(
            f"gold has {len(gold)} words but predictions have {len(pred)}"
        )
    variants = F1_VARIANTS if args.variant == "both" else (args.variant,)
    for variant in variants:
        triple = corpus_f1(list(gold), list(pred), variant, args.average)
        print(f"{variant} precision={triple.precision:.6f} "
              f"recall={triple.recall:.6f} f1={triple.f1:.6f}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    ledger = run_experiment(config)
    return _summarize_ledger(ledger)


def _cmd_resume(args: argparse.Namespace) -> int:
    ledger = resume(args.ledger)
    return _summarize_ledger(ledger)


def _summarize_ledger(ledger) -> int:
    done = ledger.done_keys()
    failed = ledger.failed_keys()
    print(f"cells: {len(done)} done, {len(failed)} failed")
    for note in ledger.notes:
        print(f"note: {note}")
    for key in failed:
        print(f"failed: {key}")
    print(f"ledger: {ledger.path()}")
    return 1 if failed else 0


def _cmd_report(args: argparse.Namespace) -> int:
    paths = report(args.ledger, args.kind)
    if not paths:
        print("nothing to report (see the ledger notes)")
        return 0
    for path in paths:
        print(path)
    return 0


def _cmd_regress(args: argparse.Namespace) -> int:
    records = []
    with open(args.records, newline="", encoding="utf-8") as fh:
        data_lines = [line for line in fh if not line.startswith("#")]
    for row in csv.DictReader(data_lines):
        records.append(
            {
                "f1": float(row["f1"]),
                "strategy": int(row["strategy"]),
                "new_test_gen": int(row["new_test_gen"]),
                "morpheme_overlap": float(row["morpheme_overlap"]),
                "word_count_ratio": float(row["word_count_ratio"]),
                "morph_per_word_ratio": float(row["morph_per_word_ratio"]),
                "morph_type_per_word_ratio": float(row["morph_type_per_word_ratio"]),
                "model_arch": row["model_arch"],
            }
        )
    result = fit_regression(regression_records(records))
    print(f"n={result.n} dof={result.dof} r_squared={result.r_squared:.6g}")
    print(f"{'term':<42} {'beta':>12} {'se':>12} {'t':>10} {'p':>10} stars")
    for row in result.rows():
        print(f"{row['term']:<42} {row['beta']:>12.6g} {row['se']:>12.6g} "
              f"{row['t']:>10.4g} {row['p']:>10.4g} {row['stars']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphsplit",
        description="Segmentation-model generalization experiments over "
                    "dataset split strategies.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("synth", help="generate a synthetic corpus file")
    sub.add_argument("--output", required=True)
    sub.add_argument("--words", type=int, required=True)
    sub.add_argument("--stems", type=int, default=30)
    sub.add_argument("--suffixes", type=int, default=8)
    sub.add_argument("--min-suffixes", type=int, default=1)
    sub.add_argument("--max-suffixes", type=int, default=2)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--language-tag", default="synthetic")
    sub.set_defaults(func=_cmd_synth)

    sub = subs.add_parser("split", help="compute one two-way split")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--strategy", choices=SPLIT_STRATEGIES, required=True)
    sub.add_argument("--ratio", default="9:1", help="side_a:side_b ratio")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--budget", type=int, default=None,
                     help="adversarial swap-evaluation budget (default unlimited)")
    sub.add_argument("--tolerance", default="1/50",
                     help="heuristic share tolerance")
    sub.add_argument("--output", help="write the split manifest JSON here")
    sub.set_defaults(func=_cmd_split)

    sub = subs.add_parser("train", help="train one model on a corpus")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--model", required=True,
                     help="boundary_logistic | crf | longest_match | "
                          "unigram_viterbi | external:CMD")
    sub.add_argument("--output", required=True, help="model JSON path")
    sub.add_argument("--max-ngram", type=int, default=3)
    sub.add_argument("--window", type=int, default=2)
    sub.add_argument("--optimizer", choices=("lbfgs", "gradient_descent"),
                     default="lbfgs")
    sub.add_argument("--max-iterations", type=int, default=200)
    sub.add_argument("--convergence-tol", type=float, default=1e-6)
    sub.add_argument("--l2-lambda", type=float, default=0.1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--smoothing", type=float, default=0.1)
    sub.add_argument("--workdir", help="working directory (external models)")
    sub.set_defaults(func=_cmd_train)

    sub = subs.add_parser("segment", help="segment words with a saved model")
    sub.add_argument("--model", required=True, help="model JSON path")
    sub.add_argument("--input", required=True, help="one surface per line")
    sub.add_argument("--output", help="corpus-format output (default stdout)")
    sub.set_defaults(func=_cmd_segment)

    sub = subs.add_parser("evaluate", help="score predictions against gold")
    sub.add_argument("--gold", required=True, help="gold corpus file")
    sub.add_argument("--pred", required=True, help="predicted corpus file")
    sub.add_argument("--variant", choices=F1_VARIANTS + ("both",),
                     default="both")
    sub.add_argument("--average", choices=AVERAGES, default="micro")
    sub.set_defaults(func=_cmd_evaluate)

    sub = subs.add_parser("experiment", help="run the full split-grid experiment")
    _add_experiment_flags(sub)
    sub.set_defaults(func=_cmd_experiment)

    sub = subs.add_parser("resume", help="recompute pending/failed cells of a run")
    sub.add_argument("--ledger", required=True,
                     help="ledger.json path or run directory")
    sub.set_defaults(func=_cmd_resume)

    sub = subs.add_parser("report", help="regenerate reports from a finished run")
    sub.add_argument("--ledger", required=True,
                     help="ledger.json path or run directory")
    sub.add_argument("--kind", choices=REPORT_KINDS, required=True)
    sub.set_defaults(func=_cmd_report)

    sub = subs.add_parser("regress", help="fit the F1 regression on a records CSV")
    sub.add_argument("--records", required=True,
                     help="records.csv emitted by an experiment run")
    sub.set_defaults(func=_cmd_regress)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MorphsplitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
