"""Experiment orchestration over the split grid.

``run_experiment`` expands every (language, generation mode, residual
strategy) combination into grid cells, trains each configured model
``seeds_per_model`` times per cell, scores eval and new-test sets, persists
one JSON artifact per cell, and emits per-language and pooled CSVs plus a
resumable ledger. Cell computation is deterministic for a fixed master
seed, so parallel schedules and reruns produce byte-identical CSVs; only
the ledger's timing fields vary.

Output layout under the run directory:

    ledger.json
    cells/{language}/{cell_id}.json
    languages/{language}/report_rows.csv
    languages/{language}/records.csv
    languages/{language}/regression.csv
    languages/{language}/regression_summary.csv
    aggregate.csv
    best_rankings.csv
    plots_data.csv

Languages are pooled with equal weight (every language runs the identical
grid). The chosen F1 variant and averaging mode are flagged as a comment
line above each report header.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from tempfile import TemporaryDirectory
from typing import Iterable, Sequence

from .corpus import Corpus, corpus_stats, parse_corpus
from .errors import ConfigError, DomainError, LedgerError, SingularityError
from .evaluation import (
    AVERAGES,
    F1_VARIANTS,
    CellResult,
    ModelRanking,
    ScoreTriple,
    aggregate_rows,
    corpus_f1,
    morpheme_overlap,
    rank_models,
)
from .models import SegmenterId, TrainConfig, FeatureTemplate, segment_corpus, train_segmenter
from .splitter import (
    DEFAULT_ADVERSARIAL_BUDGET,
    GRID_STRATEGIES,
    ExperimentPlan,
    GridCell,
    as_fraction,
    build_grid,
    derive_seed,
    format_ratio,
    parse_ratio,
)
from .stats import RegressionRecord, fit_regression

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "MORPHSPLIT_OUTPUT_DIR"
LEDGER_NAME = "ledger.json"
LEDGER_VERSION = 1
REPORT_KINDS = ("tables", "regression", "plots-data")
DEFAULT_MODELS = ("boundary_logistic", "crf", "longest_match", "unigram_viterbi")

_DEFAULT_FRACTIONS = ExperimentPlan().new_test_fractions


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment run depends on, plus execution knobs.

    ``output_dir`` and ``parallelism`` affect where and how fast results
    land but never their values, so they are excluded from the config hash
    that guards resumption.
    """

    corpus_paths: tuple[str, ...]
    output_dir: str
    fractions: tuple[Fraction, ...] = _DEFAULT_FRACTIONS
    samples_per_fraction: int = 10
    residual_splits: int = 3
    residual_ratio: Fraction = Fraction(9, 1)
    new_test_generations: tuple[str, ...] = GRID_STRATEGIES
    residual_strategies: tuple[str, ...] = GRID_STRATEGIES
    models: tuple[str, ...] = DEFAULT_MODELS
    seeds_per_model: int = 3
    f1_variant: str = "boundary"
    f1_average: str = "micro"
    collapse_epsilon: float = 0.02
    master_seed: int = 0
    adversarial_budget: int = DEFAULT_ADVERSARIAL_BUDGET
    parallelism: int = 1
    max_ngram: int = 3
    window: int = 2
    optimizer: str = "lbfgs"
    max_iterations: int = 200
    convergence_tol: float = 1e-6
    l2_lambda: float = 0.1
    unigram_smoothing: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "corpus_paths", tuple(str(p) for p in self.corpus_paths))
        object.__setattr__(
            self, "fractions", tuple(as_fraction(f) for f in self.fractions)
        )
        object.__setattr__(self, "residual_ratio", as_fraction(self.residual_ratio))
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(
            self, "new_test_generations", tuple(self.new_test_generations)
        )
        object.__setattr__(
            self, "residual_strategies", tuple(self.residual_strategies)
        )
        if not self.corpus_paths:
            raise ConfigError("need at least one corpus path")
        if not self.output_dir:
            raise ConfigError("output_dir must be set")
        if not self.models:
            raise ConfigError("need at least one model")
        for spec in self.models:
            SegmenterId.parse(spec)
        if len(set(self.models)) != len(self.models):
            raise ConfigError("duplicate model specs")
        for name, values in (
            ("new_test_generations", self.new_test_generations),
            ("residual_strategies", self.residual_strategies),
        ):
            if not values:
                raise ConfigError(f"{name} must be non-empty")
            bad = [v for v in values if v not in GRID_STRATEGIES]
            if bad or len(set(values)) != len(values):
                raise ConfigError(
                    f"{name} must be distinct members of {GRID_STRATEGIES}"
                )
        if self.seeds_per_model < 1:
            raise ConfigError("seeds_per_model must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.f1_variant not in F1_VARIANTS:
            raise ConfigError(f"f1_variant must be one of {F1_VARIANTS}")
        if self.f1_average not in AVERAGES:
            raise ConfigError(f"f1_average must be one of {AVERAGES}")
        if self.collapse_epsilon < 0:
            raise ConfigError("collapse_epsilon must be >= 0")

    def template(self) -> FeatureTemplate:
        return FeatureTemplate(max_ngram=self.max_ngram, window=self.window)

    def train_config(self, segmenter: SegmenterId, seed: int) -> TrainConfig:
        # the boundary classifier is defined as gradient-descent trained;
        # the optimizer knob governs the CRF
        optimizer = (
            "gradient_descent" if segmenter.name == "boundary_logistic" else self.optimizer
        )
        return TrainConfig(
            optimizer=optimizer,
            max_iterations=self.max_iterations,
            convergence_tol=self.convergence_tol,
            l2_lambda=self.l2_lambda,
            seed=seed,
        )

    def plan(self, generation: str) -> ExperimentPlan:
        return ExperimentPlan(
            new_test_fractions=self.fractions,
            samples_per_fraction=self.samples_per_fraction,
            residual_splits=self.residual_splits,
            residual_ratio=self.residual_ratio,
            new_test_generation=generation,
            master_seed=self.master_seed,
            adversarial_budget=self.adversarial_budget,
        )

    def to_dict(self) -> dict:
        return {
            "corpus_paths": list(self.corpus_paths),
            "output_dir": self.output_dir,
            "fractions": [str(f) for f in self.fractions],
            "samples_per_fraction": self.samples_per_fraction,
            "residual_splits": self.residual_splits,
            "residual_ratio": format_ratio(self.residual_ratio),
            "new_test_generations": list(self.new_test_generations),
            "residual_strategies": list(self.residual_strategies),
            "models": list(self.models),
            "seeds_per_model": self.seeds_per_model,
            "f1_variant": self.f1_variant,
            "f1_average": self.f1_average,
            "collapse_epsilon": self.collapse_epsilon,
            "master_seed": self.master_seed,
            "adversarial_budget": self.adversarial_budget,
            "parallelism": self.parallelism,
            "max_ngram": self.max_ngram,
            "window": self.window,
            "optimizer": self.optimizer,
            "max_iterations": self.max_iterations,
            "convergence_tol": self.convergence_tol,
            "l2_lambda": self.l2_lambda,
            "unigram_smoothing": self.unigram_smoothing,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return cls(
            corpus_paths=tuple(data["corpus_paths"]),
            output_dir=data["output_dir"],
            fractions=tuple(Fraction(f) for f in data["fractions"]),
            samples_per_fraction=int(data["samples_per_fraction"]),
            residual_splits=int(data["residual_splits"]),
            residual_ratio=parse_ratio(data["residual_ratio"]),
            new_test_generations=tuple(data["new_test_generations"]),
            residual_strategies=tuple(data["residual_strategies"]),
            models=tuple(data["models"]),
            seeds_per_model=int(data["seeds_per_model"]),
            f1_variant=data["f1_variant"],
            f1_average=data["f1_average"],
            collapse_epsilon=float(data["collapse_epsilon"]),
            master_seed=int(data["master_seed"]),
            adversarial_budget=int(data["adversarial_budget"]),
            parallelism=int(data["parallelism"]),
            max_ngram=int(data["max_ngram"]),
            window=int(data["window"]),
            optimizer=data["optimizer"],
            max_iterations=int(data["max_iterations"]),
            convergence_tol=float(data["convergence_tol"]),
            l2_lambda=float(data["l2_lambda"]),
            unigram_smoothing=float(data["unigram_smoothing"]),
        )

    def config_hash(self) -> str:
        payload = {
            k: v
            for k, v in self.to_dict().items()
            if k not in ("output_dir", "parallelism")
        }
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class CellStatus:
    status: str
    seconds: float = 0.0
    path: str = ""
    error: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "seconds": self.seconds,
            "path": self.path,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CellStatus":
        return cls(
            status=data["status"],
            seconds=float(data.get("seconds", 0.0)),
            path=data.get("path", ""),
            error=data.get("error", ""),
        )


@dataclass
class RunLedger:
    """Run manifest: the config, its hash, and per-cell completion state."""

    config: RunConfig
    config_hash: str
    cells: dict[str, CellStatus] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def done_keys(self) -> list[str]:
        return sorted(k for k, s in self.cells.items() if s.status == "done")

    def failed_keys(self) -> list[str]:
        return sorted(k for k, s in self.cells.items() if s.status != "done")

    def path(self) -> Path:
        return Path(self.config.output_dir) / LEDGER_NAME

    def save(self) -> None:
        data = {
            "version": LEDGER_VERSION,
            "config": self.config.to_dict(),
            "config_hash": self.config_hash,
            "cells": {k: s.to_dict() for k, s in sorted(self.cells.items())},
            "notes": self.notes,
        }
        path = self.path()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, ledger_path: str | Path) -> "RunLedger":
        ledger_path = Path(ledger_path)
        if ledger_path.is_dir():
            ledger_path = ledger_path / LEDGER_NAME
        if not ledger_path.exists():
            raise LedgerError(f"no ledger at {ledger_path}")
        data = json.loads(ledger_path.read_text(encoding="utf-8"))
        config = RunConfig.from_dict(data["config"])
        stored = data["config_hash"]
        actual = config.config_hash()
        if stored != actual:
            raise LedgerError(
                "config hash mismatch: the ledger's embedded config no longer "
                f"matches its recorded hash ({actual[:12]} vs {stored[:12]}); "
                "refusing to resume an edited run"
            )
        ledger = cls(config=config, config_hash=stored)
        ledger.cells = {
            k: CellStatus.from_dict(v) for k, v in data.get("cells", {}).items()
        }
        ledger.notes = list(data.get("notes", []))
        return ledger


def _mean_triple(triples: Sequence[ScoreTriple]) -> ScoreTriple:
    p = sum(t.precision for t in triples) / len(triples)
    r = sum(t.recall for t in triples) / len(triples)
    return ScoreTriple.from_pr(p, r)


def compute_cell(corpus: Corpus, cell: GridCell, config: RunConfig) -> dict:
    """Train, segment, and score every model on one grid cell.

    Returns the persistable payload: the cell, its CellResult, and the
    regression record rows (two per model, one per scored side).
    """
    train = corpus.subset(cell.train_indices)
    eval_gold = [corpus[i] for i in cell.eval_indices]
    new_gold = [corpus[i] for i in cell.new_test_indices]
    eval_surfaces = [w.surface for w in eval_gold]
    new_surfaces = [w.surface for w in new_gold]
    overlap = morpheme_overlap(train, eval_gold)

    tables: dict[str, dict[str, ScoreTriple]] = {
        "boundary_eval": {}, "boundary_new": {},
        "morpheme_eval": {}, "morpheme_new": {},
    }
    template = config.template()
    with TemporaryDirectory(prefix="morphsplit-cell-") as tmp:
        for mi, spec in enumerate(sorted(config.models)):
            sid = SegmenterId.parse(spec)
            key = sid.key()
            per_seed: dict[str, list[ScoreTriple]] = {t: [] for t in tables}
            for k in range(config.seeds_per_model):
                seed = derive_seed(config.master_seed, cell.cell_id, key, k)
                model = train_segmenter(
                    sid,
                    train,
                    template=template,
                    config=config.train_config(sid, seed),
                    unigram_smoothing=config.unigram_smoothing,
                    workdir=Path(tmp) / f"m{mi}k{k}",
                )
                pred_eval = segment_corpus(model, eval_surfaces)
                pred_new = segment_corpus(model, new_surfaces)
                for variant in F1_VARIANTS:
                    per_seed[f"{variant}_eval"].append(
                        corpus_f1(eval_gold, pred_eval, variant, config.f1_average)
                    )
                    per_seed[f"{variant}_new"].append(
                        corpus_f1(new_gold, pred_new, variant, config.f1_average)
                    )
            for table, triples in per_seed.items():
                tables[table][key] = _mean_triple(triples)

    def ranked(side: str) -> ModelRanking:
        scores = {m: t.f1 for m, t in tables[f"{config.f1_variant}_{side}"].items()}
        if len(scores) == 1:
            only = next(iter(scores))
            return ModelRanking(
                models=(only,), groups=((only,),),
                collapse_epsilon=config.collapse_epsilon,
            )
        return rank_models(scores, config.collapse_epsilon)

    rank_eval = ranked("eval")
    rank_new = ranked("new")
    result = CellResult(
        cell_id=cell.cell_id,
        language_tag=corpus.language_tag,
        fraction=cell.fraction,
        new_test_strategy=cell.new_test_strategy,
        residual_strategy=cell.residual_strategy,
        seed_group="+".join(str(k) for k in range(config.seeds_per_model)),
        boundary_eval=tables["boundary_eval"],
        boundary_new=tables["boundary_new"],
        morpheme_eval=tables["morpheme_eval"],
        morpheme_new=tables["morpheme_new"],
        ranking_eval=rank_eval,
        ranking_new=rank_new,
        overlap=overlap,
        train_size=len(cell.train_indices),
        eval_size=len(cell.eval_indices),
        new_test_size=len(cell.new_test_indices),
    )

    train_stats = corpus_stats(train)
    eval_stats = corpus_stats(eval_gold)
    records = []
    for key in sorted(tables["boundary_eval"]):
        for side in ("eval", "new"):
            records.append(
                {
                    "cell_id": cell.cell_id,
                    "model_arch": key,
                    "score_on": side,
                    "f1": tables[f"{config.f1_variant}_{side}"][key].f1,
                    "strategy": 1 if cell.residual_strategy == "random" else 0,
                    "new_test_gen": 1 if cell.new_test_strategy == "random" else 0,
                    "morpheme_overlap": overlap,
                    "word_count_ratio": train_stats.word_type_count
                    / eval_stats.word_type_count,
                    "morph_per_word_ratio": train_stats.avg_morphemes_per_word
                    / eval_stats.avg_morphemes_per_word,
                    "morph_type_per_word_ratio": train_stats.avg_morpheme_types_per_word
                    / eval_stats.avg_morpheme_types_per_word,
                }
            )
    return {
        "key": f"{corpus.language_tag}/{cell.cell_id}",
        "language_tag": corpus.language_tag,
        "cell": cell.to_dict(),
        "result": result.to_dict(),
        "records": records,
    }


_WORKER_CORPORA: dict[str, Corpus] = {}


def _worker_corpus(path: str) -> Corpus:
    if path not in _WORKER_CORPORA:
        _WORKER_CORPORA[path] = parse_corpus(path)
    return _WORKER_CORPORA[path]


def _run_task(task: tuple[str, dict, dict]) -> tuple[str, str, dict | str, float]:
    """Process-pool entry point: returns (key, status, payload-or-error, s)."""
    path, cell_dict, config_dict = task
    cell = GridCell.from_dict(cell_dict)
    config = RunConfig.from_dict(config_dict)
    corpus = _worker_corpus(path)
    key = f"{corpus.language_tag}/{cell.cell_id}"
    start = time.perf_counter()
    try:
        payload = compute_cell(corpus, cell, config)
    except Exception:
        return key, "failed", traceback.format_exc(limit=20), time.perf_counter() - start
    return key, "done", payload, time.perf_counter() - start


def _load_corpora(config: RunConfig) -> list[tuple[str, Corpus]]:
    out = []
    seen = set()
    for path in config.corpus_paths:
        corpus = parse_corpus(path)
        if corpus.language_tag in seen:
            raise ConfigError(
                f"duplicate language tag {corpus.language_tag!r} across corpora"
            )
        seen.add(corpus.language_tag)
        out.append((path, corpus))
    return out


def enumerate_cells(
    config: RunConfig, corpora: Sequence[tuple[str, Corpus]]
) -> list[tuple[str, str, GridCell]]:
    """All (corpus path, language, cell) work units in deterministic order."""
    tasks = []
    for path, corpus in corpora:
        for generation in config.new_test_generations:
            plan = config.plan(generation)
            for strategy in config.residual_strategies:
                for cell in build_grid(corpus, plan, strategy):
                    tasks.append((path, corpus.language_tag, cell))
    return tasks


def _cell_artifact_path(out_dir: Path, language: str, cell_id: str) -> Path:
    return out_dir / "cells" / language / f"{cell_id}.json"


def _persist_payload(out_dir: Path, payload: dict) -> Path:
    path = _cell_artifact_path(out_dir, payload["language_tag"], payload["cell"]["cell_id"])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


def _execute(
    config: RunConfig,
    tasks: Sequence[tuple[str, str, GridCell]],
) -> dict[str, tuple[str, dict | str, float]]:
    """Run tasks inline or in a process pool; key → (status, payload, s)."""
    packed = [(path, cell.to_dict(), config.to_dict()) for path, _, cell in tasks]
    outcomes: dict[str, tuple[str, dict | str, float]] = {}
    if config.parallelism > 1 and len(packed) > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            for key, status, payload, seconds in pool.map(_run_task, packed):
                outcomes[key] = (status, payload, seconds)
    else:
        for task in packed:
            key, status, payload, seconds = _run_task(task)
            outcomes[key] = (status, payload, seconds)
    return outcomes


def _f(v: float) -> str:
    return f"{v:.6f}"


def _g(v: float) -> str:
    return f"{v:.6g}"


def _write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    comment: str | None = None,
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


REPORT_ROW_COLUMNS = (
    "cell_id", "language_tag", "fraction", "new_test_strategy",
    "residual_strategy", "model", "seed_group", "f1_boundary_eval",
    "f1_boundary_new", "f1_morpheme_eval", "f1_morpheme_new",
    "morpheme_overlap", "train_size", "eval_size", "new_test_size",
)

RECORD_COLUMNS = (
    "cell_id", "model_arch", "score_on", "f1", "strategy", "new_test_gen",
    "morpheme_overlap", "word_count_ratio", "morph_per_word_ratio",
    "morph_type_per_word_ratio",
)


def _provenance(config: RunConfig) -> str:
    return (
        f"f1_variant={config.f1_variant} average={config.f1_average} "
        "languages=equal-weight"
    )


def _report_rows_csv(out: Path, language: str, results: list[CellResult], config: RunConfig) -> Path:
    rows = []
    for r in sorted(results, key=lambda c: c.cell_id):
        for m in r.models():
            rows.append(
                (
                    r.cell_id, r.language_tag, _g(float(r.fraction)),
                    r.new_test_strategy, r.residual_strategy, m, r.seed_group,
                    _f(r.boundary_eval[m].f1), _f(r.boundary_new[m].f1),
                    _f(r.morpheme_eval[m].f1), _f(r.morpheme_new[m].f1),
                    _f(r.overlap), r.train_size, r.eval_size, r.new_test_size,
                )
            )
    return _write_csv(
        out / "languages" / language / "report_rows.csv",
        REPORT_ROW_COLUMNS, rows, comment=_provenance(config),
    )


def _records_csv(out: Path, language: str, records: list[dict], config: RunConfig) -> Path:
    rows = [
        (
            rec["cell_id"], rec["model_arch"], rec["score_on"], _f(rec["f1"]),
            rec["strategy"], rec["new_test_gen"], _f(rec["morpheme_overlap"]),
            _g(rec["word_count_ratio"]), _g(rec["morph_per_word_ratio"]),
            _g(rec["morph_type_per_word_ratio"]),
        )
        for rec in sorted(
            records, key=lambda r: (r["cell_id"], r["model_arch"], r["score_on"])
        )
    ]
    return _write_csv(
        out / "languages" / language / "records.csv",
        RECORD_COLUMNS, rows, comment=_provenance(config),
    )


def regression_records(records: list[dict]) -> list[RegressionRecord]:
    """Validated regression inputs from persisted record rows.

    ``cell_id`` and ``score_on`` are provenance columns; they never enter
    the design matrix.
    """
    return [
        RegressionRecord(
            f1=rec["f1"],
            strategy=rec["strategy"],
            new_test_gen=rec["new_test_gen"],
            morpheme_overlap=rec["morpheme_overlap"],
            word_count_ratio=rec["word_count_ratio"],
            morph_per_word_ratio=rec["morph_per_word_ratio"],
            morph_type_per_word_ratio=rec["morph_type_per_word_ratio"],
            model_arch=rec["model_arch"],
        )
        for rec in records
    ]


def _regression_csvs(
    out: Path, language: str, records: list[dict], config: RunConfig
) -> tuple[list[Path], str | None]:
    strategies = {rec["strategy"] for rec in records}
    if len(strategies) < 2:
        note = (
            f"{language}: regression skipped (needs both residual strategy "
            "levels, run includes one)"
        )
        return [], note
    try:
        result = fit_regression(regression_records(records))
    except (DomainError, SingularityError) as exc:
        return [], f"{language}: regression skipped ({exc})"
    term_rows = [
        (row["term"], _g(row["beta"]), _g(row["se"]), _g(row["t"]),
         _g(row["p"]), row["stars"])
        for row in result.rows()
    ]
    paths = [
        _write_csv(
            out / "languages" / language / "regression.csv",
            ("term", "beta", "se", "t", "p", "stars"),
            term_rows, comment=_provenance(config),
        ),
        _write_csv(
            out / "languages" / language / "regression_summary.csv",
            ("language", "r_squared", "n", "dof"),
            [(language, _g(result.r_squared), result.n, result.dof)],
            comment=_provenance(config),
        ),
    ]
    return paths, None


def _aggregate_csv(out: Path, results: list[CellResult], config: RunConfig) -> Path:
    rows = [
        (
            row["model"], row["residual_strategy"], _f(row["mean_eval_f1"]),
            _f(row["mean_new_f1"]), _f(row["mean_abs_gap"]),
            _f(row["consistency"]), _f(row["sigma"]),
        )
        for row in aggregate_rows(results, config.f1_variant)
    ]
    return _write_csv(
        out / "aggregate.csv",
        ("model", "residual_strategy", "mean_eval_f1", "mean_new_f1",
         "mean_abs_gap", "consistency", "sigma"),
        rows, comment=_provenance(config),
    )


def ranking_label(ranking: ModelRanking) -> str:
    """Human-readable group chain, e.g. ``crf > lstm = trm > unigram``."""
    return " > ".join(" = ".join(group) for group in ranking.groups)


def _best_rankings_csv(out: Path, results: list[CellResult], config: RunConfig) -> Path:
    rows = []
    by_strategy: dict[str, list[CellResult]] = {}
    for r in results:
        by_strategy.setdefault(r.residual_strategy, []).append(r)
    for strategy in sorted(by_strategy):
        cells = by_strategy[strategy]
        for side in ("eval", "new"):
            counts: dict[str, int] = {}
            for c in cells:
                label = ranking_label(
                    c.ranking_eval if side == "eval" else c.ranking_new
                )
                counts[label] = counts.get(label, 0) + 1
            for label in sorted(counts, key=lambda l: (-counts[l], l)):
                rows.append(
                    (strategy, side, label, counts[label],
                     _f(counts[label] / len(cells)))
                )
    return _write_csv(
        out / "best_rankings.csv",
        ("residual_strategy", "side", "ranking", "count", "share"),
        rows, comment=_provenance(config),
    )


def _population_sigma(values: Sequence[float]) -> float:
    mean = sum(values) / len(values)
    return (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5


def _plots_data_csv(out: Path, results: list[CellResult], config: RunConfig) -> Path:
    """Per-fraction new-test F1 sigma, pooled over languages and modes."""
    groups: dict[tuple[Fraction, str], list[CellResult]] = {}
    for r in results:
        groups.setdefault((r.fraction, r.residual_strategy), []).append(r)
    rows = []
    for (frac, strategy) in sorted(groups):
        cells = groups[(frac, strategy)]
        for m in cells[0].models():
            sigma = _population_sigma(
                [c.scores(config.f1_variant, "new")[m].f1 for c in cells]
            )
            rows.append((_g(float(frac)), strategy, m, _f(sigma)))
    return _write_csv(
        out / "plots_data.csv",
        ("fraction", "strategy", "model", "sigma"),
        rows, comment=_provenance(config),
    )


def _load_payloads(ledger: RunLedger) -> dict[str, dict]:
    payloads = {}
    for key, status in ledger.cells.items():
        if status.status != "done":
            continue
        path = Path(status.path)
        if not path.exists():
            continue
        payloads[key] = json.loads(path.read_text(encoding="utf-8"))
    return payloads


def _group_by_language(payloads: dict[str, dict]) -> dict[str, list[dict]]:
    by_lang: dict[str, list[dict]] = {}
    for key in sorted(payloads):
        payload = payloads[key]
        by_lang.setdefault(payload["language_tag"], []).append(payload)
    return by_lang


def _write_outputs(config: RunConfig, payloads: dict[str, dict]) -> tuple[list[Path], list[str]]:
    """Emit every CSV from persisted payloads; returns (paths, notes)."""
    out = Path(config.output_dir)
    written: list[Path] = []
    notes: list[str] = []
    by_lang = _group_by_language(payloads)
    all_results: list[CellResult] = []
    for language, cells in sorted(by_lang.items()):
        results = [CellResult.from_dict(p["result"]) for p in cells]
        records = [rec for p in cells for rec in p["records"]]
        all_results.extend(results)
        written.append(_report_rows_csv(out, language, results, config))
        written.append(_records_csv(out, language, records, config))
        paths, note = _regression_csvs(out, language, records, config)
        written.extend(paths)
        if note:
            notes.append(note)
            logger.warning(note)
    if all_results:
        all_results.sort(key=lambda r: (r.language_tag, r.cell_id))
        written.append(_aggregate_csv(out, all_results, config))
        written.append(_best_rankings_csv(out, all_results, config))
        written.append(_plots_data_csv(out, all_results, config))
    return written, notes


def run_experiment(config: RunConfig) -> RunLedger:
    """Execute the full grid and write artifacts, reports, and the ledger.

    Cell failures are recorded in the ledger and skipped; the caller
    decides process exit status from ``ledger.failed_keys()``.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpora = _load_corpora(config)
    tasks = enumerate_cells(config, corpora)
    ledger = RunLedger(config=config, config_hash=config.config_hash())
    outcomes = _execute(config, tasks)
    payloads: dict[str, dict] = {}
    for key in sorted(outcomes):
        status, payload, seconds = outcomes[key]
        if status == "done":
            path = _persist_payload(out, payload)
            payloads[key] = payload
            ledger.cells[key] = CellStatus("done", seconds, str(path))
        else:
            logger.error("cell %s failed:\n%s", key, payload)
            ledger.cells[key] = CellStatus("failed", seconds, "", str(payload))
    _, notes = _write_outputs(config, payloads)
    ledger.notes = notes
    ledger.save()
    return ledger


def resume(ledger_path: str | Path) -> RunLedger:
    """Recompute only the pending/failed/missing cells of a saved run.

    Refuses (with :class:`LedgerError`) when the ledger's embedded config
    no longer matches its recorded hash.
    """
    ledger = RunLedger.load(ledger_path)
    config = ledger.config
    out = Path(config.output_dir)
    corpora = _load_corpora(config)
    tasks = enumerate_cells(config, corpora)
    todo = []
    for path, language, cell in tasks:
        key = f"{language}/{cell.cell_id}"
        status = ledger.cells.get(key)
        artifact = _cell_artifact_path(out, language, cell.cell_id)
        if status is None or status.status != "done" or not artifact.exists():
            todo.append((path, language, cell))
    if todo:
        outcomes = _execute(config, todo)
        for key in sorted(outcomes):
            status, payload, seconds = outcomes[key]
            if status == "done":
                path = _persist_payload(out, payload)
                ledger.cells[key] = CellStatus("done", seconds, str(path))
            else:
                logger.error("cell %s failed:\n%s", key, payload)
                ledger.cells[key] = CellStatus("failed", seconds, "", str(payload))
    payloads = _load_payloads(ledger)
    _, notes = _write_outputs(config, payloads)
    ledger.notes = notes
    ledger.save()
    return ledger


def report(ledger_path: str | Path, kind: str) -> list[Path]:
    """Regenerate one report family from a saved run's artifacts."""
    if kind not in REPORT_KINDS:
        raise DomainError(f"kind must be one of {REPORT_KINDS}, got {kind!r}")
    ledger = RunLedger.load(ledger_path)
    config = ledger.config
    out = Path(config.output_dir)
    payloads = _load_payloads(ledger)
    if not payloads:
        raise DomainError("ledger has no completed cells to report on")
    by_lang = _group_by_language(payloads)
    all_results = [
        CellResult.from_dict(p["result"])
        for lang in sorted(by_lang)
        for p in by_lang[lang]
    ]
    all_results.sort(key=lambda r: (r.language_tag, r.cell_id))
    written: list[Path] = []
    if kind == "tables":
        written.append(_aggregate_csv(out, all_results, config))
        written.append(_best_rankings_csv(out, all_results, config))
    elif kind == "regression":
        for language, cells in sorted(by_lang.items()):
            records = [rec for p in cells for rec in p["records"]]
            paths, note = _regression_csvs(out, language, records, config)
            written.extend(paths)
            if note:
                logger.warning(note)
    else:
        written.append(_plots_data_csv(out, all_results, config))
    return written
