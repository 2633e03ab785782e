"""Dataset partitioning experiments for morphological segmentation models.

The package is organized as a library first: :mod:`morphsplit.corpus` holds
word types and the label codec, :mod:`morphsplit.splitter` builds dataset
partitions and experiment grids, :mod:`morphsplit.models` trains and runs the
segmenters, :mod:`morphsplit.evaluation` scores and ranks them,
:mod:`morphsplit.stats` fits the explanatory regression, and
:mod:`morphsplit.runner` orchestrates full experiment runs. The ``morphsplit``
console script is a thin wrapper over these modules.
"""

from .corpus import (
    Corpus,
    CorpusStats,
    Label,
    LabelSequence,
    SegmentedWord,
    SyntheticSpec,
    corpus_stats,
    decode_labels,
    encode_labels,
    generate_synthetic_corpus,
    graphemes,
    parse_corpus,
    write_corpus,
)
from .errors import (
    AdapterError,
    CapacityError,
    ConfigError,
    ContractError,
    DomainError,
    LedgerError,
    MorphsplitError,
    ParseError,
    SingularityError,
    SplitError,
    TrainingError,
    ValidationError,
)
from .evaluation import (
    CellResult,
    ModelRanking,
    ScoreTriple,
    aggregate_rows,
    corpus_f1,
    generalization_gap,
    morpheme_overlap,
    rank_models,
    ranking_consistency,
)
from .models import (
    BUILTIN_SEGMENTERS,
    FeatureTemplate,
    SegmenterId,
    TrainConfig,
    load_model,
    save_model,
    segment_corpus,
    train_segmenter,
)
from .runner import (
    RunConfig,
    RunLedger,
    compute_cell,
    regression_records,
    report,
    resume,
    run_experiment,
)
from .splitter import (
    ExperimentPlan,
    GridCell,
    SplitManifest,
    adversarial_split,
    build_grid,
    derive_seed,
    distribution_distance,
    heuristic_split,
    load_manifest,
    morpheme_distribution,
    parse_ratio,
    random_split,
    save_manifest,
    split_distance,
)
from .stats import (
    RegressionRecord,
    RegressionResult,
    build_design_matrix,
    fit_regression,
    ols_fit,
    significance_stars,
    student_t_cdf,
    two_sided_p,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "BUILTIN_SEGMENTERS",
    "CapacityError",
    "CellResult",
    "ConfigError",
    "ContractError",
    "Corpus",
    "CorpusStats",
    "DomainError",
    "ExperimentPlan",
    "FeatureTemplate",
    "GridCell",
    "Label",
    "LabelSequence",
    "LedgerError",
    "ModelRanking",
    "MorphsplitError",
    "ParseError",
    "RegressionRecord",
    "RegressionResult",
    "RunConfig",
    "RunLedger",
    "ScoreTriple",
    "SegmentedWord",
    "SegmenterId",
    "SingularityError",
    "SplitError",
    "SplitManifest",
    "SyntheticSpec",
    "TrainConfig",
    "TrainingError",
    "ValidationError",
    "adversarial_split",
    "aggregate_rows",
    "build_design_matrix",
    "build_grid",
    "compute_cell",
    "corpus_f1",
    "corpus_stats",
    "decode_labels",
    "derive_seed",
    "distribution_distance",
    "encode_labels",
    "fit_regression",
    "generalization_gap",
    "generate_synthetic_corpus",
    "graphemes",
    "heuristic_split",
    "load_manifest",
    "load_model",
    "morpheme_distribution",
    "morpheme_overlap",
    "ols_fit",
    "parse_corpus",
    "parse_ratio",
    "random_split",
    "rank_models",
    "ranking_consistency",
    "regression_records",
    "report",
    "resume",
    "run_experiment",
    "save_manifest",
    "save_model",
    "segment_corpus",
    "significance_stars",
    "split_distance",
    "student_t_cdf",
    "train_segmenter",
    "two_sided_p",
    "write_corpus",
    "__version__",
]
