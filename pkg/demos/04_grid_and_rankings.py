"""
The experiment grid, cell scoring, and model rankings
=====================================================

"""

# One experiment cell fixes everything that varies: a held-out "new test"
# carve, a train/eval split of the residual, and the strategies that made
# them. The grid enumerates cells over carve fractions, carve samples, and
# residual splits, all derived deterministically from one master seed.
from fractions import Fraction

from morphsplit import (
    ExperimentPlan,
    SyntheticSpec,
    build_grid,
    generate_synthetic_corpus,
)

corpus = generate_synthetic_corpus(SyntheticSpec(num_words=80, stems=10, suffixes=5, seed=2))
plan = ExperimentPlan(
    new_test_fractions=(Fraction(1, 5), Fraction(3, 10)),
    samples_per_fraction=2,
    residual_splits=2,
    adversarial_budget=2000,
    master_seed=0,
)
grid = build_grid(corpus, plan, residual_strategy="random")
print("cells:", len(grid), "=", "2 fractions x 2 samples x 2 splits")

cell = grid[0]
print("cell", cell.cell_id, "train/eval/new =",
      len(cell.train_indices), len(cell.eval_indices), len(cell.new_test_indices))

# Every cell is an exhaustive disjoint partition of the corpus.
members = sorted(cell.train_indices + cell.eval_indices + cell.new_test_indices)
assert members == list(range(len(corpus)))

# Scores collapse into rankings with an epsilon tie: models whose F1 lands
# within epsilon of the previous one share a group. Ranking consistency
# asks how often the eval-set ranking survives on the new-test set.
from morphsplit import rank_models

scores = {"crf": 0.91, "longest_match": 0.90, "unigram_viterbi": 0.55}
ranking = rank_models(scores, collapse_epsilon=0.02)
print("groups:", " > ".join(" = ".join(g) for g in ranking.groups))

# Scoring a full cell trains every requested model on the cell's train
# slice and evaluates on both held-out sides. The runner does this for
# every cell; here we do one by hand through its public entry point.
from morphsplit import RunConfig, compute_cell
from morphsplit.corpus import write_corpus
import tempfile
from pathlib import Path

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.tsv"
    write_corpus(corpus, path)
    config = RunConfig(
        corpus_paths=(str(path),),
        output_dir=str(Path(tmp) / "out"),
        fractions=(Fraction(1, 5),),
        samples_per_fraction=1,
        residual_splits=1,
        models=("crf", "longest_match", "unigram_viterbi"),
        seeds_per_model=1,
        adversarial_budget=2000,
    )
    payload = compute_cell(corpus, grid[0], config)

result = payload["result"]
print("eval F1:", {m: round(v[2], 3) for m, v in result["boundary_eval"].items()})
print("new  F1:", {m: round(v[2], 3) for m, v in result["boundary_new"].items()})
print("eval ranking:", result["ranking_eval"]["groups"])
