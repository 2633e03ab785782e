"""
Training segmenters and scoring their predictions
=================================================

"""

# Four segmenter families ship built in: a linear-chain CRF over the
# six-label code, a logistic boundary classifier scoring each gap
# independently, a unigram lexicon decoded by dynamic programming, and a
# greedy longest-match baseline.
from fractions import Fraction

from morphsplit import (
    BUILTIN_SEGMENTERS,
    FeatureTemplate,
    SegmenterId,
    SyntheticSpec,
    TrainConfig,
    corpus_f1,
    generate_synthetic_corpus,
    random_split,
    segment_corpus,
    train_segmenter,
)

print("built-ins:", ", ".join(BUILTIN_SEGMENTERS))

corpus = generate_synthetic_corpus(SyntheticSpec(num_words=120, stems=15, suffixes=6, seed=5))
split = random_split(corpus, Fraction(4, 1), seed=0)
train = corpus.subset(split.indices_a)
held_out = corpus.subset(split.indices_b)

# Character n-gram features around each position; the same template drives
# both feature-based models.
template = FeatureTemplate(max_ngram=2, window=1)
config = TrainConfig(optimizer="lbfgs", max_iterations=100, seed=0)

models = {}
for name in ("crf", "unigram_viterbi", "longest_match"):
    models[name] = train_segmenter(
        SegmenterId.parse(name), train, template=template, config=config
    )

# segment_corpus takes bare surfaces and predicts where the morpheme
# boundaries fall.
surfaces = [w.surface for w in held_out]
predictions = {n: segment_corpus(m, surfaces) for n, m in models.items()}
example = held_out[0]
print("gold:  ", example.surface, "=", "+".join(example.morphemes))
for name, pred in predictions.items():
    print(f"{name:16s}", "+".join(pred[0].morphemes))

# Boundary F1 scores individual split points; morpheme F1 requires whole
# morpheme spans to match and is therefore stricter.
for name, pred in predictions.items():
    b = corpus_f1(held_out, pred, variant="boundary")
    m = corpus_f1(held_out, pred, variant="morpheme")
    print(f"{name:16s} boundary={b.f1:.3f} morpheme={m.f1:.3f}")
