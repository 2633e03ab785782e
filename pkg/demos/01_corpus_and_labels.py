"""
Corpora, segmentations, and the six-label boundary code
=======================================================

"""

# A corpus is a sequence of word types, each carrying its surface form and
# its gold segmentation into morphemes. The synthetic generator composes
# words from a stem inventory and a suffix inventory, so every generated
# word has a known segmentation.
from morphsplit import SyntheticSpec, generate_synthetic_corpus, corpus_stats

spec = SyntheticSpec(num_words=40, stems=12, suffixes=5, seed=3)
corpus = generate_synthetic_corpus(spec)
for word in list(corpus)[:5]:
    print(word.surface, "=", "+".join(word.morphemes))

# corpus_stats summarizes the shape of the data: how many word types there
# are, how long morphemes run, and how morphologically complex words are on
# average. These quantities later become regression controls.
stats = corpus_stats(corpus)
print("types:", stats.word_type_count)
print("morphemes per word:", round(stats.avg_morphemes_per_word, 3))
print("mean morpheme length:", round(stats.avg_morpheme_length, 3))

# Sequence models do not predict morphemes directly; they predict one label
# per grapheme plus two virtual bookends. S marks a single-grapheme
# morpheme, B/M/E mark the beginning, middle, and end of longer ones.
from morphsplit import Label, encode_labels, decode_labels

word = corpus[0]
labels = encode_labels(word)
print("labels:", [lab.name for lab in labels.labels])

# Decoding inverts the encoding exactly.
assert decode_labels(word.surface, labels) == word

# The decoder is total: any label sequence of the right length comes back
# as a valid segmentation. A malformed sequence (here: all M, which never
# opens a morpheme) is repaired instead of rejected, so downstream model
# output never needs special-casing.
n = len(word.surface)
all_m = tuple([Label.START] + [Label.M] * n + [Label.END])
repaired = decode_labels(word.surface, all_m)
print("repaired:", "+".join(repaired.morphemes))
assert "".join(repaired.morphemes) == word.surface
