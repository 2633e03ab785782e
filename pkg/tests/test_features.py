"""Positional n-gram feature extraction."""

import pytest

from morphsplit.errors import ContractError, ValidationError
from morphsplit.models import FeatureTemplate, extract_features


class TestTemplate:
    def test_defaults(self):
        t = FeatureTemplate()
        assert t.max_ngram == 3
        assert t.window == 2
        assert t.include_position_flags

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValidationError):
            FeatureTemplate(max_ngram=0)
        with pytest.raises(ValidationError):
            FeatureTemplate(window=-1)

    def test_dict_round_trip(self):
        t = FeatureTemplate(max_ngram=3, window=1)
        assert FeatureTemplate.from_dict(t.to_dict()) == t


class TestExtraction:
    def test_two_char_word_start(self):
        feats = extract_features("ab", 0, FeatureTemplate(max_ngram=1, window=1))
        assert feats == {"ng+0:a", "ng+1:b", "BOS"}

    def test_two_char_word_end(self):
        feats = extract_features("ab", 1, FeatureTemplate(max_ngram=1, window=1))
        assert feats == {"ng-1:a", "ng+0:b", "EOS"}

    def test_interior_position_has_no_flags(self):
        feats = extract_features("abc", 1, FeatureTemplate(max_ngram=1, window=1))
        assert feats == {"ng-1:a", "ng+0:b", "ng+1:c"}

    def test_bigrams_within_window(self):
        feats = extract_features("abcd", 1, FeatureTemplate(max_ngram=2, window=1))
        assert "ng-1:ab" in feats
        assert "ng+0:bc" in feats
        assert "ng+1:cd" not in feats

    def test_window_zero(self):
        feats = extract_features("abc", 1, FeatureTemplate(max_ngram=2, window=0))
        assert feats == {"ng+0:b"}

    def test_position_out_of_range(self):
        with pytest.raises(ContractError):
            extract_features("ab", 2, FeatureTemplate())
        with pytest.raises(ContractError):
            extract_features("ab", -1, FeatureTemplate())

    def test_deterministic(self):
        a = extract_features("avocados", 3, FeatureTemplate())
        b = extract_features("avocados", 3, FeatureTemplate())
        assert a == b

    def test_grapheme_positions(self):
        """Window arithmetic counts grapheme clusters, not code points."""
        word = "móza"
        feats = extract_features(word, 1, FeatureTemplate(max_ngram=1, window=1))
        assert feats == {"ng-1:m", "ng+0:ó", "ng+1:z"}

    def test_brute_force_enumeration(self):
        """Independent re-derivation of the default-template feature set."""
        word = "avocados"
        pos = 3
        template = FeatureTemplate()
        expected = set()
        n = len(word)
        lo = max(0, pos - template.window)
        hi = min(n - 1, pos + template.window)
        for size in range(1, template.max_ngram + 1):
            for start in range(lo, hi + 1):
                if start + size - 1 > hi:
                    continue
                expected.add(f"ng{start - pos:+d}:{word[start:start + size]}")
        if pos == 0:
            expected.add("BOS")
        if pos == n - 1:
            expected.add("EOS")
        assert extract_features(word, pos, template) == expected
