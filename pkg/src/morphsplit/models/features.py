"""Position-indexed n-gram features over grapheme windows."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import graphemes
from ..errors import ContractError, ValidationError


@dataclass(frozen=True)
class FeatureTemplate:
    """Which n-grams around a position become features.

    ``window`` is a radius in graphemes; an n-gram fires only when it lies
    fully inside both the window and the word. ``include_position_flags``
    adds BOS/EOS markers at the word edges.
    """

    max_ngram: int = 3
    window: int = 2
    include_position_flags: bool = True

    def __post_init__(self) -> None:
        if self.max_ngram < 1:
            raise ValidationError("max_ngram must be >= 1")
        if self.window < 0:
            raise ValidationError("window must be >= 0")

    def to_dict(self) -> dict:
        return {
            "max_ngram": self.max_ngram,
            "window": self.window,
            "include_position_flags": self.include_position_flags,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureTemplate":
        return cls(
            max_ngram=int(data["max_ngram"]),
            window=int(data["window"]),
            include_position_flags=bool(data["include_position_flags"]),
        )


def extract_features(
    surface: str, position: int, template: FeatureTemplate = FeatureTemplate()
) -> frozenset[str]:
    """Features active at ``position`` (grapheme index) of ``surface``.

    Each n-gram is tagged with its starting offset relative to the position,
    e.g. ``ng-1:ab`` for the bigram starting one grapheme to the left.
    Raises :class:`ContractError` when the position is out of range.
    """
    g = graphemes(surface)
    n_g = len(g)
    if not 0 <= position < n_g:
        raise ContractError(
            f"position {position} out of range for {surface!r} ({n_g} graphemes)"
        )
    lo = max(0, position - template.window)
    hi = min(n_g, position + template.window + 1)
    feats = set()
    for n in range(1, template.max_ngram + 1):
        for s in range(lo, hi - n + 1):
            feats.add(f"ng{s - position:+d}:{''.join(g[s:s + n])}")
    if template.include_position_flags:
        if position == 0:
            feats.add("BOS")
        if position == n_g - 1:
            feats.add("EOS")
    return frozenset(feats)
