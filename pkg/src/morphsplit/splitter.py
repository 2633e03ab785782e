"""Dataset partitions and experiment grids.

Three partition strategies over a corpus of word types:

* random: a seeded permutation cut at the ratio point;
* adversarial: hill climbing over single-pair swaps, maximizing the
  distance between the two sides' morpheme frequency distributions;
* heuristic: a threshold on per-word morpheme counts, which only succeeds
  when some threshold lands within tolerance of the target share.

The distance between two morpheme distributions is total variation,
``0.5 * sum(|p - q|)``, which for point masses under a 0/1 ground metric is
also the 1-Wasserstein distance. The adversarial search never evaluates it
in floating point: with integer token counts, comparing
``S / (2 * TA * TB)`` across candidates reduces to exact integer
cross-multiplication.

Grids expand a plan into cells: carve a new test set from the corpus, then
split the residual into train and eval several times, recording every split
as a manifest so each cell is reconstructible.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, SegmentedWord
from .errors import CapacityError, DomainError, SplitError, ValidationError

STRATEGIES = ("random", "adversarial", "heuristic")
STAGES = ("new_test_carving", "residual_split")

#: Strategies a grid may use for its residual train/eval splits.
GRID_STRATEGIES = ("random", "adversarial")

DEFAULT_ADVERSARIAL_BUDGET = 50_000


def derive_seed(master_seed: int, *parts) -> int:
    """Derive a stable 64-bit seed from a master seed and a context path.

    The same arguments always produce the same value, across processes and
    platforms, so any cell of a run can be recomputed in isolation.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(master_seed),) + tuple(str(p) for p in parts)).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def as_fraction(value) -> Fraction:
    """Convert ints, floats, strings, or Fractions to an exact Fraction.

    Floats go through their decimal string form, so ``0.1`` means one tenth
    rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def parse_ratio(text: str) -> Fraction:
    """Parse ``"9:1"`` into the Fraction 9/1."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ValidationError(f"ratio must look like '9:1', got {text!r}")
    try:
        num, den = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"ratio must use integers, got {text!r}") from None
    if num < 1 or den < 1:
        raise ValidationError(f"ratio sides must be positive, got {text!r}")
    return Fraction(num, den)


def format_ratio(ratio: Fraction) -> str:
    return f"{ratio.numerator}:{ratio.denominator}"


def share_b(ratio: Fraction) -> Fraction:
    """Fraction of items assigned to side b under an a:b ratio."""
    return Fraction(ratio.denominator, ratio.numerator + ratio.denominator)


@dataclass(frozen=True)
class MorphemeDistribution:
    """A token-frequency distribution over morphemes, support sorted."""

    support: tuple[str, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.support) != len(self.probabilities):
            raise ValidationError("support and probabilities differ in length")
        if not self.support:
            raise ValidationError("empty distribution")
        if list(self.support) != sorted(set(self.support)):
            raise ValidationError("support must be sorted and distinct")
        if any(p < 0 for p in self.probabilities):
            raise ValidationError("negative probability")
        if abs(sum(self.probabilities) - 1.0) > 1e-9:
            raise ValidationError("probabilities do not sum to 1")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.support, self.probabilities))


def morpheme_distribution(words: Corpus | Iterable[SegmentedWord]) -> MorphemeDistribution:
    """Token-frequency distribution of morphemes over ``words``.

    Every morpheme occurrence counts once; raises :class:`DomainError` when
    ``words`` is empty.
    """
    counts: Counter[str] = Counter()
    for w in words:
        counts.update(w.morphemes)
    if not counts:
        raise DomainError("morpheme_distribution needs at least one word")
    total = sum(counts.values())
    support = tuple(sorted(counts))
    probs = tuple(counts[m] / total for m in support)
    return MorphemeDistribution(support=support, probabilities=probs)


def distribution_distance(p: MorphemeDistribution, q: MorphemeDistribution) -> float:
    """Total variation distance between two morpheme distributions."""
    pd, qd = p.as_dict(), q.as_dict()
    keys = set(pd) | set(qd)
    return 0.5 * sum(abs(pd.get(k, 0.0) - qd.get(k, 0.0)) for k in keys)


def split_distance(
    corpus: Corpus, side_a: Sequence[int], side_b: Sequence[int]
) -> float:
    """Correctly rounded total variation distance between two sides.

    Morpheme counts are integers, so the exact rational distance is formed
    first and rounded to float once. Distances of different partitions of
    the same corpus therefore compare in the same order as their exact
    values, which keeps manifest distances from different strategies
    mutually comparable.
    """
    c_a = Counter(m for i in side_a for m in corpus[i].morphemes)
    c_b = Counter(m for i in side_b for m in corpus[i].morphemes)
    if not c_a or not c_b:
        raise DomainError("split_distance needs two non-empty sides")
    t_a, t_b = sum(c_a.values()), sum(c_b.values())
    num = sum(abs(c_a[m] * t_b - c_b[m] * t_a) for m in set(c_a) | set(c_b))
    return num / (2 * t_a * t_b)


@dataclass(frozen=True)
class SplitManifest:
    """A reproducible record of one two-way partition.

    ``indices_a`` and ``indices_b`` are sorted positions into the corpus the
    split was computed on. For random and adversarial splits the size law
    ``abs(len(indices_b) - round(share_b * N)) <= 1`` holds; heuristic splits
    answer to their share tolerance instead.
    """

    strategy: str
    stage: str
    seed: int
    indices_a: tuple[int, ...]
    indices_b: tuple[int, ...]
    target_ratio: Fraction
    achieved_distance: float
    budget_used: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices_a", tuple(int(i) for i in self.indices_a))
        object.__setattr__(self, "indices_b", tuple(int(i) for i in self.indices_b))
        object.__setattr__(self, "target_ratio", as_fraction(self.target_ratio))
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.stage not in STAGES:
            raise ValidationError(f"unknown stage {self.stage!r}")
        a, b = self.indices_a, self.indices_b
        if not a or not b:
            raise ValidationError("both sides of a split must be non-empty")
        for side in (a, b):
            if any(x >= y for x, y in zip(side, side[1:])):
                raise ValidationError("indices must be sorted ascending and distinct")
        n = len(a) + len(b)
        if set(a) | set(b) != set(range(n)) or set(a) & set(b):
            raise ValidationError("sides must partition range(N) exactly")
        if not 0.0 <= self.achieved_distance <= 1.0 + 1e-12:
            raise ValidationError(f"achieved_distance {self.achieved_distance} outside [0, 1]")
        if self.budget_used < 0:
            raise ValidationError("budget_used must be >= 0")
        if self.strategy in GRID_STRATEGIES:
            expect = round(n * share_b(self.target_ratio))
            if abs(len(b) - expect) > 1:
                raise ValidationError(
                    f"side b has {len(b)} items, expected about {expect} for "
                    f"ratio {format_ratio(self.target_ratio)} on {n}"
                )

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "stage": self.stage,
            "seed": self.seed,
            "indices_a": list(self.indices_a),
            "indices_b": list(self.indices_b),
            "target_ratio": format_ratio(self.target_ratio),
            "achieved_distance": float(self.achieved_distance),
            "budget_used": int(self.budget_used),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SplitManifest":
        return cls(
            strategy=data["strategy"],
            stage=data["stage"],
            seed=int(data["seed"]),
            indices_a=tuple(data["indices_a"]),
            indices_b=tuple(data["indices_b"]),
            target_ratio=parse_ratio(data["target_ratio"]),
            achieved_distance=float(data["achieved_distance"]),
            budget_used=int(data["budget_used"]),
        )


def save_manifest(manifest: SplitManifest, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_manifest(path: str | Path) -> SplitManifest:
    return SplitManifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _side_sizes(n: int, ratio: Fraction) -> int:
    """Number of items on side b, both sides guaranteed non-empty."""
    if n < 2:
        raise SplitError(f"cannot split a corpus of {n} word(s)")
    n_b = round(n * share_b(ratio))
    if n_b < 1 or n_b > n - 1:
        raise SplitError(
            f"ratio {format_ratio(ratio)} on {n} words leaves an empty side"
        )
    return n_b


def _seeded_sides(n: int, n_b: int, seed: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Deterministic random partition of range(n) into sides of n-n_b and n_b."""
    perm = np.random.default_rng(seed).permutation(n)
    b = tuple(int(i) for i in np.sort(perm[:n_b]))
    a = tuple(int(i) for i in np.sort(perm[n_b:]))
    return a, b


def random_split(
    corpus: Corpus,
    ratio: Fraction,
    seed: int,
    stage: str = "residual_split",
) -> SplitManifest:
    """Partition ``corpus`` uniformly at random at the given a:b ratio.

    Deterministic in ``seed``. Raises :class:`SplitError` if either side
    would be empty.
    """
    ratio = as_fraction(ratio)
    n = len(corpus)
    n_b = _side_sizes(n, ratio)
    a, b = _seeded_sides(n, n_b, seed)
    return SplitManifest(
        strategy="random",
        stage=stage,
        seed=seed,
        indices_a=a,
        indices_b=b,
        target_ratio=ratio,
        achieved_distance=split_distance(corpus, a, b),
        budget_used=0,
    )


class _SwapState:
    """Integer bookkeeping for the adversarial hill climb.

    The unnormalized score is ``S = sum_m |cA[m]*TB - cB[m]*TA|`` where cA,
    cB are per-side morpheme token counts and TA, TB the side totals; the
    total variation distance equals ``S / (2*TA*TB)``. All comparisons
    between candidate swaps cross-multiply these integers exactly.
    """

    def __init__(self, corpus: Corpus, side_a: Sequence[int], side_b: Sequence[int]):
        vocab = sorted({m for w in corpus for m in w.morphemes})
        self.vocab_size = len(vocab)
        index = {m: i for i, m in enumerate(vocab)}
        self.ids: list[np.ndarray] = []
        self.cnts: list[np.ndarray] = []
        self.tots: list[int] = []
        for w in corpus:
            c = Counter(w.morphemes)
            mids = np.array(sorted(index[m] for m in c), dtype=np.int64)
            self.ids.append(mids)
            self.cnts.append(np.array([c[vocab[i]] for i in mids], dtype=np.int64))
            self.tots.append(len(w.morphemes))
        total = sum(self.tots)
        if total * total * max(self.vocab_size, 1) >= 2**62:
            raise DomainError(
                "corpus too large for exact integer split scoring "
                f"({total} tokens, {self.vocab_size} morpheme types)"
            )
        self.c_a = np.zeros(self.vocab_size, dtype=np.int64)
        self.c_b = np.zeros(self.vocab_size, dtype=np.int64)
        self.t_a = 0
        self.t_b = 0
        for i in side_a:
            self.c_a[self.ids[i]] += self.cnts[i]
            self.t_a += self.tots[i]
        for i in side_b:
            self.c_b[self.ids[i]] += self.cnts[i]
            self.t_b += self.tots[i]
        self.score = int(np.abs(self.c_a * self.t_b - self.c_b * self.t_a).sum())

    def is_maximal(self) -> bool:
        return self.score == 2 * self.t_a * self.t_b

    def _affected(self, u: int, v: int):
        merged = np.concatenate([self.ids[u], self.ids[v]])
        uniq, inverse = np.unique(merged, return_inverse=True)
        delta = np.zeros(len(uniq), dtype=np.int64)
        np.subtract.at(delta, inverse[: len(self.ids[u])], self.cnts[u])
        np.add.at(delta, inverse[len(self.ids[u]):], self.cnts[v])
        return uniq, delta

    def evaluate_swap(self, u: int, v: int) -> tuple[int, int, int]:
        """Score after moving word u from side a and word v from side b."""
        t_a2 = self.t_a - self.tots[u] + self.tots[v]
        t_b2 = self.t_b + self.tots[u] - self.tots[v]
        uniq, delta = self._affected(u, v)
        new_a = self.c_a[uniq] + delta
        new_b = self.c_b[uniq] - delta
        if t_a2 == self.t_a:
            old = np.abs(self.c_a[uniq] * self.t_b - self.c_b[uniq] * self.t_a)
            new = np.abs(new_a * t_b2 - new_b * t_a2)
            score = self.score + int(new.sum()) - int(old.sum())
        else:
            vec = self.c_a * t_b2 - self.c_b * t_a2
            vec[uniq] = new_a * t_b2 - new_b * t_a2
            score = int(np.abs(vec).sum())
        return score, t_a2, t_b2

    def apply_swap(self, u: int, v: int, score: int, t_a2: int, t_b2: int) -> None:
        uniq, delta = self._affected(u, v)
        self.c_a[uniq] += delta
        self.c_b[uniq] -= delta
        self.t_a, self.t_b = t_a2, t_b2
        self.score = score


def _climb(
    state: _SwapState,
    side_a: list[int],
    side_b: list[int],
    budget: int | None,
    used: int,
) -> int:
    """First-improvement sweeps over single-pair swaps until a local optimum.

    Mutates ``state`` and the side lists in place; returns the updated
    evaluation count. Stops early when the distance reaches 1 or ``budget``
    evaluations have been spent overall.
    """
    improved = True
    while improved and not state.is_maximal():
        if budget is not None and used >= budget:
            return used
        improved = False
        for ia in range(len(side_a)):
            for ib in range(len(side_b)):
                if budget is not None and used >= budget:
                    return used
                used += 1
                u, v = side_a[ia], side_b[ib]
                # Identical multisets can never strictly improve the score.
                if state.tots[u] == state.tots[v] and np.array_equal(
                    state.ids[u], state.ids[v]
                ) and np.array_equal(state.cnts[u], state.cnts[v]):
                    continue
                score, t_a2, t_b2 = state.evaluate_swap(u, v)
                if score * (state.t_a * state.t_b) > state.score * (t_a2 * t_b2):
                    state.apply_swap(u, v, score, t_a2, t_b2)
                    side_a[ia], side_b[ib] = v, u
                    improved = True
                    if state.is_maximal():
                        return used
    return used


ADVERSARIAL_STARTS = 8


def adversarial_split(
    corpus: Corpus,
    ratio: Fraction,
    seed: int,
    budget: int | None = DEFAULT_ADVERSARIAL_BUDGET,
    stage: str = "residual_split",
) -> SplitManifest:
    """Multi-start greedy single-pair-swap search maximizing distance.

    Runs up to ``ADVERSARIAL_STARTS`` first-improvement hill climbs and
    keeps the best terminal partition, ties going to the earliest start.
    The first climb starts from the seed-matched random split; the rest
    restart from partitions drawn with seeds derived from ``seed``, which
    lets the search escape local optima that trap a single climb. Each
    climb sweeps candidate swaps in deterministic order, accepting the
    first strict improvement, until a full sweep yields none, the distance
    reaches 1, or the shared evaluation ``budget`` runs out. Swaps and
    terminal partitions are compared with exact integer arithmetic and
    every manifest distance is the correctly rounded exact value, so the
    result never scores below the random split with the same seed, not
    even in the last bit.

    Parameters
    ----------
    budget : int or None
        Maximum number of swap evaluations across all climbs; None means
        unlimited.
    """
    ratio = as_fraction(ratio)
    if budget is not None and budget < 0:
        raise DomainError("budget must be >= 0 or None")
    n = len(corpus)
    n_b = _side_sizes(n, ratio)
    used = 0
    best: tuple[int, int, int, tuple[int, ...], tuple[int, ...]] | None = None

    for start in range(ADVERSARIAL_STARTS):
        start_seed = seed if start == 0 else derive_seed(seed, "restart", start)
        a_list, b_list = (list(s) for s in _seeded_sides(n, n_b, start_seed))
        state = _SwapState(corpus, a_list, b_list)
        used = _climb(state, a_list, b_list, budget, used)
        candidate = (
            state.score,
            state.t_a,
            state.t_b,
            tuple(sorted(a_list)),
            tuple(sorted(b_list)),
        )
        # cross-multiplied comparison of score/(2*t_a*t_b) in exact integers
        if best is None or candidate[0] * (best[1] * best[2]) > best[0] * (
            candidate[1] * candidate[2]
        ):
            best = candidate
        if state.is_maximal() or (budget is not None and used >= budget):
            break

    _, _, _, a, b = best
    return SplitManifest(
        strategy="adversarial",
        stage=stage,
        seed=seed,
        indices_a=a,
        indices_b=b,
        target_ratio=ratio,
        achieved_distance=split_distance(corpus, a, b),
        budget_used=used,
    )


def heuristic_split(
    corpus: Corpus,
    ratio: Fraction,
    tolerance=Fraction(1, 50),
    stage: str = "residual_split",
) -> SplitManifest | None:
    """Split on a per-word morpheme-count threshold, if one fits.

    Words with at least ``t`` morphemes go to side b. The split succeeds
    when some threshold puts side b's share within ``tolerance`` of the
    target share; among successes the threshold with the smallest absolute
    deviation wins, ties going to the smallest threshold. Returns None when
    no threshold fits, which is a modeled outcome rather than an error.
    """
    ratio = as_fraction(ratio)
    tol = as_fraction(tolerance)
    if tol < 0:
        raise DomainError("tolerance must be >= 0")
    n = len(corpus)
    if n < 2:
        raise SplitError(f"cannot split a corpus of {n} word(s)")
    target = share_b(ratio)
    counts = [len(w.morphemes) for w in corpus]
    best = None
    for t in sorted(set(counts)):
        b = tuple(i for i, c in enumerate(counts) if c >= t)
        if not b or len(b) == n:
            continue
        deviation = abs(Fraction(len(b), n) - target)
        if deviation <= tol and (best is None or deviation < best[0]):
            best = (deviation, t, b)
    if best is None:
        return None
    _, _, b = best
    chosen = set(b)
    a = tuple(i for i in range(n) if i not in chosen)
    return SplitManifest(
        strategy="heuristic",
        stage=stage,
        seed=0,
        indices_a=a,
        indices_b=b,
        target_ratio=ratio,
        achieved_distance=split_distance(corpus, a, b),
        budget_used=0,
    )


_DEFAULT_FRACTIONS = tuple(Fraction(k, 10) for k in range(1, 6))


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid layout: which fractions, how many samples and residual splits."""

    new_test_fractions: tuple[Fraction, ...] = _DEFAULT_FRACTIONS
    samples_per_fraction: int = 10
    residual_splits: int = 3
    residual_ratio: Fraction = Fraction(9, 1)
    new_test_generation: str = "random"
    master_seed: int = 0
    adversarial_budget: int | None = DEFAULT_ADVERSARIAL_BUDGET

    def __post_init__(self) -> None:
        fracs = tuple(as_fraction(f) for f in self.new_test_fractions)
        object.__setattr__(self, "new_test_fractions", fracs)
        object.__setattr__(self, "residual_ratio", as_fraction(self.residual_ratio))
        if not fracs:
            raise ValidationError("need at least one new-test fraction")
        if len(set(fracs)) != len(fracs):
            raise ValidationError("new-test fractions must be distinct")
        if any(not 0 < f < 1 for f in fracs):
            raise ValidationError("new-test fractions must lie strictly between 0 and 1")
        if self.samples_per_fraction < 1 or self.residual_splits < 1:
            raise ValidationError("samples_per_fraction and residual_splits must be >= 1")
        if self.new_test_generation not in GRID_STRATEGIES:
            raise ValidationError(
                f"new_test_generation must be one of {GRID_STRATEGIES}, "
                f"got {self.new_test_generation!r}"
            )

    def cells_per_strategy(self) -> int:
        return len(self.new_test_fractions) * self.samples_per_fraction * self.residual_splits


@dataclass(frozen=True)
class GridCell:
    """One experiment cell: disjoint train/eval/new-test index sets.

    All indices refer to the original corpus. The two manifests are the
    carve that produced the new test set (its indices are original-corpus
    positions) and the residual train/eval split (its indices are positions
    into the sorted residual, resolvable through the carve manifest).
    """

    cell_id: str
    fraction: Fraction
    sample_index: int
    split_index: int
    new_test_strategy: str
    residual_strategy: str
    train_indices: tuple[int, ...]
    eval_indices: tuple[int, ...]
    new_test_indices: tuple[int, ...]
    carve_manifest: SplitManifest
    residual_manifest: SplitManifest

    def __post_init__(self) -> None:
        for name in ("train_indices", "eval_indices", "new_test_indices"):
            object.__setattr__(self, name, tuple(int(i) for i in getattr(self, name)))
        object.__setattr__(self, "fraction", as_fraction(self.fraction))
        tr, ev, nt = set(self.train_indices), set(self.eval_indices), set(self.new_test_indices)
        if not tr or not ev or not nt:
            raise ValidationError(f"cell {self.cell_id}: empty member set")
        if tr & ev or tr & nt or ev & nt:
            raise ValidationError(f"cell {self.cell_id}: member sets overlap")
        n = len(tr) + len(ev) + len(nt)
        if tr | ev | nt != set(range(n)):
            raise ValidationError(f"cell {self.cell_id}: member sets do not cover the corpus")

    def to_dict(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "fraction": str(self.fraction),
            "sample_index": self.sample_index,
            "split_index": self.split_index,
            "new_test_strategy": self.new_test_strategy,
            "residual_strategy": self.residual_strategy,
            "train_indices": list(self.train_indices),
            "eval_indices": list(self.eval_indices),
            "new_test_indices": list(self.new_test_indices),
            "carve_manifest": self.carve_manifest.to_dict(),
            "residual_manifest": self.residual_manifest.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridCell":
        return cls(
            cell_id=data["cell_id"],
            fraction=Fraction(data["fraction"]),
            sample_index=int(data["sample_index"]),
            split_index=int(data["split_index"]),
            new_test_strategy=data["new_test_strategy"],
            residual_strategy=data["residual_strategy"],
            train_indices=tuple(data["train_indices"]),
            eval_indices=tuple(data["eval_indices"]),
            new_test_indices=tuple(data["new_test_indices"]),
            carve_manifest=SplitManifest.from_dict(data["carve_manifest"]),
            residual_manifest=SplitManifest.from_dict(data["residual_manifest"]),
        )


def _split_by(strategy: str, corpus, ratio, seed, budget, stage) -> SplitManifest:
    if strategy == "random":
        return random_split(corpus, ratio, seed, stage=stage)
    return adversarial_split(corpus, ratio, seed, budget=budget, stage=stage)


def build_grid(
    corpus: Corpus, plan: ExperimentPlan, residual_strategy: str
) -> tuple[GridCell, ...]:
    """Expand ``plan`` into cells for one residual split strategy.

    For every (fraction, sample) pair a new test set is carved with the
    plan's generation strategy, then the residual is split
    ``plan.residual_splits`` times with ``residual_strategy``. All seeds
    derive from the plan's master seed and the cell coordinates, so two
    calls with equal arguments produce byte-identical cells. Raises
    :class:`CapacityError` if any cell would have an empty member set.
    """
    if residual_strategy not in GRID_STRATEGIES:
        raise DomainError(
            f"residual strategy must be one of {GRID_STRATEGIES}, got {residual_strategy!r}"
        )
    n = len(corpus)
    for frac in plan.new_test_fractions:
        n_new = round(n * frac)
        n_res = n - n_new
        n_eval = round(n_res * share_b(plan.residual_ratio)) if n_res > 0 else 0
        if n_new < 1 or n_res - n_eval < 1 or n_eval < 1:
            raise CapacityError(
                f"fraction {frac} on {n} words would leave an empty train, "
                "eval, or new-test set"
            )
    cells = []
    for fi, frac in enumerate(plan.new_test_fractions):
        carve_ratio = (Fraction(1) - frac) / frac
        pct = f"{float(frac) * 100:.10g}"
        for s in range(plan.samples_per_fraction):
            carve_seed = derive_seed(
                plan.master_seed, "carve", plan.new_test_generation, str(frac), s
            )
            carve = _split_by(
                plan.new_test_generation, corpus, carve_ratio, carve_seed,
                plan.adversarial_budget, "new_test_carving",
            )
            residual = carve.indices_a
            residual_corpus = corpus.subset(residual)
            for r in range(plan.residual_splits):
                seed = derive_seed(
                    plan.master_seed, "residual", residual_strategy, str(frac), s, r
                )
                m = _split_by(
                    residual_strategy, residual_corpus, plan.residual_ratio, seed,
                    plan.adversarial_budget, "residual_split",
                )
                train = tuple(sorted(residual[i] for i in m.indices_a))
                eval_ = tuple(sorted(residual[i] for i in m.indices_b))
                cell_id = (
                    f"nt{pct}pct-{plan.new_test_generation}-s{s:02d}-"
                    f"{residual_strategy}-r{r}"
                )
                cells.append(
                    GridCell(
                        cell_id=cell_id,
                        fraction=frac,
                        sample_index=s,
                        split_index=r,
                        new_test_strategy=plan.new_test_generation,
                        residual_strategy=residual_strategy,
                        train_indices=train,
                        eval_indices=eval_,
                        new_test_indices=carve.indices_b,
                        carve_manifest=carve,
                        residual_manifest=m,
                    )
                )
    return tuple(cells)
