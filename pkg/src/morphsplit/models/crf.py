"""First-order linear-chain CRF over the six-label space.

Interior positions range over all six labels; the START and END bookends
are clamped, entering only through the transition matrix (START row, END
column). With all-zero weights the log-partition of a length-L word is
therefore L*ln(6). Scores decompose as

    score(y) = sum_i sum_{f in feats(i)} W_e[f, y_i]
             + T[START, y_1] + sum_i T[y_i, y_{i+1}] + T[y_L, END]

and training minimizes the mean negative log-likelihood plus an L2 term,
with gradients from forward-backward marginals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..corpus import (
    Corpus,
    Label,
    LabelSequence,
    SegmentedWord,
    decode_labels,
    encode_labels,
    graphemes,
)
from ..errors import DomainError, ValidationError
from .features import FeatureTemplate, extract_features
from .optim import OptimResult, TrainConfig, minimize

N_LABELS = 6
START_ID = int(Label.START)
END_ID = int(Label.END)


@dataclass
class CrfModel:
    """A trained CRF: feature index, emission and transition weights."""

    label_set: tuple[Label, ...]
    feature_index: dict[str, int]
    weights: np.ndarray
    template: FeatureTemplate
    l2_lambda: float
    history: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        n_f = len(self.feature_index)
        want = n_f * N_LABELS + N_LABELS * N_LABELS
        if self.weights.shape != (want,):
            raise ValidationError(
                f"weight vector must have length {want} "
                f"({n_f} features), got {self.weights.shape}"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValidationError("weights must be finite")
        if tuple(self.label_set) != tuple(Label):
            raise ValidationError("label_set must be the six standard labels")

    @property
    def emission(self) -> np.ndarray:
        """View of shape (|features|, 6)."""
        n_f = len(self.feature_index)
        return self.weights[: n_f * N_LABELS].reshape(n_f, N_LABELS)

    @property
    def transition(self) -> np.ndarray:
        """View of shape (6, 6), indexed [from, to]."""
        n_f = len(self.feature_index)
        return self.weights[n_f * N_LABELS:].reshape(N_LABELS, N_LABELS)

    def feature_ids(self, surface: str) -> list[np.ndarray]:
        """Known-feature ids per position; unseen features are dropped."""
        out = []
        for pos in range(len(graphemes(surface))):
            feats = extract_features(surface, pos, self.template)
            ids = sorted(
                self.feature_index[f] for f in feats if f in self.feature_index
            )
            out.append(np.asarray(ids, dtype=np.int64))
        return out

    def emissions(self, surface: str) -> np.ndarray:
        """Per-position label scores, shape (L, 6)."""
        fids = self.feature_ids(surface)
        W = self.emission
        E = np.zeros((len(fids), N_LABELS))
        for i, ids in enumerate(fids):
            if len(ids):
                E[i] = W[ids].sum(axis=0)
        return E

    def segment(self, surface: str) -> SegmentedWord:
        ids, _ = viterbi_raw(self, surface)
        return decode_labels(surface, (Label.START,) + ids + (Label.END,))

    def to_dict(self) -> dict:
        order = sorted(self.feature_index, key=self.feature_index.__getitem__)
        return {
            "kind": "crf",
            "template": self.template.to_dict(),
            "l2_lambda": float(self.l2_lambda),
            "features": order,
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CrfModel":
        features = list(data["features"])
        return cls(
            label_set=tuple(Label),
            feature_index={f: i for i, f in enumerate(features)},
            weights=np.asarray(data["weights"], dtype=float),
            template=FeatureTemplate.from_dict(data["template"]),
            l2_lambda=float(data["l2_lambda"]),
        )


class _Group:
    """Words of one length, feature occurrences flattened for scatter ops."""

    __slots__ = ("length", "n", "f_flat", "row_flat", "gold")

    def __init__(self, length, n, f_flat, row_flat, gold):
        self.length = length
        self.n = n
        self.f_flat = f_flat
        self.row_flat = row_flat
        self.gold = gold


def _build_groups(words, feature_index, template, with_gold=True):
    by_len: dict[int, list] = {}
    for w in words:
        fids = []
        for pos in range(len(graphemes(w.surface))):
            feats = extract_features(w.surface, pos, template)
            fids.append(sorted(feature_index[f] for f in feats if f in feature_index))
        gold = (
            [int(lab) for lab in encode_labels(w).interior()] if with_gold else None
        )
        by_len.setdefault(len(fids), []).append((fids, gold))
    groups = []
    for length in sorted(by_len):
        items = by_len[length]
        n = len(items)
        f_parts, row_parts = [], []
        for k, (fids, _) in enumerate(items):
            for i, ids in enumerate(fids):
                f_parts.extend(ids)
                row_parts.extend([k * length + i] * len(ids))
        gold = (
            np.asarray([g for _, g in items], dtype=np.int64) if with_gold else None
        )
        groups.append(
            _Group(
                length=length,
                n=n,
                f_flat=np.asarray(f_parts, dtype=np.int64),
                row_flat=np.asarray(row_parts, dtype=np.int64),
                gold=gold,
            )
        )
    return groups


def _group_emissions(group: _Group, W_e: np.ndarray) -> np.ndarray:
    E_flat = np.zeros((group.n * group.length, N_LABELS))
    if len(group.f_flat):
        np.add.at(E_flat, group.row_flat, W_e[group.f_flat])
    return E_flat.reshape(group.n, group.length, N_LABELS)


def _objective_and_grad(weights, groups, n_words, n_features, l2):
    W_e = weights[: n_features * N_LABELS].reshape(n_features, N_LABELS)
    T = weights[n_features * N_LABELS:].reshape(N_LABELS, N_LABELS)
    raw_grad = np.zeros_like(weights)
    gW = raw_grad[: n_features * N_LABELS].reshape(n_features, N_LABELS)
    gT = raw_grad[n_features * N_LABELS:].reshape(N_LABELS, N_LABELS)
    total_nll = 0.0

    for grp in groups:
        L, n = grp.length, grp.n
        E = _group_emissions(grp, W_e)
        alphas = np.empty((L, n, N_LABELS))
        a = T[START_ID][None, :] + E[:, 0]
        alphas[0] = a
        for i in range(1, L):
            a = logsumexp(a[:, :, None] + T[None, :, :], axis=1) + E[:, i]
            alphas[i] = a
        log_z = logsumexp(a + T[:, END_ID][None, :], axis=1)

        betas = np.empty((L, n, N_LABELS))
        b = np.broadcast_to(T[:, END_ID], (n, N_LABELS)).copy()
        betas[L - 1] = b
        for i in range(L - 2, -1, -1):
            b = logsumexp(T[None, :, :] + (E[:, i + 1] + b)[:, None, :], axis=2)
            betas[i] = b

        marg = np.exp(alphas + betas - log_z[None, :, None])

        rows = np.arange(n)
        gold_em = E[rows[:, None], np.arange(L)[None, :], grp.gold].sum(axis=1)
        gold_tr = T[START_ID, grp.gold[:, 0]] + T[grp.gold[:, -1], END_ID]
        if L > 1:
            gold_tr = gold_tr + T[grp.gold[:, :-1], grp.gold[:, 1:]].sum(axis=1)
        total_nll += float(log_z.sum() - gold_em.sum() - gold_tr.sum())

        # expected minus observed emissions, scattered onto feature rows
        diff = marg.transpose(1, 0, 2).reshape(n * L, N_LABELS).copy()
        np.subtract.at(diff, (np.arange(n * L), grp.gold.ravel()), 1.0)
        if len(grp.f_flat):
            np.add.at(gW, grp.f_flat, diff[grp.row_flat])

        gT[START_ID] += marg[0].sum(axis=0)
        gT[:, END_ID] += marg[L - 1].sum(axis=0)
        for i in range(L - 1):
            xi = np.exp(
                alphas[i][:, :, None]
                + T[None, :, :]
                + (E[:, i + 1] + betas[i + 1])[:, None, :]
                - log_z[:, None, None]
            )
            gT += xi.sum(axis=0)
        np.subtract.at(gT, (np.full(n, START_ID), grp.gold[:, 0]), 1.0)
        np.subtract.at(gT, (grp.gold[:, -1], np.full(n, END_ID)), 1.0)
        if L > 1:
            np.subtract.at(gT, (grp.gold[:, :-1].ravel(), grp.gold[:, 1:].ravel()), 1.0)

    objective = total_nll / n_words + 0.5 * l2 * float(weights @ weights)
    grad = raw_grad / n_words + l2 * weights
    return objective, grad


def crf_log_partition(model: CrfModel, surface: str) -> float:
    """Log of the sum over all 6^L interior label sequences of exp(score)."""
    E = model.emissions(surface)
    if len(E) == 0:
        raise DomainError("surface must be non-empty")
    T = model.transition
    a = T[START_ID] + E[0]
    for i in range(1, len(E)):
        a = logsumexp(a[:, None] + T, axis=0) + E[i]
    return float(logsumexp(a + T[:, END_ID]))


def crf_gradient(model: CrfModel, batch) -> tuple[float, np.ndarray]:
    """Mean NLL + (l2/2)*||w||^2 over ``batch`` and its full gradient.

    Expectations come from forward-backward marginals; duplicating the batch
    changes neither value (mean formulation). Features of batch words that
    are missing from the model's index contribute nothing.
    """
    words = list(batch)
    if not words:
        raise DomainError("crf_gradient needs a non-empty batch")
    groups = _build_groups(words, model.feature_index, model.template)
    return _objective_and_grad(
        model.weights, groups, len(words), len(model.feature_index), model.l2_lambda
    )


def viterbi_raw(model: CrfModel, surface: str) -> tuple[tuple[Label, ...], float]:
    """Argmax interior label sequence and its score, before repair.

    Ties break toward the lower label index at every argmax, so the
    all-zero-weight model returns the lexicographically first sequence.
    """
    E = model.emissions(surface)
    length = len(E)
    if length == 0:
        raise DomainError("surface must be non-empty")
    T = model.transition
    v = T[START_ID] + E[0]
    back = np.empty((length, N_LABELS), dtype=np.int64)
    for i in range(1, length):
        scores = v[:, None] + T
        back[i] = np.argmax(scores, axis=0)
        v = scores[back[i], np.arange(N_LABELS)] + E[i]
    v = v + T[:, END_ID]
    last = int(np.argmax(v))
    score = float(v[last])
    path = [last]
    for i in range(length - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    path.reverse()
    return tuple(Label(p) for p in path), score


def viterbi_decode(model: CrfModel, surface: str) -> LabelSequence:
    """Argmax labels, repaired into a valid LabelSequence."""
    ids, _ = viterbi_raw(model, surface)
    word = decode_labels(surface, (Label.START,) + ids + (Label.END,))
    return encode_labels(word)


def train_crf(
    corpus: Corpus,
    template: FeatureTemplate | None = None,
    config: TrainConfig | None = None,
) -> CrfModel:
    """Fit CRF weights on ``corpus`` by penalized maximum likelihood.

    Deterministic for fixed inputs: the feature index follows corpus order,
    optimization starts at zero, and both optimizers are deterministic. The
    accepted objective values are kept on the model's ``history``.
    """
    template = template if template is not None else FeatureTemplate()
    config = config if config is not None else TrainConfig()
    words = list(corpus)
    if not words:
        raise DomainError("train_crf needs a non-empty corpus")
    feature_index: dict[str, int] = {}
    for w in words:
        for pos in range(len(graphemes(w.surface))):
            for f in sorted(extract_features(w.surface, pos, template)):
                if f not in feature_index:
                    feature_index[f] = len(feature_index)
    groups = _build_groups(words, feature_index, template)
    n_features = len(feature_index)
    x0 = np.zeros(n_features * N_LABELS + N_LABELS * N_LABELS)

    def fun(w):
        return _objective_and_grad(w, groups, len(words), n_features, config.l2_lambda)

    result: OptimResult = minimize(fun, x0, config, context="crf training")
    return CrfModel(
        label_set=tuple(Label),
        feature_index=feature_index,
        weights=result.x,
        template=template,
        l2_lambda=config.l2_lambda,
        history=result.history,
    )
