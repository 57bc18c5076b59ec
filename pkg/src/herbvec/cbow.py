"""Bag-of-context herb embeddings trained with negative sampling.

Training averages the input vectors of the herbs in a window around a
target position into a context vector h, then scores the target and k
noise herbs against h with a logistic objective:

    L = -log sigmoid(u_target . h) - sum_j log sigmoid(-u_neg_j . h)

Prediction averages the whole prescription instead of a window and ranks
candidates by their output-vector score against that average.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit as sigmoid

from .corpus import Prescription, Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import ConfigError


@dataclass
class NoiseDistribution:
    """Herb sampling probabilities proportional to count^power."""

    ids: np.ndarray
    probs: np.ndarray
    _cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.ids.size == 0:
            raise ConfigError("noise distribution needs at least one herb")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ConfigError("noise probabilities must sum to 1")
        self._cumulative = np.cumsum(self.probs)
        self._cumulative[-1] = 1.0

    @classmethod
    def from_vocab(cls, vocab: Vocabulary, power: float = 0.75) -> "NoiseDistribution":
        ids = np.array(vocab.herb_ids(), dtype=np.int64)
        weights = np.array([vocab.count_of(i) for i in ids], dtype=np.float64) ** power
        if weights.sum() == 0:
            weights = np.ones_like(weights)
        return cls(ids=ids, probs=weights / weights.sum())

    def draw(self, rng: np.random.Generator) -> int:
        return int(self.ids[np.searchsorted(self._cumulative, rng.random())])

    def draw_many(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.ids[np.searchsorted(self._cumulative, rng.random(n))]


def sample_negatives(
    noise: NoiseDistribution, k: int, forbidden: int, rng: np.random.Generator
) -> list[int]:
    """k noise draws, redrawing whenever the forbidden id comes up."""
    if k < 1:
        raise ConfigError("need at least one negative sample")
    if noise.ids.size < 2 and forbidden in noise.ids:
        raise ConfigError("cannot sample negatives from a single-herb vocabulary")
    out: list[int] = []
    while len(out) < k:
        candidate = noise.draw(rng)
        if candidate != forbidden:
            out.append(candidate)
    return out


def context_of(prescription: Sequence[int], t: int, window: int) -> list[int]:
    """Up to `window` ids on each side of t, truncated at the edges."""
    if not 0 <= t < len(prescription):
        raise ConfigError("position outside the prescription")
    left = list(prescription[max(0, t - window) : t])
    right = list(prescription[t + 1 : t + 1 + window])
    return left + right


@dataclass
class CbowModel:
    w_in: np.ndarray
    w_out: np.ndarray
    window: int
    negatives: int
    noise_power: float
    vocab: Vocabulary
    seed: int = 0
    noise: NoiseDistribution = field(init=False, repr=False)
    grad_clip_norm = None

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError("window radius must be at least 1")
        if self.negatives < 1:
            raise ConfigError("negatives per example must be at least 1")
        self.noise = NoiseDistribution.from_vocab(self.vocab, self.noise_power)

    @classmethod
    def create(
        cls,
        vocab: Vocabulary,
        dim: int = 100,
        window: int = 5,
        negatives: int = 5,
        noise_power: float = 0.75,
        seed: int = 0,
    ) -> "CbowModel":
        rng = np.random.default_rng(seed)
        bound = 0.5 / dim
        shape = (vocab.size, dim)
        return cls(
            w_in=rng.uniform(-bound, bound, shape),
            w_out=rng.uniform(-bound, bound, shape),
            window=window,
            negatives=negatives,
            noise_power=noise_power,
            vocab=vocab,
            seed=seed,
        )

    @property
    def dim(self) -> int:
        return self.w_in.shape[1]

    # -- training --------------------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        return {"w_in": self.w_in, "w_out": self.w_out}

    def training_examples(self, corpus: Sequence[Prescription], rng) -> list:
        return [
            (pres, t)
            for pres in corpus
            if len(pres) > 1
            for t in range(len(pres))
        ]

    def example_loss_and_grads(self, example, rng: np.random.Generator):
        pres, t = example
        context = context_of(pres, t, self.window)
        target = pres[t]
        negatives = sample_negatives(self.noise, self.negatives, target, rng)
        return ns_loss_and_grads(self, context, target, negatives)

    # -- prediction ------------------------------------------------------

    def ranked_candidates(
        self, context_ids: Sequence[int], exclude: set[int]
    ) -> list[tuple[int, float]]:
        if len(context_ids) == 0:
            raise ConfigError("at least one context herb is required")
        h = self.w_in[list(context_ids)].mean(axis=0)
        herbs = np.array(
            [c for c in self.vocab.herb_ids() if c not in exclude], dtype=np.int64
        )
        if herbs.size == 0:
            return []
        scores = self.w_out[herbs] @ h
        order = np.lexsort((herbs, -scores))
        return [(int(herbs[i]), float(scores[i])) for i in order]

    def predict_blank(self, context_ids: Sequence[int], blank_pos: int) -> int:
        """Best herb for the blank: whole-prescription average, not a window.

        Candidates exclude the unknown id and every herb already present.
        """
        ranked = self.ranked_candidates(context_ids, set(context_ids))
        if not ranked:
            raise ConfigError("no candidate herb remains")
        return ranked[0][0]

    def ranked_next(self, draft_ids: Sequence[int]) -> list[tuple[int, float]]:
        return self.ranked_candidates(draft_ids, set(draft_ids))

    def predict_next(self, draft_ids: Sequence[int]) -> int:
        return self.predict_blank(draft_ids, len(draft_ids))

    def extract_embeddings(self) -> EmbeddingMatrix:
        return EmbeddingMatrix(vectors=self.w_in.copy(), vocab=self.vocab)


def ns_loss_and_grads(
    model: CbowModel,
    context: Sequence[int],
    target: int,
    negatives: Sequence[int],
):
    """Negative-sampling loss and sparse gradients for one example.

    Returns (loss, grads) where grads maps parameter names to {row: vector}
    dictionaries covering only the touched rows.
    """
    if len(context) == 0:
        raise ConfigError("context must be non-empty")
    if target in negatives:
        raise ConfigError("negatives must differ from the target")
    context = list(context)
    h = model.w_in[context].mean(axis=0)

    pos_score = float(model.w_out[target] @ h)
    neg_rows = model.w_out[list(negatives)]
    neg_scores = neg_rows @ h
    # log sigmoid(x) = -log(1 + exp(-x)), computed stably
    loss = float(np.logaddexp(0.0, -pos_score) + np.logaddexp(0.0, neg_scores).sum())

    g_pos = sigmoid(pos_score) - 1.0
    g_negs = sigmoid(neg_scores)

    d_out: dict[int, np.ndarray] = {target: g_pos * h}
    for j, neg in enumerate(negatives):
        if neg in d_out:
            d_out[neg] = d_out[neg] + g_negs[j] * h
        else:
            d_out[neg] = g_negs[j] * h

    dh = g_pos * model.w_out[target] + g_negs @ neg_rows
    dh_each = dh / len(context)
    d_in: dict[int, np.ndarray] = {}
    for c in context:
        if c in d_in:
            d_in[c] = d_in[c] + dh_each
        else:
            d_in[c] = dh_each.copy()

    return loss, {"w_in": d_in, "w_out": d_out}
