"""Additive bidirectional n-gram scoring over padded herb sequences.

Every prescription is padded with two begin sentinels in front and two end
sentinels behind, so bigram and trigram contexts exist at every position.
A blank inside a complete prescription is scored by four equally weighted
smoothed conditionals: candidate given the one and two herbs before the
blank, and candidate given the one and two herbs after it. A blank at the
append position (the "next herb" case of an unfinished prescription) uses
the two forward terms only, because nothing is known yet about what
follows.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Prescription, Vocabulary
from .errors import ConfigError

FORWARD = "forward"
BACKWARD = "backward"


@dataclass
class NgramModel:
    """Unigram/bigram/trigram counts with add-k smoothed conditionals.

    Smoothed probabilities normalize over the vocabulary plus one boundary
    outcome per direction: the end sentinel when predicting what follows a
    context, the begin sentinel when predicting what precedes one. Both
    candidate sets have size V' = vocabulary size + 1.
    """

    vocab: Vocabulary
    smoothing: float = 1.0
    unigrams: Counter = field(default_factory=Counter)
    bigrams: Counter = field(default_factory=Counter)
    trigrams: Counter = field(default_factory=Counter)
    total_tokens: int = 0
    _fwd_ctx: dict = field(default_factory=dict, repr=False)
    _bwd_ctx: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.smoothing < 0:
            raise ConfigError("smoothing constant must be non-negative")

    # -- fitting ---------------------------------------------------------

    def fit(self, corpus: Iterable[Prescription]) -> "NgramModel":
        bos, eos = self.vocab.bos_id, self.vocab.eos_id
        for pres in corpus:
            seq = (bos, bos, *pres.herb_ids, eos, eos)
            self.unigrams.update(seq)
            self.bigrams.update(zip(seq, seq[1:]))
            self.trigrams.update(zip(seq, seq[1:], seq[2:]))
            self.total_tokens += len(seq)
        self._rebuild_context_sums()
        return self

    def _rebuild_context_sums(self) -> None:
        # Context totals restricted to each direction's candidate set, so
        # the smoothed conditionals sum to exactly one.
        bos, eos = self.vocab.bos_id, self.vocab.eos_id
        fwd: dict = {}
        bwd: dict = {}
        for (a, b), c in self.bigrams.items():
            if b != bos:
                fwd[(a,)] = fwd.get((a,), 0) + c
            if a != eos:
                bwd[(b,)] = bwd.get((b,), 0) + c
        for (a, b, d), c in self.trigrams.items():
            if d != bos:
                fwd[(a, b)] = fwd.get((a, b), 0) + c
            if a != eos:
                bwd[(b, d)] = bwd.get((b, d), 0) + c
        self._fwd_ctx = fwd
        self._bwd_ctx = bwd

    # -- probabilities ---------------------------------------------------

    @property
    def n_outcomes(self) -> int:
        """Size of the smoothed candidate set: herbs, unknown, one boundary."""
        return self.vocab.size + 1

    def candidates(self, direction: str = FORWARD) -> list[int]:
        boundary = self.vocab.eos_id if direction == FORWARD else self.vocab.bos_id
        return list(range(self.vocab.size)) + [boundary]

    def prob(self, target: int, context: Sequence[int], direction: str = FORWARD) -> float:
        """Add-k conditional of the target next to a one- or two-id context.

        Forward reads the context as the ids immediately before the target
        in corpus order; backward reads the same counts with the target
        immediately before the context.
        """
        context = tuple(context)
        if len(context) not in (1, 2):
            raise ConfigError("context must hold one or two ids")
        if direction == FORWARD:
            ngram = context + (target,)
            ctx_total = self._fwd_ctx.get(context, 0)
        elif direction == BACKWARD:
            ngram = (target,) + context
            ctx_total = self._bwd_ctx.get(context, 0)
        else:
            raise ConfigError(f"unknown direction {direction!r}")
        table = self.bigrams if len(ngram) == 2 else self.trigrams
        k = self.smoothing
        denom = ctx_total + k * self.n_outcomes
        if denom == 0.0:
            return 0.0
        return (table.get(ngram, 0) + k) / denom

    def unigram_prob(self, target: int) -> float:
        k = self.smoothing
        denom = self.total_tokens + k * self.n_outcomes
        if denom == 0.0:
            return 0.0
        return (self.unigrams.get(target, 0) + k) / denom

    # -- blank scoring ---------------------------------------------------

    def _left_context(self, context_ids: Sequence[int], blank_pos: int):
        bos = self.vocab.bos_id
        w1 = context_ids[blank_pos - 1] if blank_pos >= 1 else bos
        w2 = context_ids[blank_pos - 2] if blank_pos >= 2 else bos
        return w1, w2

    def _right_context(self, context_ids: Sequence[int], blank_pos: int):
        eos = self.vocab.eos_id
        n = len(context_ids)
        w1 = context_ids[blank_pos] if blank_pos < n else eos
        w2 = context_ids[blank_pos + 1] if blank_pos + 1 < n else eos
        return w1, w2

    def score_blank(
        self,
        context_ids: Sequence[int],
        blank_pos: int,
        candidate: int,
        include_unigram: bool = False,
    ) -> float:
        """Four-term additive score for a blank in a complete prescription.

        Sentinel padding supplies the missing neighbors at the edges. The
        optional unigram term is off by default.
        """
        w_m1, w_m2 = self._left_context(context_ids, blank_pos)
        w_p1, w_p2 = self._right_context(context_ids, blank_pos)
        score = (
            self.prob(candidate, (w_m1,), FORWARD)
            + self.prob(candidate, (w_m2, w_m1), FORWARD)
            + self.prob(candidate, (w_p1,), BACKWARD)
            + self.prob(candidate, (w_p1, w_p2), BACKWARD)
        )
        if include_unigram:
            score += self.unigram_prob(candidate)
        return score

    def score_next(
        self,
        draft_ids: Sequence[int],
        candidate: int,
        include_unigram: bool = False,
    ) -> float:
        """Forward-only score for the herb following an unfinished draft."""
        pos = len(draft_ids)
        w_m1, w_m2 = self._left_context(draft_ids, pos)
        score = self.prob(candidate, (w_m1,), FORWARD) + self.prob(
            candidate, (w_m2, w_m1), FORWARD
        )
        if include_unigram:
            score += self.unigram_prob(candidate)
        return score

    # -- prediction ------------------------------------------------------

    def _argranked(self, ids: Sequence[int], scores: Sequence[float]):
        ids = np.asarray(ids, dtype=np.int64)
        scores = np.asarray(scores, dtype=np.float64)
        order = np.lexsort((ids, -scores))
        return ids[order], scores[order]

    def predict_blank(
        self, context_ids: Sequence[int], blank_pos: int, include_unigram: bool = False
    ) -> int:
        """Highest-scoring herb for the blank, ties broken by ascending id."""
        herbs = self.vocab.herb_ids()
        scores = [
            self.score_blank(context_ids, blank_pos, c, include_unigram)
            for c in herbs
        ]
        ids, _ = self._argranked(herbs, scores)
        return int(ids[0])

    def ranked_next(
        self, draft_ids: Sequence[int], include_unigram: bool = False
    ) -> list[tuple[int, float]]:
        """All continuation candidates, best first, excluding draft herbs."""
        present = set(draft_ids)
        herbs = [c for c in self.vocab.herb_ids() if c not in present]
        scores = [self.score_next(draft_ids, c, include_unigram) for c in herbs]
        ids, ordered = self._argranked(herbs, scores)
        return [(int(i), float(s)) for i, s in zip(ids, ordered)]

    def predict_next(self, draft_ids: Sequence[int]) -> int:
        ranked = self.ranked_next(draft_ids)
        if not ranked:
            raise ConfigError("no candidate herb remains")
        return ranked[0][0]


def fit_ngram(
    corpus: Iterable[Prescription], vocab: Vocabulary, smoothing: float = 1.0
) -> NgramModel:
    return NgramModel(vocab=vocab, smoothing=smoothing).fit(corpus)
