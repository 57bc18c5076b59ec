"""Similarity-benchmark construction and scoring, blank-prediction accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .corpus import PredictionItem, Vocabulary
from .embeddings import EmbeddingMatrix, cosine
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class BenchmarkPair:
    herb1: str
    herb2: str
    score: float


@dataclass(frozen=True)
class AnnotationRow:
    herb1: str
    herb2: str
    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.scores) < 2:
            raise DataError("an annotation row needs at least two scores")
        if any(not 1 <= s <= 5 for s in self.scores):
            raise DataError("annotation scores must lie in [1, 5]")


def _population_std(scores: Sequence[float]) -> float:
    mean = sum(scores) / len(scores)
    return math.sqrt(sum((s - mean) ** 2 for s in scores) / len(scores))


def build_benchmark(
    annotations: Sequence[AnnotationRow], keep: int = 80
) -> list[BenchmarkPair]:
    """Keep the `keep` pairs with the best annotator agreement.

    Pairs are ordered by ascending population standard deviation of their
    scores, ties by ascending mean, then by the pair strings. The gold
    score of a kept pair is the arithmetic mean of its annotations.
    """
    if len(annotations) < keep:
        raise DataError(
            f"need at least {keep} annotated pairs, got {len(annotations)}"
        )
    seen: set[tuple[str, str]] = set()
    for row in annotations:
        key = (min(row.herb1, row.herb2), max(row.herb1, row.herb2))
        if key in seen:
            raise DataError(f"duplicate pair {key} in annotations")
        seen.add(key)

    def agreement_key(row: AnnotationRow):
        mean = sum(row.scores) / len(row.scores)
        pair = (min(row.herb1, row.herb2), max(row.herb1, row.herb2))
        return (_population_std(row.scores), mean, pair)

    ranked = sorted(annotations, key=agreement_key)[:keep]
    return [
        BenchmarkPair(r.herb1, r.herb2, sum(r.scores) / len(r.scores)) for r in ranked
    ]


def generate_candidate_pairs(
    vocab: Vocabulary, n: int = 120, seed: int = 0
) -> list[tuple[str, str]]:
    """n distinct unordered herb pairs sampled uniformly without replacement."""
    herbs = vocab.herb_ids()
    total = len(herbs) * (len(herbs) - 1) // 2
    if n < 1:
        raise ConfigError("n must be at least 1")
    if n > total:
        raise ConfigError(f"n={n} exceeds the {total} distinct pairs available")
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, int]] = set()
    pairs: list[tuple[str, str]] = []
    while len(pairs) < n:
        a = herbs[int(rng.integers(len(herbs)))]
        b = herbs[int(rng.integers(len(herbs)))]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        pairs.append((vocab.token_of(key[0]), vocab.token_of(key[1])))
    return pairs


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation: Pearson correlation of average ranks."""
    if len(xs) != len(ys):
        raise ConfigError("inputs must have equal length")
    if len(xs) < 2:
        raise ConfigError("need at least two observations")
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise DataError("rank correlation is undefined for a constant list")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    rho = float((dx @ dy) / math.sqrt(float(dx @ dx) * float(dy @ dy)))
    return float(np.clip(rho, -1.0, 1.0))


def eval_similarity(
    emb: EmbeddingMatrix, benchmark: Sequence[BenchmarkPair]
) -> tuple[float, float]:
    """(rho, coverage) of embedding cosines against the gold scores.

    Pairs with an out-of-vocabulary herb are dropped; coverage reports the
    evaluated fraction.
    """
    if not benchmark:
        raise DataError("empty benchmark")
    model_scores = []
    gold_scores = []
    for pair in benchmark:
        a = emb.vocab.id_of(pair.herb1)
        b = emb.vocab.id_of(pair.herb2)
        if a is None or b is None or emb.vocab.unk_id in (a, b):
            continue
        model_scores.append(cosine(emb.vector(a), emb.vector(b)))
        gold_scores.append(pair.score)
    if len(model_scores) < 2:
        raise DataError(
            f"only {len(model_scores)} of {len(benchmark)} pairs are in vocabulary"
        )
    rho = spearman(model_scores, gold_scores)
    return rho, len(model_scores) / len(benchmark)


def eval_prediction(model, testset: Sequence[PredictionItem]) -> float:
    """Top-1 accuracy of predict_blank over the test items."""
    if not testset:
        raise DataError("empty prediction test set")
    hits = sum(
        1
        for item in testset
        if model.predict_blank(item.context_ids, item.blank_pos) == item.answer
    )
    return hits / len(testset)


# -- file formats ---------------------------------------------------------


def save_benchmark(pairs: Iterable[BenchmarkPair], stream: IO[str]) -> None:
    """TSV rows "herb1<TAB>herb2<TAB>score", scores printed to 2 decimals."""
    for p in pairs:
        stream.write(f"{p.herb1}\t{p.herb2}\t{p.score:.2f}\n")


def load_benchmark(stream: IO[str] | Iterable[str]) -> list[BenchmarkPair]:
    pairs = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"benchmark line {lineno}: expected 3 tab-separated fields")
        try:
            score = float(parts[2])
        except ValueError:
            raise DataError(f"benchmark line {lineno}: bad score {parts[2]!r}") from None
        pairs.append(BenchmarkPair(parts[0], parts[1], score))
    if not pairs:
        raise DataError("empty benchmark file")
    return pairs


def load_annotations(stream: IO[str] | Iterable[str]) -> list[AnnotationRow]:
    rows = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 4:
            raise DataError(
                f"annotation line {lineno}: expected herb1, herb2 and >= 2 scores"
            )
        try:
            scores = tuple(float(s) for s in parts[2:])
        except ValueError:
            raise DataError(f"annotation line {lineno}: non-numeric score") from None
        rows.append(AnnotationRow(parts[0], parts[1], scores))
    if not rows:
        raise DataError("empty annotation file")
    return rows
