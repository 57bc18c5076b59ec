"""Dense herb vectors: similarity, neighbor and analogy queries, text IO."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from .corpus import Vocabulary
from .errors import ConfigError, DataError, ZeroVectorError


def cosine(a, b) -> float:
    """Cosine similarity, clamped into [-1, 1] against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for a zero vector")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


@dataclass
class EmbeddingMatrix:
    """One vector per vocabulary id (herbs plus the unknown row)."""

    vectors: np.ndarray
    vocab: Vocabulary

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ConfigError("embedding matrix must be two-dimensional")
        if self.vectors.shape[0] != self.vocab.size:
            raise ConfigError(
                f"row count {self.vectors.shape[0]} does not match "
                f"vocabulary size {self.vocab.size}"
            )
        if self.vectors.shape[1] < 1:
            raise ConfigError("embedding dimension must be positive")
        if not np.all(np.isfinite(self.vectors)):
            raise DataError("embedding matrix contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, herb_id: int) -> np.ndarray:
        if not 0 <= herb_id < self.vectors.shape[0]:
            raise ConfigError(f"id {herb_id} outside the embedding matrix")
        return self.vectors[herb_id]

    def _ranked(self, query: np.ndarray, exclude: set[int], k: int):
        if k < 1:
            raise ConfigError("k must be at least 1")
        qn = float(np.linalg.norm(query))
        if qn == 0.0:
            raise ZeroVectorError("query vector has zero norm")
        norms = np.linalg.norm(self.vectors, axis=1)
        keep = np.array(
            [
                i
                for i in range(self.vectors.shape[0])
                if i not in exclude and i != self.vocab.unk_id and norms[i] > 0.0
            ],
            dtype=np.int64,
        )
        if keep.size == 0:
            return []
        sims = np.clip(self.vectors[keep] @ query / (norms[keep] * qn), -1.0, 1.0)
        order = np.lexsort((keep, -sims))[:k]
        return [(int(keep[i]), float(sims[i])) for i in order]

    def nearest_neighbors(self, herb_id: int, k: int) -> list[tuple[int, float]]:
        """Top-k herbs by cosine to the query herb, ties by ascending id."""
        return self._ranked(self.vector(herb_id), {herb_id}, k)

    def analogy(self, a: int, b: int, c: int, k: int) -> list[tuple[int, float]]:
        """Top-k herbs closest to vector(b) - vector(a) + vector(c).

        The three query herbs are excluded from the candidates, otherwise
        b or c would trivially win.
        """
        query = self.vector(b) - self.vector(a) + self.vector(c)
        return self._ranked(query, {a, b, c}, k)


def save_text(emb: EmbeddingMatrix, stream: IO[str]) -> None:
    """Write the "V d" header line followed by one "token values..." row per id."""
    n_rows, dim = emb.vectors.shape
    stream.write(f"{n_rows} {dim}\n")
    for i in range(n_rows):
        values = " ".join(format(x, ".10g") for x in emb.vectors[i])
        stream.write(f"{emb.vocab.tokens[i]} {values}\n")


def load_text(stream: IO[str]) -> EmbeddingMatrix:
    """Read an embedding file written by save_text (or compatible tools).

    Files lacking an unknown-token row get one appended with a zero vector
    so the matrix keeps one row per vocabulary id.
    """
    lines = iter(enumerate(stream, start=1))
    try:
        _, header = next(lines)
    except StopIteration:
        raise DataError("empty embedding file") from None
    parts = header.split()
    if len(parts) != 2:
        raise DataError("line 1: header must be 'row-count dimension'")
    try:
        n_rows, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise DataError("line 1: header must hold two integers") from None
    if n_rows < 1 or dim < 1:
        raise DataError("line 1: header values must be positive")

    tokens: list[str] = []
    seen: dict[str, int] = {}
    rows = np.empty((n_rows, dim), dtype=np.float64)
    count = 0
    for lineno, line in lines:
        if not line.strip():
            continue
        if count >= n_rows:
            raise DataError(f"line {lineno}: more rows than the header announced")
        fields = line.split()
        token, values = fields[0], fields[1:]
        if len(values) != dim:
            raise DataError(
                f"line {lineno}: expected {dim} values, found {len(values)}"
            )
        if token in seen:
            raise DataError(
                f"line {lineno}: duplicate token {token!r} (first at line {seen[token]})"
            )
        seen[token] = lineno
        try:
            rows[count] = [float(v) for v in values]
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric field") from None
        tokens.append(token)
        count += 1
    if count != n_rows:
        raise DataError(
            f"row count mismatch: header announced {n_rows}, file holds {count}"
        )
    vocab = Vocabulary.from_tokens(tokens)
    if vocab.size == n_rows + 1:
        rows = np.vstack([rows, np.zeros((1, dim))])
    return EmbeddingMatrix(vectors=rows, vocab=vocab)
