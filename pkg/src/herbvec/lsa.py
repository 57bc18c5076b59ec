"""Herb-by-prescription count matrix factorized by truncated SVD."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .corpus import Prescription, Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import ConfigError, ConvergenceError


def build_count_matrix(
    corpus: Sequence[Prescription], vocab: Vocabulary
) -> sparse.csr_matrix:
    """Sparse matrix of herb occurrence counts, one column per prescription.

    Duplicate herbs within one prescription accumulate.
    """
    rows: list[int] = []
    cols: list[int] = []
    data: list[int] = []
    for j, pres in enumerate(corpus):
        for herb_id, count in Counter(pres.herb_ids).items():
            rows.append(herb_id)
            cols.append(j)
            data.append(count)
    return sparse.csr_matrix(
        (data, (rows, cols)), shape=(vocab.size, len(corpus)), dtype=np.float64
    )


@dataclass
class SvdFactors:
    """Top-k singular triplets: U (V x k), S descending, V_t (k x P)."""

    U: np.ndarray
    S: np.ndarray
    Vt: np.ndarray


def truncated_svd(
    matrix,
    k: int,
    tol: float = 1e-9,
    max_iters: int = 500,
    seed: int = 0,
    oversample: int = 10,
) -> SvdFactors:
    """Top-k singular triplets by randomized block subspace iteration.

    An oversampled block is alternated through the matrix and its transpose
    with QR re-orthonormalization; triplets are extracted from a small
    projected core after every pass and accepted once every retained
    triplet satisfies ||M v_i - s_i u_i|| <= tol * s_1. Deterministic for a
    fixed seed.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    n_rows, n_cols = matrix.shape
    if not 1 <= k <= min(n_rows, n_cols):
        raise ConfigError(f"k={k} outside 1..min{matrix.shape}")
    rng = np.random.default_rng(seed)
    block = min(k + oversample, min(n_rows, n_cols))
    Q, _ = np.linalg.qr(matrix @ rng.standard_normal((n_cols, block)))

    residuals = None
    for _ in range(max_iters):
        W, _ = np.linalg.qr(matrix.T @ Q)
        Q, _ = np.linalg.qr(matrix @ W)
        core = np.asarray(matrix.T @ Q).T  # block x P, small
        Uc, S, Vt = np.linalg.svd(core, full_matrices=False)
        U = Q @ Uc[:, :k]
        S_k = S[:k]
        Vt_k = Vt[:k]
        residuals = np.linalg.norm(matrix @ Vt_k.T - U * S_k, axis=0)
        bound = tol * S_k[0] if S_k[0] > 0 else tol
        if np.all(residuals <= bound):
            return _fix_signs(SvdFactors(U=U, S=S_k, Vt=Vt_k))
    raise ConvergenceError(
        f"truncated SVD did not reach tol={tol} within {max_iters} iterations",
        residuals=residuals,
    )


def _fix_signs(factors: SvdFactors) -> SvdFactors:
    # Largest-magnitude component of each left vector made positive, so the
    # factorization is deterministic.
    for j in range(factors.U.shape[1]):
        pivot = int(np.argmax(np.abs(factors.U[:, j])))
        if factors.U[pivot, j] < 0:
            factors.U[:, j] = -factors.U[:, j]
            factors.Vt[j, :] = -factors.Vt[j, :]
    return factors


def herb_vectors(factors: SvdFactors, vocab: Vocabulary) -> EmbeddingMatrix:
    """Embeddings U * diag(S): row h keeps the dot-product structure of M."""
    return EmbeddingMatrix(vectors=factors.U * factors.S, vocab=vocab)


@dataclass
class LsaModel:
    """Count-matrix factorization wrapped as a predictable model.

    Blank prediction ranks candidates by cosine against the mean vector of
    the context herbs.
    """

    embeddings: EmbeddingMatrix
    singular_values: np.ndarray
    rank: int
    seed: int = 0
    vocab: Vocabulary = field(init=False)

    def __post_init__(self):
        self.vocab = self.embeddings.vocab

    @classmethod
    def fit(
        cls,
        corpus: Sequence[Prescription],
        vocab: Vocabulary,
        rank: int = 20,
        tol: float = 1e-9,
        max_iters: int = 500,
        seed: int = 0,
    ) -> "LsaModel":
        matrix = build_count_matrix(corpus, vocab)
        factors = truncated_svd(matrix, rank, tol=tol, max_iters=max_iters, seed=seed)
        return cls(
            embeddings=herb_vectors(factors, vocab),
            singular_values=factors.S.copy(),
            rank=rank,
            seed=seed,
        )

    def ranked_candidates(
        self, context_ids: Sequence[int], exclude: set[int]
    ) -> list[tuple[int, float]]:
        vectors = self.embeddings.vectors
        if len(context_ids) == 0:
            raise ConfigError("at least one context herb is required")
        center = vectors[list(context_ids)].mean(axis=0)
        norms = np.linalg.norm(vectors, axis=1)
        cn = float(np.linalg.norm(center))
        herbs = np.array(
            [c for c in self.vocab.herb_ids() if c not in exclude], dtype=np.int64
        )
        if herbs.size == 0:
            return []
        if cn == 0.0:
            scores = np.zeros(herbs.size)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = (vectors[herbs] @ center) / (norms[herbs] * cn)
            scores = np.where(np.isfinite(scores), np.clip(scores, -1, 1), -np.inf)
        order = np.lexsort((herbs, -scores))
        return [(int(herbs[i]), float(scores[i])) for i in order]

    def predict_blank(self, context_ids: Sequence[int], blank_pos: int) -> int:
        ranked = self.ranked_candidates(context_ids, set(context_ids))
        if not ranked:
            raise ConfigError("no candidate herb remains")
        return ranked[0][0]

    def ranked_next(self, draft_ids: Sequence[int]) -> list[tuple[int, float]]:
        return self.ranked_candidates(draft_ids, set(draft_ids))

    def predict_next(self, draft_ids: Sequence[int]) -> int:
        return self.predict_blank(draft_ids, len(draft_ids))
