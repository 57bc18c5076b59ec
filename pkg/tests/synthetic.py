"""Synthetic cluster-structured corpora for recovery tests.

Herbs are organized into disjoint clusters; each prescription draws most of
its herbs from one home cluster, so embeddings learned from the corpus
should place same-cluster herbs closer together than cross-cluster ones.
"""

from __future__ import annotations

import numpy as np

from herbvec.corpus import RawPrescription


def herb_name(cluster: int, index: int) -> str:
    return f"c{cluster:02d}h{index:02d}"


def cluster_of(token: str) -> int:
    return int(token[1:3])


def make_planted_corpus(
    n_clusters: int = 10,
    herbs_per_cluster: int = 20,
    n_prescriptions: int = 5000,
    min_len: int = 6,
    max_len: int = 10,
    p_intra: float = 0.9,
    seed: int = 20240601,
) -> list[RawPrescription]:
    """Prescriptions of distinct herbs drawn 90% from one home cluster."""
    rng = np.random.default_rng(seed)
    clusters = [
        [herb_name(c, i) for i in range(herbs_per_cluster)] for c in range(n_clusters)
    ]
    out = []
    for _ in range(n_prescriptions):
        home = int(rng.integers(n_clusters))
        length = int(rng.integers(min_len, max_len + 1))
        chosen: list[str] = []
        taken = set()
        while len(chosen) < length:
            if rng.random() < p_intra:
                pool = clusters[home]
            else:
                other = int(rng.integers(n_clusters - 1))
                pool = clusters[other if other < home else other + 1]
            pick = pool[int(rng.integers(len(pool)))]
            if pick in taken:
                continue
            taken.add(pick)
            chosen.append(pick)
        out.append(RawPrescription(herbs=tuple(chosen)))
    return out


def cluster_cosine_margin(emb, n_pairs: int = 4000, seed: int = 5) -> float:
    """Mean same-cluster cosine minus mean cross-cluster cosine."""
    from herbvec.embeddings import cosine

    rng = np.random.default_rng(seed)
    vocab = emb.vocab
    herbs = [i for i in vocab.herb_ids() if vocab.count_of(i) > 0]
    intra, inter = [], []
    while len(intra) < n_pairs // 2 or len(inter) < n_pairs // 2:
        a, b = (int(herbs[i]) for i in rng.integers(len(herbs), size=2))
        if a == b:
            continue
        same = cluster_of(vocab.token_of(a)) == cluster_of(vocab.token_of(b))
        bucket = intra if same else inter
        if len(bucket) < n_pairs // 2:
            bucket.append(cosine(emb.vector(a), emb.vector(b)))
    return float(np.mean(intra) - np.mean(inter))


def cooccurrence_oracle_accuracy(train, testset, vocab) -> float:
    """Count-based reference predictor for calibrating recovery thresholds.

    Scores a candidate by the summed log co-occurrence counts with the
    herbs present in the blanked prescription.
    """
    V = vocab.size
    cooc = np.zeros((V, V))
    for pres in train:
        ids = set(pres.herb_ids)
        for a in ids:
            for b in ids:
                if a != b:
                    cooc[a, b] += 1
    hits = 0
    herb_ids = np.array(vocab.herb_ids())
    for item in testset:
        present = set(item.context_ids)
        scores = np.log1p(cooc[:, list(present)]).sum(axis=1)
        candidates = [c for c in herb_ids if c not in present]
        best = max(candidates, key=lambda c: (scores[c], -c))
        hits += best == item.answer
    return hits / len(testset)
