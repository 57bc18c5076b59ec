from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from herbvec.corpus import (
    Prescription,
    RawPrescription,
    UNK_TOKEN,
    Vocabulary,
    build_vocabulary,
    encode_corpus,
)


def make_vocab(n_herbs: int, counts=None) -> Vocabulary:
    tokens = [f"h{i:02d}" for i in range(n_herbs)]
    if counts is None:
        counts = [5] * n_herbs
    return Vocabulary.from_tokens([UNK_TOKEN] + tokens, [0] + list(counts))


def random_corpus(rng, vocab, n=30, min_len=2, max_len=8) -> list[Prescription]:
    herbs = vocab.herb_ids()
    out = []
    for _ in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        out.append(
            Prescription(tuple(int(herbs[i]) for i in rng.integers(len(herbs), size=length)))
        )
    return out


@pytest.fixture
def tiny_raw_corpus():
    lines = [
        ("甲", "乙", "丙", "丁"),
        ("甲", "乙", "戊", "己"),
        ("丙", "丁", "戊"),
        ("甲", "丙", "丁", "己", "戊"),
        ("乙", "丁", "甲"),
    ]
    return [RawPrescription(herbs=h) for h in lines]


@pytest.fixture
def tiny_setup(tiny_raw_corpus):
    vocab = build_vocabulary(tiny_raw_corpus)
    encoded = encode_corpus(tiny_raw_corpus, vocab)
    return vocab, encoded


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
