"""Prescription corpus handling: parsing, normalization, encoding, splitting.

A corpus file is UTF-8 text with one prescription per line. Herb tokens are
separated by ASCII whitespace or the enumeration comma "、". A line may carry
an optional name terminated by the first tab. Lines whose first non-blank
character is "#" are comments; blank lines are ignored.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

UNK_TOKEN = "<unk>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
RESERVED_TOKENS = (UNK_TOKEN, BOS_TOKEN, EOS_TOKEN)

BLANK_MARK = "___"

_TOKEN_SEP = re.compile(r"[ \t\r\n\x0b\x0c、]+")


@dataclass(frozen=True)
class RawPrescription:
    """One prescription as read from a corpus file: tokens, optional name."""

    herbs: tuple[str, ...]
    name: str | None = None
    source: str | None = None

    def __post_init__(self):
        if not self.herbs:
            raise DataError("a prescription needs at least one herb")
        for h in self.herbs:
            if not h or h != h.strip():
                raise DataError(f"herb token {h!r} is empty or untrimmed")


def parse_corpus(
    stream: IO[str] | Iterable[str],
    source: str | None = None,
    diagnostics: list[str] | None = None,
) -> list[RawPrescription]:
    """Read prescriptions from a corpus stream, one per non-comment line.

    Malformed lines (no herbs left after splitting) are skipped; a message
    with the line number is appended to ``diagnostics`` when given and
    logged as a warning either way.
    """
    out: list[RawPrescription] = []
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        name = None
        body = line
        if "\t" in line:
            name, body = line.split("\t", 1)
            name = name.strip() or None
        herbs = tuple(t for t in _TOKEN_SEP.split(body.strip()) if t)
        if not herbs:
            message = f"line {lineno}: no herb tokens, skipped"
            if diagnostics is not None:
                diagnostics.append(message)
            logger.warning("parse_corpus: %s", message)
            continue
        out.append(RawPrescription(herbs=herbs, name=name, source=source))
    return out


def count_tokens(corpus: Iterable[RawPrescription]) -> Counter[str]:
    counts: Counter[str] = Counter()
    for pres in corpus:
        counts.update(pres.herbs)
    return counts


def project_rare_herbs(
    corpus: Sequence[RawPrescription], threshold: int = 5
) -> list[RawPrescription]:
    """Map rare surface forms onto a popular token that contains them.

    Counts are taken once, before any replacement. A token occurring fewer
    than ``threshold`` times is replaced, everywhere it occurs, by a token
    with count >= threshold of which it is a contiguous substring, when one
    exists. Among several such tokens the highest count wins, then the
    longest token, then the lexicographically smallest. Tokens without a
    popular superstring pass through unchanged, so prescription lengths
    never change.
    """
    if not corpus:
        raise DataError("cannot project an empty corpus")
    counts = count_tokens(corpus)
    popular = [t for t, c in counts.items() if c >= threshold]
    mapping: dict[str, str] = {}
    for token, cnt in counts.items():
        if cnt >= threshold:
            continue
        candidates = [p for p in popular if token in p]
        if candidates:
            mapping[token] = min(candidates, key=lambda p: (-counts[p], -len(p), p))
    if not mapping:
        return list(corpus)
    projected = []
    for pres in corpus:
        herbs = tuple(mapping.get(h, h) for h in pres.herbs)
        if herbs == pres.herbs:
            projected.append(pres)
        else:
            projected.append(
                RawPrescription(herbs=herbs, name=pres.name, source=pres.source)
            )
    return projected


@dataclass
class Vocabulary:
    """Bijective token/id mapping over retained herbs plus reserved ids.

    Ids ``0 .. size-1`` cover the unknown-token row and the herbs; the
    begin and end sentinels live at ``size`` and ``size + 1`` so that
    padded sequences index into tables with two extra rows.
    """

    tokens: list[str]
    counts: list[int]
    unk_id: int
    _token_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.tokens) != len(self.counts):
            raise ConfigError("tokens and counts must have equal length")
        if not self.tokens:
            raise ConfigError("vocabulary cannot be empty")
        mapping: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if tok in mapping:
                raise DataError(f"duplicate token {tok!r} in vocabulary")
            mapping[tok] = i
        if BOS_TOKEN in mapping or EOS_TOKEN in mapping:
            raise DataError("sequence sentinels cannot appear as vocabulary tokens")
        if not 0 <= self.unk_id < len(self.tokens) or self.tokens[self.unk_id] != UNK_TOKEN:
            raise ConfigError("unk_id must point at the unknown token")
        self._token_to_id = mapping

    @classmethod
    def from_tokens(
        cls, tokens: Sequence[str], counts: Sequence[int] | None = None
    ) -> "Vocabulary":
        """Build a vocabulary with ids in the given token order.

        Appends an unknown-token entry when the list does not contain one.
        """
        tokens = list(tokens)
        counts = list(counts) if counts is not None else [0] * len(tokens)
        if UNK_TOKEN in tokens:
            unk_id = tokens.index(UNK_TOKEN)
        else:
            tokens.append(UNK_TOKEN)
            counts.append(0)
            unk_id = len(tokens) - 1
        return cls(tokens=tokens, counts=counts, unk_id=unk_id)

    @property
    def size(self) -> int:
        """Number of ids with a token row: herbs plus the unknown token."""
        return len(self.tokens)

    @property
    def bos_id(self) -> int:
        return len(self.tokens)

    @property
    def eos_id(self) -> int:
        return len(self.tokens) + 1

    @property
    def padded_size(self) -> int:
        """Id range including the two sequence sentinels."""
        return len(self.tokens) + 2

    def herb_ids(self) -> list[int]:
        return [i for i in range(self.size) if i != self.unk_id]

    def is_sentinel(self, herb_id: int) -> bool:
        return herb_id >= self.size

    def get_id(self, token: str) -> int:
        """Id for a token, falling back to the unknown id."""
        return self._token_to_id.get(token, self.unk_id)

    def id_of(self, token: str) -> int | None:
        return self._token_to_id.get(token)

    def require_id(self, token: str) -> int:
        herb_id = self._token_to_id.get(token)
        if herb_id is None:
            raise DataError(f"unknown herb: {token}")
        return herb_id

    def token_of(self, herb_id: int) -> str:
        if herb_id == self.bos_id:
            return BOS_TOKEN
        if herb_id == self.eos_id:
            return EOS_TOKEN
        if 0 <= herb_id < self.size:
            return self.tokens[herb_id]
        raise ConfigError(f"id {herb_id} outside vocabulary range")

    def count_of(self, herb_id: int) -> int:
        return self.counts[herb_id]


def build_vocabulary(
    corpus: Iterable[RawPrescription], min_count: int = 1
) -> Vocabulary:
    """Vocabulary over tokens with count >= min_count.

    Ids are assigned by descending count, ties broken by token order, after
    the unknown token at id 0. Reserved token strings in the corpus are
    never retained (they would collide with the sentinels) and count toward
    the unknown id instead.
    """
    if min_count < 0:
        raise ConfigError("min_count must be non-negative")
    counts = count_tokens(corpus)
    for reserved in RESERVED_TOKENS:
        if reserved in counts:
            logger.warning(
                "reserved token %r occurs in the corpus; mapping it to the unknown id",
                reserved,
            )
    retained = sorted(
        (
            t
            for t, c in counts.items()
            if c >= min_count and t not in RESERVED_TOKENS
        ),
        key=lambda t: (-counts[t], t),
    )
    if not retained:
        raise ConfigError(
            f"no token reaches min_count={min_count}; the vocabulary would be empty"
        )
    retained_set = set(retained)
    unk_count = sum(c for t, c in counts.items() if t not in retained_set)
    tokens = [UNK_TOKEN] + retained
    token_counts = [unk_count] + [counts[t] for t in retained]
    return Vocabulary(tokens=tokens, counts=token_counts, unk_id=0)


@dataclass(frozen=True)
class Prescription:
    """An encoded prescription: a non-empty sequence of vocabulary ids."""

    herb_ids: tuple[int, ...]

    def __post_init__(self):
        if not self.herb_ids:
            raise DataError("a prescription needs at least one herb id")

    def __len__(self) -> int:
        return len(self.herb_ids)

    def __iter__(self):
        return iter(self.herb_ids)

    def __getitem__(self, index):
        return self.herb_ids[index]


def encode(raw: RawPrescription, vocab: Vocabulary) -> Prescription:
    """Encode tokens to ids, mapping out-of-vocabulary tokens to unknown."""
    return Prescription(tuple(vocab.get_id(h) for h in raw.herbs))


def encode_corpus(
    corpus: Iterable[RawPrescription], vocab: Vocabulary
) -> list[Prescription]:
    return [encode(p, vocab) for p in corpus]


def decode(prescription: Prescription, vocab: Vocabulary) -> list[str]:
    return [vocab.token_of(i) for i in prescription.herb_ids]


def split_corpus(
    items: Sequence,
    ratios: tuple[float, float, float] = (0.9, 0.05, 0.05),
    seed: int = 0,
) -> tuple[list, list, list]:
    """Deterministic train/dev/test partition.

    Dev and test sizes are floored; the remainder goes to the training
    partition. The three lists are disjoint and jointly exhaustive.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ConfigError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)!r}")
    n = len(items)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_dev = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_dev - n_test
    train = [items[i] for i in order[:n_train]]
    dev = [items[i] for i in order[n_train : n_train + n_dev]]
    test = [items[i] for i in order[n_train + n_dev :]]
    return train, dev, test


@dataclass(frozen=True)
class PredictionItem:
    """A blank-prediction task: the blanked sequence, the blank slot, the answer.

    ``context_ids`` is the source prescription with the answer removed, so
    reinserting ``answer`` at ``blank_pos`` reproduces the original.
    """

    context_ids: tuple[int, ...]
    blank_pos: int
    answer: int

    def __post_init__(self):
        if not 0 <= self.blank_pos <= len(self.context_ids):
            raise DataError("blank position outside the prescription")


def make_prediction_testset(
    corpus: Sequence[Prescription],
    seed: int = 0,
    vocab: Vocabulary | None = None,
    min_length: int = 4,
) -> list[PredictionItem]:
    """One blank-prediction item per prescription of length >= min_length.

    The blanked position is drawn uniformly with the given seed. When a
    vocabulary is supplied, positions holding the unknown id are never
    chosen as the answer.
    """
    rng = np.random.default_rng(seed)
    items: list[PredictionItem] = []
    for pres in corpus:
        n = len(pres)
        if n < min_length:
            continue
        if vocab is None:
            positions = range(n)
        else:
            positions = [t for t in range(n) if pres[t] != vocab.unk_id]
            if not positions:
                continue
        t = positions[int(rng.integers(len(positions)))]
        ids = pres.herb_ids
        items.append(PredictionItem(ids[:t] + ids[t + 1 :], t, ids[t]))
    if not items:
        logger.warning("no prescription qualifies for the prediction test set")
    return items


def save_corpus(corpus: Iterable[RawPrescription], stream: IO[str]) -> None:
    for pres in corpus:
        line = " ".join(pres.herbs)
        if pres.name:
            line = pres.name + "\t" + line
        stream.write(line + "\n")


def save_vocabulary(vocab: Vocabulary, stream: IO[str]) -> None:
    for token, count in zip(vocab.tokens, vocab.counts):
        stream.write(f"{token}\t{count}\n")


def load_vocabulary(stream: IO[str] | Iterable[str]) -> Vocabulary:
    tokens: list[str] = []
    counts: list[int] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"vocabulary line {lineno}: expected token<TAB>count")
        try:
            count = int(parts[1])
        except ValueError:
            raise DataError(f"vocabulary line {lineno}: bad count {parts[1]!r}") from None
        tokens.append(parts[0])
        counts.append(count)
    if not tokens:
        raise DataError("empty vocabulary file")
    return Vocabulary.from_tokens(tokens, counts)


def save_testset(
    items: Iterable[PredictionItem], vocab: Vocabulary, stream: IO[str]
) -> None:
    """Write items as "tokens with ___ at the blank<TAB>answer" lines."""
    for item in items:
        tokens = [vocab.token_of(i) for i in item.context_ids]
        tokens.insert(item.blank_pos, BLANK_MARK)
        stream.write(" ".join(tokens) + "\t" + vocab.token_of(item.answer) + "\n")


def load_testset(
    stream: IO[str] | Iterable[str], vocab: Vocabulary
) -> list[PredictionItem]:
    items: list[PredictionItem] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"testset line {lineno}: expected question<TAB>answer")
        question, answer = parts
        tokens = question.split()
        if tokens.count(BLANK_MARK) != 1:
            raise DataError(f"testset line {lineno}: exactly one blank mark required")
        blank_pos = tokens.index(BLANK_MARK)
        context = tuple(vocab.get_id(t) for t in tokens if t != BLANK_MARK)
        items.append(
            PredictionItem(context, blank_pos, vocab.get_id(answer.strip()))
        )
    return items
