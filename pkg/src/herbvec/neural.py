"""Bidirectional gated-recurrent encoders for blank-herb prediction.

Two encoder layouts share the same cell parameters and output layer:

* ``rnnlm``: a forward pass over the begin sentinel plus the herbs before
  the blank, and a backward pass over the end sentinel plus the herbs after
  it, meeting at the blank from both sides.
* ``pllm``: both directions run over the entire blanked sequence, with the
  herbs before and after the blank made adjacent, so the prescription is
  encoded as a whole before anything is predicted.

The context vector h_c is the concatenation of the two final hidden states
(last pooling). A softmax layer over h_c predicts the missing herb and the
training loss is the negative log likelihood of the true herb. Gradients
are exact, accumulated by backpropagation through time; only the embedding
rows of herbs actually seen by an example receive gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit as sigmoid

from .corpus import Prescription, Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import ConfigError, DataError

RNNLM = "rnnlm"
PLLM = "pllm"
MODES = (RNNLM, PLLM)

_CELL_FIELDS = ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")


@dataclass
class GruCell:
    """Update gate z, reset gate r, candidate state weights of one direction."""

    w_z: np.ndarray
    u_z: np.ndarray
    b_z: np.ndarray
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray
    b_h: np.ndarray

    @classmethod
    def create(
        cls, d_in: int, d_h: int, rng: np.random.Generator, scale: float = 0.08
    ) -> "GruCell":
        def w(rows, cols):
            return rng.uniform(-scale, scale, (rows, cols))

        return cls(
            w_z=w(d_h, d_in), u_z=w(d_h, d_h), b_z=np.zeros(d_h),
            w_r=w(d_h, d_in), u_r=w(d_h, d_h), b_r=np.zeros(d_h),
            w_h=w(d_h, d_in), u_h=w(d_h, d_h), b_h=np.zeros(d_h),
        )

    @property
    def hidden_size(self) -> int:
        return self.b_z.shape[0]

    def fields(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _CELL_FIELDS}


def gru_step(cell: GruCell, h_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
    """One recurrence step.

    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    c = tanh(W_h x + U_h (r * h) + b_h)
    h' = (1 - z) * h + z * c
    """
    z = sigmoid(cell.w_z @ x + cell.u_z @ h_prev + cell.b_z)
    r = sigmoid(cell.w_r @ x + cell.u_r @ h_prev + cell.b_r)
    c = np.tanh(cell.w_h @ x + cell.u_h @ (r * h_prev) + cell.b_h)
    return (1.0 - z) * h_prev + z * c


def _gru_forward(cell: GruCell, xs: list[np.ndarray]):
    """Run the cell over a sequence from a zero state, keeping caches."""
    h = np.zeros(cell.hidden_size)
    caches = []
    for x in xs:
        z = sigmoid(cell.w_z @ x + cell.u_z @ h + cell.b_z)
        r = sigmoid(cell.w_r @ x + cell.u_r @ h + cell.b_r)
        c = np.tanh(cell.w_h @ x + cell.u_h @ (r * h) + cell.b_h)
        h_new = (1.0 - z) * h + z * c
        caches.append((x, h, z, r, c))
        h = h_new
    return h, caches


def _gru_backward(cell: GruCell, caches, dh: np.ndarray, grads: dict, prefix: str):
    """Backpropagate through time from the final-state gradient.

    Accumulates cell-parameter gradients under ``prefix`` keys in ``grads``
    and returns the input gradients, one per step.
    """
    dxs = [None] * len(caches)
    g = {name: grads[f"{prefix}.{name}"] for name in _CELL_FIELDS}
    for i in range(len(caches) - 1, -1, -1):
        x, h_prev, z, r, c = caches[i]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)

        da = dc * (1.0 - c * c)
        g["w_h"] += np.outer(da, x)
        g["u_h"] += np.outer(da, r * h_prev)
        g["b_h"] += da
        drh = cell.u_h.T @ da
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r

        dzp = dz * z * (1.0 - z)
        g["w_z"] += np.outer(dzp, x)
        g["u_z"] += np.outer(dzp, h_prev)
        g["b_z"] += dzp
        dh_prev = dh_prev + cell.u_z.T @ dzp

        drp = dr * r * (1.0 - r)
        g["w_r"] += np.outer(drp, x)
        g["u_r"] += np.outer(drp, h_prev)
        g["b_r"] += drp
        dh_prev = dh_prev + cell.u_r.T @ drp

        dxs[i] = cell.w_h.T @ da + cell.w_z.T @ dzp + cell.w_r.T @ drp
        dh = dh_prev
    return dxs


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


@dataclass
class NeuralLM:
    mode: str
    emb: np.ndarray  # (vocab.padded_size, dim); sentinel rows trainable
    fwd: GruCell
    bwd: GruCell
    w_out: np.ndarray  # (vocab.size, 2 * hidden)
    b_out: np.ndarray
    vocab: Vocabulary
    seed: int = 0
    grad_clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")

    @classmethod
    def create(
        cls,
        vocab: Vocabulary,
        mode: str,
        dim: int = 100,
        hidden: int = 100,
        seed: int = 0,
    ) -> "NeuralLM":
        rng = np.random.default_rng(seed)
        emb = rng.uniform(-0.5 / dim, 0.5 / dim, (vocab.padded_size, dim))
        fwd = GruCell.create(dim, hidden, rng)
        bwd = GruCell.create(dim, hidden, rng)
        w_out = rng.uniform(-0.08, 0.08, (vocab.size, 2 * hidden))
        return cls(
            mode=mode, emb=emb, fwd=fwd, bwd=bwd,
            w_out=w_out, b_out=np.zeros(vocab.size), vocab=vocab, seed=seed,
        )

    @property
    def dim(self) -> int:
        return self.emb.shape[1]

    @property
    def hidden(self) -> int:
        return self.fwd.hidden_size

    # -- encoding --------------------------------------------------------

    def _direction_inputs(
        self, context_ids: Sequence[int], blank_pos: int
    ) -> tuple[list[int], list[int]]:
        """Id sequences consumed by the forward and backward cells."""
        context = list(context_ids)
        if not 0 <= blank_pos <= len(context):
            raise ConfigError("blank position outside the sequence")
        if self.mode == PLLM:
            if not context:
                raise DataError("blanked sequence has no context herb")
            return context, context[::-1]
        fwd_ids = [self.vocab.bos_id] + context[:blank_pos]
        bwd_ids = [self.vocab.eos_id] + context[blank_pos:][::-1]
        return fwd_ids, bwd_ids

    def _encode_with_caches(self, context_ids: Sequence[int], blank_pos: int):
        fwd_ids, bwd_ids = self._direction_inputs(context_ids, blank_pos)
        h_fwd, fwd_caches = _gru_forward(self.fwd, [self.emb[i] for i in fwd_ids])
        h_bwd, bwd_caches = _gru_forward(self.bwd, [self.emb[i] for i in bwd_ids])
        h_c = np.concatenate([h_fwd, h_bwd])
        return h_c, (fwd_ids, fwd_caches, bwd_ids, bwd_caches)

    def encode(self, context_ids: Sequence[int], blank_pos: int) -> np.ndarray:
        """Context vector h_c: concatenated final states of both directions."""
        h_c, _ = self._encode_with_caches(context_ids, blank_pos)
        return h_c

    def logits(self, h_c: np.ndarray) -> np.ndarray:
        return self.w_out @ h_c + self.b_out

    # -- training --------------------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        out = {"emb": self.emb, "w_out": self.w_out, "b_out": self.b_out}
        for prefix, cell in (("fwd", self.fwd), ("bwd", self.bwd)):
            for name, arr in cell.fields().items():
                out[f"{prefix}.{name}"] = arr
        return out

    def loss_and_grads(
        self, context_ids: Sequence[int], blank_pos: int, target: int
    ):
        """Cross-entropy of the true herb and exact gradients for everything.

        Embedding gradients come back as a {row: vector} dictionary holding
        only the rows an example actually touched.
        """
        h_c, (fwd_ids, fwd_caches, bwd_ids, bwd_caches) = self._encode_with_caches(
            context_ids, blank_pos
        )
        probs = softmax(self.logits(h_c))
        # an underflowed probability yields an infinite loss; the trainer
        # aborts on it with epoch/batch diagnostics rather than masking it
        with np.errstate(divide="ignore"):
            loss = -float(np.log(probs[target]))

        dlogits = probs.copy()
        dlogits[target] -= 1.0
        grads: dict = {
            "w_out": np.outer(dlogits, h_c),
            "b_out": dlogits,
        }
        for prefix, cell in (("fwd", self.fwd), ("bwd", self.bwd)):
            for name, arr in cell.fields().items():
                grads[f"{prefix}.{name}"] = np.zeros_like(arr)

        dh_c = self.w_out.T @ dlogits
        d_fwd = _gru_backward(self.fwd, fwd_caches, dh_c[: self.hidden], grads, "fwd")
        d_bwd = _gru_backward(self.bwd, bwd_caches, dh_c[self.hidden :], grads, "bwd")

        d_emb: dict[int, np.ndarray] = {}
        for ids, dxs in ((fwd_ids, d_fwd), (bwd_ids, d_bwd)):
            for row, dx in zip(ids, dxs):
                if row in d_emb:
                    d_emb[row] = d_emb[row] + dx
                else:
                    d_emb[row] = dx.copy()
        grads["emb"] = d_emb
        return loss, grads

    def training_examples(self, corpus: Sequence[Prescription], rng) -> list:
        """One randomly chosen center position per usable prescription."""
        out = []
        for pres in corpus:
            if len(pres) < 2:
                continue
            out.append((pres, int(rng.integers(len(pres)))))
        return out

    def example_loss_and_grads(self, example, rng):
        pres, t = example
        ids = pres.herb_ids
        return self.loss_and_grads(ids[:t] + ids[t + 1 :], t, ids[t])

    # -- prediction ------------------------------------------------------

    def ranked_candidates(
        self, context_ids: Sequence[int], blank_pos: int, exclude: set[int]
    ) -> list[tuple[int, float]]:
        scores = self.logits(self.encode(context_ids, blank_pos))
        herbs = np.array(
            [c for c in self.vocab.herb_ids() if c not in exclude], dtype=np.int64
        )
        if herbs.size == 0:
            return []
        order = np.lexsort((herbs, -scores[herbs]))
        return [(int(herbs[i]), float(scores[herbs[i]])) for i in order]

    def predict_blank(self, context_ids: Sequence[int], blank_pos: int) -> int:
        """Best herb for the blank, never repeating one already present."""
        ranked = self.ranked_candidates(context_ids, blank_pos, set(context_ids))
        if not ranked:
            raise ConfigError("no candidate herb remains")
        return ranked[0][0]

    def ranked_next(self, draft_ids: Sequence[int]) -> list[tuple[int, float]]:
        return self.ranked_candidates(draft_ids, len(draft_ids), set(draft_ids))

    def predict_next(self, draft_ids: Sequence[int]) -> int:
        return self.predict_blank(draft_ids, len(draft_ids))

    def extract_embeddings(self) -> EmbeddingMatrix:
        """Input-embedding rows of the vocabulary ids, sentinels dropped."""
        return EmbeddingMatrix(
            vectors=self.emb[: self.vocab.size].copy(), vocab=self.vocab
        )
