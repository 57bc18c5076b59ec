"""Adam optimization with dev-accuracy early stopping.

Any model exposing ``params``, ``training_examples``,
``example_loss_and_grads`` and ``predict_blank`` can be fitted. Gradients
may be dense arrays or, for two-dimensional parameters, {row: vector}
dictionaries; sparse rows update only their own moment slices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import PredictionItem, Prescription, make_prediction_testset
from .errors import ConfigError, DataError, TrainingError

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 3
    seed: int = 0
    clip_norm: float | None = None  # None defers to the model's own default

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("beta coefficients must lie in [0, 1)")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch size and max epochs must be at least 1")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def init(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_update(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict,
    config: TrainConfig,
) -> None:
    """One Adam step, in place.

    m <- b1 m + (1-b1) g ; v <- b2 v + (1-b2) g^2
    theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)

    Row-sparse gradients touch only their rows, including the moments.
    """
    state.step += 1
    lr = config.learning_rate
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for name, g in grads.items():
        if name not in params:
            raise ConfigError(f"gradient for unknown parameter {name!r}")
        p, m, v = params[name], state.m[name], state.v[name]
        if isinstance(g, dict):
            for row, gr in g.items():
                if not np.all(np.isfinite(gr)):
                    raise TrainingError(f"non-finite gradient in {name}[{row}]")
                m[row] = b1 * m[row] + (1 - b1) * gr
                v[row] = b2 * v[row] + (1 - b2) * gr * gr
                p[row] -= lr * (m[row] / bc1) / (np.sqrt(v[row] / bc2) + config.eps)
        else:
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient in {name}")
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + config.eps)


def _accumulate(total: dict, grads: dict) -> None:
    for name, g in grads.items():
        if isinstance(g, dict):
            rows = total.setdefault(name, {})
            for row, gr in g.items():
                if row in rows:
                    rows[row] = rows[row] + gr
                else:
                    rows[row] = gr.copy()
        else:
            if name in total:
                total[name] += g
            else:
                total[name] = g.copy()


def _scale(grads: dict, factor: float) -> None:
    for g in grads.values():
        if isinstance(g, dict):
            for row in g:
                g[row] = g[row] * factor
        else:
            g *= factor


def _global_norm(grads: dict) -> float:
    sq = 0.0
    for g in grads.values():
        if isinstance(g, dict):
            sq += sum(float(np.sum(r * r)) for r in g.values())
        else:
            sq += float(np.sum(g * g))
    return float(np.sqrt(sq))


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_accuracy: float


@dataclass
class TrainingHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_accuracy: float = float("-inf")


def _snapshot(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: p.copy() for k, p in params.items()}


def _restore(params: dict[str, np.ndarray], snap: dict[str, np.ndarray]) -> None:
    for k, p in params.items():
        np.copyto(p, snap[k])


def dev_accuracy(model, items: Sequence[PredictionItem]) -> float:
    hits = sum(
        1
        for it in items
        if model.predict_blank(it.context_ids, it.blank_pos) == it.answer
    )
    return hits / len(items)


def fit(
    model,
    train_corpus: Sequence[Prescription],
    dev_corpus: Sequence[Prescription],
    config: TrainConfig,
) -> TrainingHistory:
    """Train until dev blank-prediction accuracy stops improving.

    Training items are reshuffled every epoch with the seeded generator.
    The dev blanks are sampled once per run. Training stops when the
    running best accuracy has not strictly increased for ``patience``
    consecutive epochs, or at ``max_epochs``; the parameters with the best
    dev accuracy are restored before returning.
    """
    config.validate()
    if not dev_corpus:
        raise ConfigError("a non-empty dev corpus is required for early stopping")
    rng = np.random.default_rng(config.seed)
    dev_items = make_prediction_testset(dev_corpus, seed=config.seed, vocab=model.vocab)
    if not dev_items:
        raise DataError("dev corpus yields no blank-prediction items")

    params = model.params()
    state = AdamState.init(params)
    clip = config.clip_norm
    if clip is None:
        clip = getattr(model, "grad_clip_norm", None)

    history = TrainingHistory()
    best_snap = _snapshot(params)
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        examples = model.training_examples(train_corpus, rng)
        if not examples:
            raise DataError("no usable training example in the corpus")
        order = rng.permutation(len(examples))
        losses = []
        for start in range(0, len(order), config.batch_size):
            chunk = order[start : start + config.batch_size]
            batch_grads: dict = {}
            for idx in chunk:
                loss, grads = model.example_loss_and_grads(examples[idx], rng)
                if not np.isfinite(loss):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, "
                        f"batch {start // config.batch_size}"
                    )
                losses.append(loss)
                _accumulate(batch_grads, grads)
            _scale(batch_grads, 1.0 / len(chunk))
            if clip is not None:
                norm = _global_norm(batch_grads)
                if norm > clip:
                    _scale(batch_grads, clip / norm)
            adam_update(state, params, batch_grads, config)

        acc = dev_accuracy(model, dev_items)
        history.epochs.append(EpochStats(epoch, float(np.mean(losses)), acc))
        logger.info("epoch %d: loss %.4f dev accuracy %.4f", epoch, np.mean(losses), acc)
        if acc > history.best_accuracy:
            history.best_accuracy = acc
            history.best_epoch = epoch
            best_snap = _snapshot(params)
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    _restore(params, best_snap)
    return history
