"""Training loops: cross-entropy pretraining and MSE head fine-tuning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..errors import NumericError
from .losses import cross_entropy_from_logits, mse_softmax_from_logits
from .model import EncoderModel
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    loss: str = "cross_entropy"  # or "mse"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in ("cross_entropy", "mse"):
            raise ValueError(f"unknown loss {self.loss!r}")


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def check_finite_grads(model: EncoderModel, grads: np.ndarray) -> None:
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise NumericError(f"non-finite gradient in layer {model.param_layer_name(int(bad[0]))}")


def cross_entropy_pretrain(
    model: EncoderModel, dataset: Dataset, config: TrainConfig
) -> tuple[EncoderModel, list[float]]:
    """Train the full stack with cross-entropy; returns per-epoch mean loss."""
    if dataset.hidden_labels is None:
        raise ValueError("pretraining requires a labeled dataset")
    if dataset.n_classes != model.n_head_classes:
        raise ValueError(
            f"dataset has {dataset.n_classes} classes, head has {model.n_head_classes}"
        )
    x = dataset.values_array()
    y = np.asarray(dataset.hidden_labels)
    n = len(dataset)
    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(model.n_params, lr=config.lr)
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, logits, caches = model.forward_cached(x[batch], train=True, rng=rng)
            if config.loss == "cross_entropy":
                loss, dlogits = cross_entropy_from_logits(logits, y[batch])
            else:
                loss, dlogits = mse_softmax_from_logits(
                    logits, one_hot(y[batch], model.n_head_classes)
                )
            grads = model.backward(dlogits, caches)
            check_finite_grads(model, grads)
            adam_step(model.params, grads, state, model.trainable_mask)
            epoch_losses.append(loss)
        history.append(float(np.mean(epoch_losses)))
    return model, history


def mse_head_step(
    model: EncoderModel,
    x: np.ndarray,
    labels: np.ndarray,
    steps: int = 5,
    lr: float = 1e-3,
    state: AdamState | None = None,
) -> tuple[EncoderModel, AdamState, list[float]]:
    """Full-batch MSE fine-tuning of whatever the trainable mask allows.

    One-hot targets are built against the model's current head width.
    Returns the per-step loss trace along with the optimizer state so a
    caller may carry it across calls.
    """
    if len(x) == 0:
        raise ValueError("fine-tuning requires a nonempty labeled set")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    labels = np.asarray(labels)
    if labels.max(initial=0) >= model.n_head_classes:
        raise ValueError("label outside the head's class range")
    targets = one_hot(labels, model.n_head_classes)
    if state is None:
        state = AdamState.for_params(model.n_params, lr=lr)
    trace = []
    for _ in range(steps):
        _, logits, caches = model.forward_cached(x, train=False)
        loss, dlogits = mse_softmax_from_logits(logits, targets)
        grads = model.backward(dlogits, caches)
        check_finite_grads(model, grads)
        adam_step(model.params, grads, state, model.trainable_mask)
        trace.append(loss)
    return model, state, trace
