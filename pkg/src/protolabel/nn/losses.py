"""Loss functions and their gradients at the head logits."""

from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stabilized softmax."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_from_logits(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy and its gradient w.r.t. the logits."""
    b = logits.shape[0]
    probs = softmax(logits)
    picked = probs[np.arange(b), labels]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(b), labels] -= 1.0
    return loss, dlogits / b


def mse_softmax_from_logits(
    logits: np.ndarray, targets_onehot: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean squared error between one-hot targets and softmax outputs.

    The loss is the per-instance sum of squared class residuals, averaged
    over the batch; the gradient is propagated through the softmax.
    """
    b = logits.shape[0]
    probs = softmax(logits)
    residual = probs - targets_onehot
    loss = float((residual**2).sum(axis=1).mean())
    dprobs = 2.0 * residual / b
    inner = (dprobs * probs).sum(axis=1, keepdims=True)
    dlogits = probs * (dprobs - inner)
    return loss, dlogits
