"""Finite-difference verification of the hand-rolled backward passes."""

from __future__ import annotations

import numpy as np

from .losses import cross_entropy_from_logits, mse_softmax_from_logits
from .model import EncoderModel
from .train import one_hot

LOSSES = ("cross_entropy", "mse", "protonet_nll")


def _loss_and_grads(model: EncoderModel, loss: str, x, labels):
    if loss == "protonet_nll":
        from ..protonet import protonet_nll

        return protonet_nll(model, x, labels)
    _, logits, caches = model.forward_cached(x, train=False)
    if loss == "cross_entropy":
        value, dlogits = cross_entropy_from_logits(logits, labels)
    else:
        value, dlogits = mse_softmax_from_logits(
            logits, one_hot(labels, model.n_head_classes)
        )
    return value, model.backward(dlogits, caches)


def _loss_value(model: EncoderModel, loss: str, x, labels) -> float:
    if loss == "protonet_nll":
        from ..protonet import protonet_nll_value

        return protonet_nll_value(model, x, labels)
    _, logits, _ = model.forward_cached(x, train=False, keep_cache=False)
    if loss == "cross_entropy":
        return cross_entropy_from_logits(logits, labels)[0]
    return mse_softmax_from_logits(logits, one_hot(labels, model.n_head_classes))[0]


def grad_check(
    model: EncoderModel,
    loss: str,
    x: np.ndarray,
    labels: np.ndarray,
    h: float = 1e-5,
    n_probe: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Probes ``n_probe`` randomly chosen parameters (all of them when the
    model is smaller).  Dropout is inactive throughout, so the loss is a
    deterministic function of the parameter vector.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    labels = np.asarray(labels)
    _, analytic = _loss_and_grads(model, loss, x, labels)
    rng = np.random.default_rng(seed)
    n = model.n_params
    probe = np.arange(n) if n <= n_probe else rng.choice(n, size=n_probe, replace=False)
    worst = 0.0
    for i in probe:
        orig = model.params[i]
        model.params[i] = orig + h
        up = _loss_value(model, loss, x, labels)
        model.params[i] = orig - h
        down = _loss_value(model, loss, x, labels)
        model.params[i] = orig
        numeric = (up - down) / (2.0 * h)
        denom = max(abs(analytic[i]), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic[i] - numeric) / denom)
    return worst
