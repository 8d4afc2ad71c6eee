"""Adam optimizer over a flat parameter vector with a freeze mask."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError


@dataclass
class AdamState:
    """Moment accumulators and hyperparameters for one parameter vector."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)

    @classmethod
    def for_params(cls, n_params: int, lr: float = 1e-3, **kw) -> "AdamState":
        return cls(lr=lr, m=np.zeros(n_params), v=np.zeros(n_params), **kw)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update, applied in place to unmasked entries.

    Entries where ``mask`` is False receive no update and keep their exact
    bit pattern; their moment accumulators stay untouched as well.
    """
    if params.shape != grads.shape:
        raise ValueError("params and grads must have identical shapes")
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite gradient")
    idx = slice(None) if mask is None else np.flatnonzero(mask)
    state.t += 1
    g = grads[idx]
    state.m[idx] = state.beta1 * state.m[idx] + (1.0 - state.beta1) * g
    state.v[idx] = state.beta2 * state.v[idx] + (1.0 - state.beta2) * g * g
    m_hat = state.m[idx] / (1.0 - state.beta1**state.t)
    v_hat = state.v[idx] / (1.0 - state.beta2**state.t)
    params[idx] = params[idx] - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state
