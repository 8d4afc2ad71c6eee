"""Layer primitives with explicit forward/backward passes.

All layers operate on float64 arrays.  Parameters live in a flat vector
owned by the model; each layer is handed contiguous views into it via
``bind`` so optimizer updates are visible without copying.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    """Base layer: stateless apart from bound parameter views."""

    name = "layer"

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        return []

    def bind(self, views: list[np.ndarray]) -> None:
        pass

    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def out_shape(self, in_shape: tuple[int, ...]) -> tuple[int, ...]:
        return in_shape

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None):
        raise NotImplementedError

    def backward(self, dout: np.ndarray, cache):
        """Return (dx, [param grads in param_shapes order])."""
        raise NotImplementedError


class Conv1D(Layer):
    """Valid-padding 1-D convolution, stride 1: (B, C, T) -> (B, F, T-k+1)."""

    def __init__(self, in_channels: int, filters: int, kernel: int, name: str = "conv1d"):
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = kernel
        self.name = name
        self.weight = None  # (F, C, k)
        self.bias = None  # (F,)

    def param_shapes(self):
        return [
            ("weight", (self.filters, self.in_channels, self.kernel)),
            ("bias", (self.filters,)),
        ]

    def bind(self, views):
        self.weight, self.bias = views

    def init_params(self, rng):
        fan_in = self.in_channels * self.kernel
        limit = np.sqrt(6.0 / fan_in)
        self.weight[...] = rng.uniform(-limit, limit, size=self.weight.shape)
        self.bias[...] = 0.0

    def out_shape(self, in_shape):
        c, t = in_shape
        return (self.filters, t - self.kernel + 1)

    def forward(self, x, train, rng=None):
        windows = sliding_window_view(x, self.kernel, axis=2)  # (B, C, L, k)
        out = np.tensordot(windows, self.weight, axes=([1, 3], [1, 2]))  # (B, L, F)
        out = out.transpose(0, 2, 1) + self.bias[None, :, None]
        return out, (x, windows)

    def backward(self, dout, cache):
        x, windows = cache
        dw = np.tensordot(dout, windows, axes=([0, 2], [0, 2]))  # (F, C, k)
        db = dout.sum(axis=(0, 2))
        # Full correlation with the flipped kernel recovers the input grad.
        pad = self.kernel - 1
        dpad = np.pad(dout, ((0, 0), (0, 0), (pad, pad)))
        dwin = sliding_window_view(dpad, self.kernel, axis=2)  # (B, F, T, k)
        wflip = self.weight[:, :, ::-1]
        dx = np.tensordot(dwin, wflip, axes=([1, 3], [0, 2]))  # (B, T, C)
        return dx.transpose(0, 2, 1), [dw, db]


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        self.name = name

    def forward(self, x, train, rng=None):
        return np.maximum(x, 0.0), x

    def backward(self, dout, cache):
        return dout * (cache > 0.0), []


class MaxPool1D(Layer):
    """Non-overlapping max pooling over the time axis; tail remainder dropped."""

    def __init__(self, pool: int = 2, name: str = "maxpool1d"):
        self.pool = pool
        self.name = name

    def out_shape(self, in_shape):
        c, t = in_shape
        return (c, t // self.pool)

    def forward(self, x, train, rng=None):
        b, c, t = x.shape
        l_out = t // self.pool
        xv = x[:, :, : l_out * self.pool].reshape(b, c, l_out, self.pool)
        idx = xv.argmax(axis=3)
        out = np.take_along_axis(xv, idx[..., None], axis=3)[..., 0]
        return out, (x.shape, idx)

    def backward(self, dout, cache):
        in_shape, idx = cache
        b, c, t = in_shape
        l_out = idx.shape[2]
        dxv = np.zeros((b, c, l_out, self.pool))
        np.put_along_axis(dxv, idx[..., None], dout[..., None], axis=3)
        dx = np.zeros(in_shape)
        dx[:, :, : l_out * self.pool] = dxv.reshape(b, c, l_out * self.pool)
        return dx, []


class Dropout(Layer):
    """Inverted dropout: active only in train mode, identity at inference."""

    def __init__(self, rate: float = 0.5, name: str = "dropout"):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.name = name

    def forward(self, x, train, rng=None):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("train-mode dropout requires an rng")
        keep = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * keep, keep

    def backward(self, dout, cache):
        if cache is None:
            return dout, []
        return dout * cache, []


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        self.name = name

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, train, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache), []


class Dense(Layer):
    def __init__(self, in_dim: int, out_dim: int, name: str = "dense"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.name = name
        self.weight = None  # (in, out)
        self.bias = None  # (out,)

    def param_shapes(self):
        return [("weight", (self.in_dim, self.out_dim)), ("bias", (self.out_dim,))]

    def bind(self, views):
        self.weight, self.bias = views

    def init_params(self, rng):
        limit = np.sqrt(6.0 / self.in_dim)
        self.weight[...] = rng.uniform(-limit, limit, size=self.weight.shape)
        self.bias[...] = 0.0

    def out_shape(self, in_shape):
        return (self.out_dim,)

    def forward(self, x, train, rng=None):
        return x @ self.weight + self.bias, x

    def backward(self, dout, cache):
        dw = cache.T @ dout
        db = dout.sum(axis=0)
        dx = dout @ self.weight.T
        return dx, [dw, db]
