"""Encoder model: layer stack over a single flat parameter vector.

The stack for windowed signals is

    conv1d(32, 7) -> relu -> conv1d(32, 7) -> relu -> maxpool(2)
    -> dropout(0.5) -> flatten -> dense(M) -> relu   [feature layer]
    -> dense(K) (+ softmax)                          [head]

The embedding tap is the feature-layer output (after its relu).  A
boolean ``trainable_mask`` parallels the parameter vector; the optimizer
never touches masked-off entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Conv1D, Dense, Dropout, Flatten, Layer, MaxPool1D, ReLU
from .losses import softmax

CONV_FILTERS = 32
CONV_KERNEL = 7
POOL_SIZE = 2
DROPOUT_RATE = 0.5
MIN_WINDOW_LEN = 2 * (CONV_KERNEL - 1) + POOL_SIZE  # two valid convs + one pool step


@dataclass
class EncoderModel:
    layers: list[Layer]
    params: np.ndarray  # flat float64 vector
    trainable_mask: np.ndarray  # flat bool vector
    slices: list[list[slice]]  # per layer, per parameter
    n_channels: int
    n_timesteps: int
    embed_dim: int
    n_head_classes: int
    feature_index: int = field(default=0)  # index of the relu after dense(M)
    head_index: int = field(default=0)  # index of the head dense layer

    @property
    def n_params(self) -> int:
        return self.params.size

    def view(self, layer_idx: int, param_idx: int) -> np.ndarray:
        sl = self.slices[layer_idx][param_idx]
        shape = self.layers[layer_idx].param_shapes()[param_idx][1]
        return self.params[sl].reshape(shape)

    def _bind_all(self) -> None:
        for i, layer in enumerate(self.layers):
            shapes = layer.param_shapes()
            if shapes:
                layer.bind([self.view(i, j) for j in range(len(shapes))])

    def param_layer_name(self, flat_index: int) -> str:
        for i, layer_slices in enumerate(self.slices):
            for sl in layer_slices:
                if sl.start <= flat_index < sl.stop:
                    return self.layers[i].name
        return "unknown"

    def layer_param_indices(self, layer_names: set[str]) -> np.ndarray:
        """Flat indices of every parameter belonging to the named layers."""
        picks = []
        for i, layer in enumerate(self.layers):
            if layer.name in layer_names:
                for sl in self.slices[i]:
                    picks.append(np.arange(sl.start, sl.stop))
        if not picks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(picks)

    def forward(
        self,
        x: np.ndarray,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Run a batch through the stack; return (embeddings, head_probs)."""
        emb, logits, _ = self.forward_cached(x, train=train, rng=rng, keep_cache=False)
        return emb, softmax(logits)

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Deterministic embeddings for a batch, inference mode."""
        return self.forward(x, train=False)[0]

    def trunk_output(self, x: np.ndarray) -> np.ndarray:
        """Inference output of the flatten layer (everything before the
        feature dense layer).  Cacheable while the convolutions are frozen."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        out = x
        for layer in self.layers:
            out, _ = layer.forward(out, train=False)
            if layer.name == "flatten":
                return out
        raise RuntimeError("model has no flatten layer")

    def embed_from_trunk(self, trunk: np.ndarray) -> np.ndarray:
        """Feature-layer embedding given a cached trunk output."""
        feat = self.layers[self.feature_index - 1]  # dense_feature
        return np.maximum(trunk @ feat.weight + feat.bias, 0.0)

    def forward_from_trunk(self, trunk: np.ndarray):
        """Run only the feature layer and head from a cached trunk output.

        Returns (embeddings, logits, caches) with the cache list padded so
        indices line up with the full layer stack for ``backward``.
        """
        start = self.feature_index - 1  # dense_feature
        caches: list = [None] * start
        out = trunk
        emb = None
        for i in range(start, len(self.layers)):
            out, cache = self.layers[i].forward(out, train=False)
            caches.append(cache)
            if i == self.feature_index:
                emb = out
        return emb, out, caches

    def forward_cached(
        self,
        x: np.ndarray,
        train: bool,
        rng: np.random.Generator | None = None,
        keep_cache: bool = True,
    ):
        """Forward pass keeping per-layer caches for a later backward walk."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        if x.shape[1:] != (self.n_channels, self.n_timesteps):
            raise ValueError(
                f"expected input shape (B, {self.n_channels}, {self.n_timesteps}), "
                f"got {x.shape}"
            )
        caches = []
        out = x
        emb = None
        for i, layer in enumerate(self.layers):
            out, cache = layer.forward(out, train, rng)
            caches.append(cache if keep_cache else None)
            if i == self.feature_index:
                emb = out
        return emb, out, caches

    def backward(
        self,
        dout: np.ndarray,
        caches: list,
        from_layer: int | None = None,
        until_layer: int = 0,
    ) -> np.ndarray:
        """Backpropagate ``dout`` from ``from_layer`` down; return flat grads.

        ``from_layer`` defaults to the last layer (gradient given at the
        head logits); pass ``feature_index`` to start from the embedding
        tap instead.  ``until_layer`` stops the walk early when everything
        below is frozen; those parameters keep zero gradients.
        """
        if from_layer is None:
            from_layer = len(self.layers) - 1
        grads = np.zeros_like(self.params)
        d = dout
        for i in range(from_layer, until_layer - 1, -1):
            d, param_grads = self.layers[i].backward(d, caches[i])
            for sl, g in zip(self.slices[i], param_grads):
                grads[sl] = g.ravel()
        return grads

    def clone(self) -> "EncoderModel":
        m = EncoderModel(
            layers=_build_layers(self.n_channels, self.n_timesteps, self.embed_dim,
                                 self.n_head_classes),
            params=self.params.copy(),
            trainable_mask=self.trainable_mask.copy(),
            slices=[list(s) for s in self.slices],
            n_channels=self.n_channels,
            n_timesteps=self.n_timesteps,
            embed_dim=self.embed_dim,
            n_head_classes=self.n_head_classes,
            feature_index=self.feature_index,
            head_index=self.head_index,
        )
        m._bind_all()
        return m


def _build_layers(c: int, t: int, embed_dim: int, k_head: int) -> list[Layer]:
    conv_out1 = t - CONV_KERNEL + 1
    conv_out2 = conv_out1 - CONV_KERNEL + 1
    pooled = conv_out2 // POOL_SIZE
    flat_dim = CONV_FILTERS * pooled
    return [
        Conv1D(c, CONV_FILTERS, CONV_KERNEL, name="conv1d_0"),
        ReLU(name="relu_0"),
        Conv1D(CONV_FILTERS, CONV_FILTERS, CONV_KERNEL, name="conv1d_1"),
        ReLU(name="relu_1"),
        MaxPool1D(POOL_SIZE, name="maxpool"),
        Dropout(DROPOUT_RATE, name="dropout"),
        Flatten(name="flatten"),
        Dense(flat_dim, embed_dim, name="dense_feature"),
        ReLU(name="relu_feature"),
        Dense(embed_dim, k_head, name="dense_head"),
    ]


def _assemble(layers: list[Layer], c: int, t: int, embed_dim: int,
              k_head: int) -> EncoderModel:
    slices = []
    offset = 0
    for layer in layers:
        layer_slices = []
        for _, shape in layer.param_shapes():
            size = int(np.prod(shape))
            layer_slices.append(slice(offset, offset + size))
            offset += size
        slices.append(layer_slices)
    model = EncoderModel(
        layers=layers,
        params=np.zeros(offset),
        trainable_mask=np.ones(offset, dtype=bool),
        slices=slices,
        n_channels=c,
        n_timesteps=t,
        embed_dim=embed_dim,
        n_head_classes=k_head,
        feature_index=next(i for i, l in enumerate(layers) if l.name == "relu_feature"),
        head_index=next(i for i, l in enumerate(layers) if l.name == "dense_head"),
    )
    model._bind_all()
    return model


def build_har_encoder(
    c: int, t: int, k_head: int, embed_dim: int = 64, seed: int = 0
) -> EncoderModel:
    """Construct and seed-initialize the windowed-signal encoder."""
    if t < MIN_WINDOW_LEN:
        raise ValueError(
            f"window length {t} too short; two conv({CONV_KERNEL}) layers plus "
            f"pool({POOL_SIZE}) need at least {MIN_WINDOW_LEN} timesteps"
        )
    if c < 1 or k_head < 1 or embed_dim < 1:
        raise ValueError("c, k_head, and embed_dim must all be >= 1")
    model = _assemble(_build_layers(c, t, embed_dim, k_head), c, t, embed_dim, k_head)
    rng = np.random.default_rng(seed)
    for layer in model.layers:
        layer.init_params(rng)
    return model


def freeze_except_feature_and_head(model: EncoderModel) -> EncoderModel:
    """Mark everything but the feature dense layer and the head as frozen."""
    model.trainable_mask[:] = False
    idx = model.layer_param_indices({"dense_feature", "dense_head"})
    model.trainable_mask[idx] = True
    return model


def rebuild_head(
    model: EncoderModel,
    k_new: int,
    rng: np.random.Generator,
    keep_existing: bool = False,
) -> EncoderModel:
    """Return a model whose head has ``k_new`` output classes.

    All non-head parameters (and their mask bits) are copied bitwise.
    With ``keep_existing`` the first min(K_old, K_new) head columns are
    retained and only new columns are seeded; otherwise the whole head is
    re-initialized.
    """
    if k_new < 1:
        raise ValueError("head must have at least one class")
    new = _assemble(
        _build_layers(model.n_channels, model.n_timesteps, model.embed_dim, k_new),
        model.n_channels,
        model.n_timesteps,
        model.embed_dim,
        k_new,
    )
    for i, layer in enumerate(new.layers):
        if not layer.param_shapes():
            continue
        for j in range(len(layer.param_shapes())):
            if layer.name != "dense_head":
                new.params[new.slices[i][j]] = model.params[model.slices[i][j]]
                new.trainable_mask[new.slices[i][j]] = model.trainable_mask[
                    model.slices[i][j]
                ]
    head = new.layers[new.head_index]
    head.init_params(rng)
    if keep_existing:
        k_keep = min(model.n_head_classes, k_new)
        old_head = model.layers[model.head_index]
        head.weight[:, :k_keep] = old_head.weight[:, :k_keep]
        head.bias[:k_keep] = old_head.bias[:k_keep]
    # Head trainability follows the feature layer's current mask state.
    head_idx = new.layer_param_indices({"dense_head"})
    feat_idx = new.layer_param_indices({"dense_feature"})
    new.trainable_mask[head_idx] = bool(np.all(new.trainable_mask[feat_idx]))
    return new
