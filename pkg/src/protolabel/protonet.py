"""Class prototypes and distance-based classification probabilities.

Classification is a softmax over negative distances between an embedding
and the per-class centroids of the labeled set.  Only classes that have
at least one labeled instance carry a prototype; probability vectors are
aligned to the sorted list of those classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ColdPoolError
from .nn.model import EncoderModel

DISTANCE_KINDS = ("euclidean", "squared_euclidean")


def distance(a: np.ndarray, b: np.ndarray, kind: str = "euclidean") -> float:
    """Distance between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    sq = float(((a - b) ** 2).sum())
    if kind == "squared_euclidean":
        return sq
    if kind == "euclidean":
        return float(np.sqrt(sq))
    raise ValueError(f"unknown distance kind {kind!r}")


@dataclass(frozen=True)
class PrototypeSet:
    """Per-class centroids in embedding space."""

    classes: tuple[int, ...]  # sorted class indices that have a prototype
    matrix: np.ndarray  # (K_seen, M)
    counts: tuple[int, ...]
    distance_kind: str = "euclidean"

    def __post_init__(self):
        if self.distance_kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.distance_kind!r}")
        if len(self.classes) != self.matrix.shape[0]:
            raise ValueError("classes and matrix rows must match")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("prototypes must be finite")
        if any(c < 1 for c in self.counts):
            raise ValueError("every stored class needs at least one instance")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def embed_dim(self) -> int:
        return self.matrix.shape[1]

    def vector(self, class_index: int) -> np.ndarray:
        return self.matrix[self.classes.index(class_index)]


def compute_prototypes(
    embeddings: np.ndarray,
    labels: np.ndarray,
    distance_kind: str = "euclidean",
) -> PrototypeSet:
    """Average embeddings per class; classes absent from labels get none."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if embeddings.ndim != 2 or len(embeddings) != len(labels):
        raise ValueError("need one embedding row per label")
    if len(labels) == 0:
        raise ValueError("cannot compute prototypes from an empty labeled set")
    classes = sorted(int(k) for k in np.unique(labels))
    rows = []
    counts = []
    for k in classes:
        members = embeddings[labels == k]
        rows.append(members.mean(axis=0))
        counts.append(len(members))
    return PrototypeSet(
        classes=tuple(classes),
        matrix=np.stack(rows),
        counts=tuple(counts),
        distance_kind=distance_kind,
    )


def _distances(embeddings: np.ndarray, protos: PrototypeSet) -> np.ndarray:
    """(N, K_seen) distance matrix under the prototype set's metric."""
    diff = embeddings[:, None, :] - protos.matrix[None, :, :]
    sq = (diff**2).sum(axis=2)
    if protos.distance_kind == "euclidean":
        return np.sqrt(sq)
    return sq


def classify(embedding: np.ndarray, protos: PrototypeSet) -> np.ndarray:
    """Softmax over negative distances to every stored prototype.

    Accepts one embedding (M,) or a batch (N, M); returns probabilities
    aligned to ``protos.classes`` with matching leading shape.
    """
    if protos.n_classes == 0:
        raise ColdPoolError("no prototypes exist yet")
    emb = np.asarray(embedding, dtype=np.float64)
    single = emb.ndim == 1
    if single:
        emb = emb[None]
    if emb.shape[1] != protos.embed_dim:
        raise ValueError(
            f"embedding length {emb.shape[1]} != prototype dim {protos.embed_dim}"
        )
    neg = -_distances(emb, protos)
    neg -= neg.max(axis=1, keepdims=True)
    e = np.exp(neg)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def protonet_nll(
    model: EncoderModel,
    x: np.ndarray,
    labels: np.ndarray,
    distance_kind: str = "euclidean",
) -> tuple[float, np.ndarray]:
    """Episodic negative log-likelihood of a labeled batch, with gradients.

    The batch doubles as its own support set: prototypes are recomputed
    from the batch embeddings inside the computation, so the returned
    flat parameter gradients flow through both the query embeddings and
    the prototypes.
    """
    labels = np.asarray(labels)
    emb, _, caches = model.forward_cached(x, train=False)
    protos = compute_prototypes(emb, labels, distance_kind)
    class_pos = {k: j for j, k in enumerate(protos.classes)}
    pos = np.asarray([class_pos[int(y)] for y in labels])

    n = len(labels)
    diff = emb[:, None, :] - protos.matrix[None, :, :]  # (N, K, M)
    sq = (diff**2).sum(axis=2)
    if distance_kind == "euclidean":
        dist = np.sqrt(sq)
    else:
        dist = sq
    neg = -dist
    neg -= neg.max(axis=1, keepdims=True)
    e = np.exp(neg)
    probs = e / e.sum(axis=1, keepdims=True)
    loss = float(-np.log(np.maximum(probs[np.arange(n), pos], 1e-300)).mean())

    dlogits = probs.copy()
    dlogits[np.arange(n), pos] -= 1.0
    dlogits /= n
    ddist = -dlogits
    if distance_kind == "euclidean":
        # d = ||e - c||: grad e = diff/d, grad c = -diff/d; a zero distance
        # only occurs for one-member classes where the composite grad is 0.
        safe = np.where(dist == 0.0, 1.0, dist)
        scaled = ddist[:, :, None] * diff / safe[:, :, None]
    else:
        scaled = ddist[:, :, None] * 2.0 * diff
    demb = scaled.sum(axis=1)  # query side
    dproto = -scaled.sum(axis=0)  # (K, M)
    for j, k in enumerate(protos.classes):
        members = labels == k
        demb[members] += dproto[j] / protos.counts[j]

    grads = model.backward(demb, caches, from_layer=model.feature_index)
    return loss, grads


def protonet_nll_value(
    model: EncoderModel,
    x: np.ndarray,
    labels: np.ndarray,
    distance_kind: str = "euclidean",
) -> float:
    """Loss value only (used by finite-difference checks)."""
    labels = np.asarray(labels)
    emb = model.embed(x)
    protos = compute_prototypes(emb, labels, distance_kind)
    probs = classify(emb, protos)
    class_pos = {k: j for j, k in enumerate(protos.classes)}
    pos = np.asarray([class_pos[int(y)] for y in labels])
    picked = probs[np.arange(len(labels)), pos]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())
