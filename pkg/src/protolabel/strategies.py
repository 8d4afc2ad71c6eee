"""Informativeness scoring and instance selection over an unlabeled pool.

Strategies: ``random``, ``least_confidence``, ``margin``, ``entropy``,
``ranked_batch``, ``random_batch``.  Uncertainty strategies maximize
their measure except margin, which minimizes.  Ties always break toward
the lowest instance id so selections are reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

STRATEGIES = (
    "random",
    "least_confidence",
    "margin",
    "entropy",
    "ranked_batch",
    "random_batch",
)


def least_confidence(p: np.ndarray) -> float:
    """1 minus the top predicted probability."""
    return float(1.0 - np.max(p))


def margin(p: np.ndarray) -> float:
    """Gap between the two largest probabilities; 1.0 when only one class."""
    p = np.asarray(p)
    if p.size < 2:
        return 1.0
    top2 = np.partition(p, -2)[-2:]
    return float(top2[1] - top2[0])


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats with the 0*log(0) = 0 convention."""
    p = np.asarray(p)
    nonzero = p[p > 0.0]
    return float(-(nonzero * np.log(nonzero)).sum())


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; zero vectors map to 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine similarity of a zero vector defined as 0")
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@dataclass
class QueryRequest:
    """One selection request over the current pool snapshot."""

    pool_probs: dict[str, np.ndarray]
    strategy: str
    batch_size: int = 1
    seed: int = 0
    pool_embeddings: dict[str, np.ndarray] | None = None
    labeled_embeddings: np.ndarray | None = None  # (L, M)
    alpha_override: float | None = None  # fixes ranked-batch alpha, for testing

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class QuerySelection:
    ids: list[str]
    scores: list[float]
    clamped: bool = False
    notes: list[str] = field(default_factory=list)


_MEASURES = {
    "least_confidence": (least_confidence, 1),
    "margin": (margin, -1),  # minimized
    "entropy": (entropy, 1),
}


def _sorted_ids(request: QueryRequest) -> list[str]:
    return sorted(request.pool_probs)


def select_single(request: QueryRequest) -> QuerySelection:
    """Pick the single most informative instance under the strategy."""
    sel = select(
        QueryRequest(
            pool_probs=request.pool_probs,
            strategy=request.strategy,
            batch_size=1,
            seed=request.seed,
            pool_embeddings=request.pool_embeddings,
            labeled_embeddings=request.labeled_embeddings,
            alpha_override=request.alpha_override,
        )
    )
    return sel


def select(request: QueryRequest) -> QuerySelection:
    """Select ``batch_size`` instances; clamps to the pool with a flag."""
    ids = _sorted_ids(request)
    if not ids:
        raise ValueError("cannot select from an empty pool")
    b = request.batch_size
    clamped = b > len(ids)
    if clamped:
        b = len(ids)

    if request.strategy == "ranked_batch":
        sel = _ranked_batch(request, ids, b)
    elif request.strategy in ("random", "random_batch"):
        rng = np.random.default_rng(request.seed)
        picks = rng.choice(len(ids), size=b, replace=False)
        sel = QuerySelection(
            ids=[ids[i] for i in picks], scores=[1.0 / len(ids)] * b
        )
    else:
        measure, sign = _MEASURES[request.strategy]
        scores = np.asarray([sign * measure(request.pool_probs[i]) for i in ids])
        # argsort is stable, so equal scores keep lowest-id-first order.
        order = np.argsort(-scores, kind="stable")[:b]
        sel = QuerySelection(
            ids=[ids[i] for i in order],
            scores=[float(sign * scores[i]) for i in order],
        )
    sel.clamped = clamped
    if clamped:
        sel.notes.append("batch size clamped to pool size")
    return sel


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    zero = norms == 0.0
    if np.any(zero):
        warnings.warn("cosine similarity of a zero vector defined as 0")
    return np.where(zero, 0.0, matrix / np.where(zero, 1.0, norms))


def _ranked_batch(request: QueryRequest, ids: list[str], b: int) -> QuerySelection:
    """Iterative rank-and-remove batch selection.

    Each round scores every remaining instance as
    ``alpha * (1 - max_cos_sim_to_labeled) + (1 - alpha) * least_confidence``
    with ``alpha = n_unlabeled / (n_unlabeled + n_labeled)``, takes the
    best, then counts it as labeled for both terms of the next round.
    """
    if request.pool_embeddings is None:
        raise ValueError("ranked_batch requires pool embeddings")
    emb = _normalize_rows(
        np.stack([np.asarray(request.pool_embeddings[i], dtype=np.float64) for i in ids])
    )
    if request.labeled_embeddings is not None and len(request.labeled_embeddings):
        labeled = _normalize_rows(np.asarray(request.labeled_embeddings, dtype=np.float64))
        phi = (emb @ labeled.T).max(axis=1)
        n_labeled = len(labeled)
    else:
        phi = np.zeros(len(ids))
        n_labeled = 0
    uncertainty = np.asarray([least_confidence(request.pool_probs[i]) for i in ids])

    remaining = np.ones(len(ids), dtype=bool)
    picked_ids: list[str] = []
    picked_scores: list[float] = []
    for _ in range(b):
        n_unlabeled = int(remaining.sum())
        if request.alpha_override is not None:
            alpha = request.alpha_override
        else:
            alpha = n_unlabeled / (n_unlabeled + n_labeled)
        scores = alpha * (1.0 - phi) + (1.0 - alpha) * uncertainty
        scores = np.where(remaining, scores, -np.inf)
        best = int(np.argmax(scores))  # first max wins: ids are sorted
        picked_ids.append(ids[best])
        picked_scores.append(float(scores[best]))
        remaining[best] = False
        n_labeled += 1
        # The fresh pick now counts toward the diversity term.
        phi = np.maximum(phi, emb @ emb[best])
    return QuerySelection(ids=picked_ids, scores=picked_scores)
