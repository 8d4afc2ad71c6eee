"""Active labeling sessions over an unlabeled pool.

Three loop variants share one engine:

* ``atpn``        pre-trained encoder; every iteration fine-tunes the
                  feature layer and head by MSE on the labeled set while
                  the convolutions stay frozen.
* ``offline_pn``  pre-trained encoder used as-is; no parameter ever moves.
* ``online_pn``   encoder seeded randomly, no checkpoint; every iteration
                  takes Adam steps on the episodic prototype NLL with all
                  parameters trainable.

A session is a deterministic function of (config, dataset, label
sequence).  Every state transition is journaled, so a crashed session
resumes by replaying its journal and any simulated run can be re-executed
and byte-compared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

logger = logging.getLogger("protolabel.engine")

from .data import ChannelStats, Dataset, PoolState, standardize
from .errors import BudgetExhaustedError, ColdPoolError, ConfigError
from .journal import SessionJournal
from .nn.checkpoint import load_checkpoint
from .nn.model import EncoderModel, build_har_encoder, freeze_except_feature_and_head, rebuild_head
from .nn.optim import AdamState, adam_step
from .nn.train import check_finite_grads, mse_head_step
from .protonet import PrototypeSet, classify, compute_prototypes, protonet_nll
from .strategies import QueryRequest, least_confidence, select

ALGORITHMS = ("atpn", "offline_pn", "online_pn")

CHUNK = 512  # batch size for pool-wide inference passes


@dataclass(frozen=True)
class FineTuneConfig:
    steps: int = 5
    lr: float = 1e-3
    optimizer_reset: bool = True


@dataclass(frozen=True)
class SessionConfig:
    algorithm: str
    budget: int
    strategy: str = "margin"
    batch_size: int = 1
    seed: int = 0
    fine_tune: FineTuneConfig = field(default_factory=FineTuneConfig)
    checkpoint_path: str | None = None
    distance_kind: str = "euclidean"
    eval_cadence: int | None = None  # None: every iteration up to budget 200, else every 5th
    embed_dim: int = 64  # used when building a fresh encoder (online_pn)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.algorithm in ("atpn", "offline_pn") and not self.checkpoint_path:
            raise ConfigError(f"{self.algorithm} requires a checkpoint")
        if self.algorithm == "online_pn" and self.checkpoint_path:
            raise ConfigError("online_pn trains from scratch; remove the checkpoint")

    @property
    def cadence(self) -> int:
        if self.eval_cadence is not None:
            return self.eval_cadence
        return 1 if self.budget <= 200 else 5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        d = dict(d)
        if isinstance(d.get("fine_tune"), dict):
            d["fine_tune"] = FineTuneConfig(**d["fine_tune"])
        return cls(**d)


class SimulatedOracle:
    """Looks labels up in the dataset's hidden label list."""

    def __init__(self, dataset: Dataset):
        if dataset.hidden_labels is None:
            raise ValueError("simulated oracle needs hidden labels")
        self.dataset = dataset

    def label_of(self, instance_id: str) -> str:
        return self.dataset.class_names[self.dataset.label_of(instance_id)]


class PendingOracle:
    """A human annotator: labels arrive through commit_label, never here."""

    def label_of(self, instance_id: str) -> None:
        return None


@dataclass
class ClassRegistry:
    names: list[str] = field(default_factory=list)

    def resolve_or_add(self, name: str) -> tuple[int, bool]:
        if name in self.names:
            return self.names.index(name), False
        if not name:
            raise ValueError("class name must be nonempty")
        self.names.append(name)
        return len(self.names) - 1, True

    def __len__(self) -> int:
        return len(self.names)


class ActiveSession:
    """One labeling session; single logical writer, event-sourced."""

    def __init__(
        self,
        config: SessionConfig,
        pool_dataset: Dataset,
        oracle,
        journal: SessionJournal,
        test_dataset: Dataset | None = None,
    ):
        self.config = config
        self.oracle = oracle
        self.journal = journal
        self.display_dataset = pool_dataset  # raw values, for cards/plots

        model, stats = self._build_model(pool_dataset)
        self.model = model
        self.dataset, _ = standardize(pool_dataset, stats)
        self.test_dataset = None
        if test_dataset is not None:
            if test_dataset.class_names != pool_dataset.class_names:
                raise ConfigError("pool and test datasets must share class names")
            self.test_dataset, _ = standardize(test_dataset, stats)

        self.pool = PoolState.from_dataset(self.dataset)
        self.registry = ClassRegistry(
            list(pool_dataset.class_names) if pool_dataset.hidden_labels is not None else []
        )
        self.prototypes: PrototypeSet | None = None

        ss = np.random.SeedSequence(config.seed)
        child = ss.spawn(2)
        self.rng = np.random.default_rng(child[0])  # draws + strategy seeds
        self.head_rng = np.random.default_rng(child[1])  # head re-initialization

        self._values = self.dataset.values_array()
        self._id_pos = {inst.id: i for i, inst in enumerate(self.dataset.instances)}
        self._trunk = None  # pool trunk cache, valid while convs are frozen
        self._test_trunk = None
        self._adam: AdamState | None = None

        self.queries_issued = 0
        self.pending: list[str] = []
        self.pending_scores: list[float] = []
        self.pending_probs: dict[str, np.ndarray] = {}
        self.pending_class_names: list[str] = []
        self.phase = "init"
        self.status = "awaiting_label"
        self.last_mean_uncertainty = 0.0
        self.curve_points: list[dict] = []
        self._replay_labels: list[tuple[str, str]] = []

    # -- construction ---------------------------------------------------

    @classmethod
    def start(
        cls,
        config: SessionConfig,
        pool_dataset: Dataset,
        oracle,
        journal_path: str | Path,
        test_dataset: Dataset | None = None,
    ) -> "ActiveSession":
        journal = SessionJournal.create(
            journal_path, config.to_dict(), pool_dataset.content_hash()
        )
        session = cls(config, pool_dataset, oracle, journal, test_dataset)
        session._bootstrap()
        session._drain_pending()
        return session

    @classmethod
    def resume(
        cls,
        pool_dataset: Dataset,
        oracle,
        journal_path: str | Path,
        test_dataset: Dataset | None = None,
    ) -> "ActiveSession":
        """Rebuild a session from its journal, then continue with ``oracle``.

        Replays the recorded events through the normal engine path; the
        journal verifies every regenerated event against its history.
        """
        journal = SessionJournal.open(journal_path)
        if journal.header["dataset_hash"] != pool_dataset.content_hash():
            raise ConfigError("journal was recorded against a different dataset")
        config = SessionConfig.from_dict(journal.header["config"])
        session = cls(config, pool_dataset, oracle, journal, test_dataset)
        session._replay_labels = [
            (r["payload"]["instance_id"], r["payload"]["class_name"])
            for r in journal.events("label_committed")
        ]
        session._bootstrap()
        session._drain_pending()
        return session

    def _build_model(self, pool_dataset: Dataset) -> tuple[EncoderModel, ChannelStats]:
        c, t = pool_dataset.n_channels, pool_dataset.n_timesteps
        if self.config.algorithm == "online_pn":
            k = max(1, len(pool_dataset.class_names))
            model = build_har_encoder(
                c, t, k, embed_dim=self.config.embed_dim, seed=self.config.seed
            )
            _, stats = standardize(pool_dataset)  # no pretrain split exists
            return model, stats
        model, stats, _ = load_checkpoint(self.config.checkpoint_path)
        if (model.n_channels, model.n_timesteps) != (c, t):
            raise ConfigError(
                f"checkpoint expects (C={model.n_channels}, T={model.n_timesteps}), "
                f"pool has (C={c}, T={t})"
            )
        if stats is None:
            raise ConfigError("checkpoint carries no standardization stats")
        return model, stats

    # -- event helpers ----------------------------------------------------

    def _journal(self, event_type: str, payload: dict) -> None:
        self.journal.append(event_type, payload)

    def _bootstrap(self) -> None:
        ids = sorted(self.pool.unlabeled)
        pick = ids[int(self.rng.integers(len(ids)))]
        payload = {"instance_id": pick}
        if self.config.algorithm in ("atpn", "offline_pn"):
            # Metadata only: the expert label is the ground truth.
            x = self._values[self._id_pos[pick]][None]
            _, head_probs = self.model.forward(x)
            payload["encoder_pseudo_label"] = int(np.argmax(head_probs[0]))
        self._journal("init", payload)
        self.pending = [pick]
        self.pending_scores = [1.0]
        self.pending_probs = {}
        self.status = "awaiting_label"

    def _drain_pending(self) -> None:
        """Feed pending queries from replayed history or the oracle."""
        while self.pending:
            current = self.pending[0]
            if self._replay_labels:
                rec_id, rec_name = self._replay_labels.pop(0)
                if rec_id != current:
                    raise ConfigError(
                        f"journal replay out of order: recorded {rec_id}, pending {current}"
                    )
                self.commit_label(rec_id, rec_name)
                continue
            label = self.oracle.label_of(current)
            if label is None:
                self.status = "awaiting_label"
                return
            self.commit_label(current, label)

    # -- public surface ---------------------------------------------------

    def commit_label(self, instance_id: str, class_name: str) -> None:
        """Commit one expert label for the currently pending instance."""
        if self.status == "finished":
            raise BudgetExhaustedError("session already finished")
        if not self.pending or instance_id != self.pending[0]:
            raise ValueError(f"instance {instance_id} is not the pending query")
        index, grew = self.registry.resolve_or_add(class_name)
        if grew and self.config.algorithm == "atpn" and self.phase != "init":
            self._resize_head(len(self.registry))
        self.pool.commit(self.dataset.instances[self._id_pos[instance_id]], index)
        self._journal(
            "label_committed",
            {"instance_id": instance_id, "class_name": class_name, "class_index": index},
        )
        self.pending.pop(0)
        self.pending_scores = self.pending_scores[1:]
        if not self.pending:
            self._after_labels()

    def run_to_completion(self) -> "ActiveSession":
        """Drive the session with a non-blocking oracle until terminal."""
        self._drain_pending()
        if self.status != "finished":
            raise RuntimeError("oracle deferred a label; session parked")
        return self

    def predict_pool(self, ids: list[str] | None = None) -> dict[str, np.ndarray]:
        """Current classification probabilities for pool instances."""
        if self.prototypes is None:
            raise ColdPoolError("no prototypes exist yet")
        if ids is None:
            ids = sorted(self.pool.unlabeled)
        emb = self._embed_ids(ids)
        probs = classify(emb, self.prototypes)
        return {i: probs[j] for j, i in enumerate(ids)}

    def export_rows(self) -> list[tuple[str, str, str]]:
        """(instance id, class name, source) for every pool instance.

        Committed labels come first in commit order; the remainder of the
        pool follows in id order with the model's current prediction.
        """
        rows = [
            (li.instance.id, self.registry.names[li.label], "labeled")
            for li in self.pool.labeled
        ]
        remaining = sorted(self.pool.unlabeled)
        if remaining and self.prototypes is not None:
            probs = self.predict_pool(remaining)
            for i in remaining:
                k = self.prototypes.classes[int(np.argmax(probs[i]))]
                rows.append((i, self.registry.names[k], "predicted"))
        return rows

    # -- internals --------------------------------------------------------

    def _resize_head(self, k_new: int) -> None:
        self.model = rebuild_head(self.model, k_new, self.head_rng, keep_existing=True)
        self._adam = None  # parameter vector changed shape

    def _embed_ids(self, ids: list[str]) -> np.ndarray:
        idx = [self._id_pos[i] for i in ids]
        if self._trunk is not None:
            return self.model.embed_from_trunk(self._trunk[idx])
        return self._embed_full(self._values[idx])

    def _embed_full(self, x: np.ndarray) -> np.ndarray:
        chunks = [
            self.model.embed(x[s : s + CHUNK]) for s in range(0, len(x), CHUNK)
        ]
        return np.concatenate(chunks) if len(chunks) > 1 else chunks[0]

    def _build_trunk_caches(self) -> None:
        """Precompute conv-trunk outputs; valid because convs stay frozen."""
        if self.config.algorithm == "online_pn":
            return
        parts = [
            self.model.trunk_output(self._values[s : s + CHUNK])
            for s in range(0, len(self._values), CHUNK)
        ]
        self._trunk = np.concatenate(parts) if len(parts) > 1 else parts[0]
        if self.test_dataset is not None:
            tv = self.test_dataset.values_array()
            parts = [
                self.model.trunk_output(tv[s : s + CHUNK]) for s in range(0, len(tv), CHUNK)
            ]
            self._test_trunk = np.concatenate(parts) if len(parts) > 1 else parts[0]

    def _labeled_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = np.asarray([self._id_pos[li.instance.id] for li in self.pool.labeled])
        labels = np.asarray([li.label for li in self.pool.labeled])
        return idx, self._values[idx], labels

    def _after_labels(self) -> None:
        if self.phase == "init":
            self._init_update()
            self.phase = "iterate"
        else:
            self._iteration_update()
            self.queries_issued += 1

        idx, _, labels = self._labeled_arrays()
        emb = self._embed_ids([li.instance.id for li in self.pool.labeled])
        self.prototypes = compute_prototypes(emb, labels, self.config.distance_kind)

        terminal = (
            self.queries_issued >= self.config.budget or not self.pool.unlabeled
        )
        cadence_hit = (
            self.phase == "iterate"
            and self.queries_issued > 0
            and self.queries_issued % self.config.cadence == 0
        )
        pool_probs = None
        if not terminal or cadence_hit or self.queries_issued == 0:
            pool_probs = self._score_pool()
        if self.queries_issued == 0 or cadence_hit or terminal:
            self._evaluate()
        if terminal:
            self.status = "finished"
            self.pending = []
        else:
            self._issue_query(pool_probs)

    def _init_update(self) -> None:
        algo = self.config.algorithm
        if algo == "atpn":
            self.model = rebuild_head(
                self.model, max(1, len(self.registry)), self.head_rng, keep_existing=False
            )
            freeze_except_feature_and_head(self.model)
            self._build_trunk_caches()
            trace = self._fine_tune()
            self._journal(
                "model_updated",
                {"kind": "mse_fine_tune", "steps": len(trace),
                 "final_loss": trace[-1] if trace else None, "stage": "init"},
            )
        elif algo == "offline_pn":
            self.model.trainable_mask[:] = False
            self._build_trunk_caches()
            self._journal("model_updated", {"kind": "none", "stage": "init"})
        else:  # online_pn: random init happened at construction
            self._journal("model_updated", {"kind": "random_init", "stage": "init"})

    def _iteration_update(self) -> None:
        algo = self.config.algorithm
        if algo == "atpn":
            trace = self._fine_tune()
            self._journal(
                "model_updated",
                {"kind": "mse_fine_tune", "steps": len(trace),
                 "final_loss": trace[-1] if trace else None},
            )
        elif algo == "offline_pn":
            self._journal("model_updated", {"kind": "none"})
        else:
            trace = self._online_update()
            self._journal(
                "model_updated",
                {"kind": "protonet_nll", "steps": len(trace),
                 "final_loss": trace[-1] if trace else None},
            )

    def _fine_tune(self) -> list[float]:
        ft = self.config.fine_tune
        if ft.optimizer_reset or self._adam is None:
            self._adam = AdamState.for_params(self.model.n_params, lr=ft.lr)
        idx, x, labels = self._labeled_arrays()
        if self._trunk is not None:
            return self._fine_tune_from_trunk(self._trunk[idx], labels, ft.steps)
        _, self._adam, trace = mse_head_step(
            self.model, x, labels, steps=ft.steps, lr=ft.lr, state=self._adam
        )
        return trace

    def _fine_tune_from_trunk(self, trunk, labels, steps) -> list[float]:
        """MSE fine-tune running only the feature layer and head."""
        from .nn.losses import mse_softmax_from_logits
        from .nn.train import one_hot

        model = self.model
        targets = one_hot(labels, model.n_head_classes)
        until = model.feature_index - 1  # dense_feature
        trace = []
        for _ in range(steps):
            _, logits, caches = model.forward_from_trunk(trunk)
            loss, dlogits = mse_softmax_from_logits(logits, targets)
            grads = model.backward(
                dlogits, caches, until_layer=until
            )
            check_finite_grads(model, grads)
            adam_step(model.params, grads, self._adam, model.trainable_mask)
            trace.append(loss)
        return trace

    def _online_update(self) -> list[float]:
        ft = self.config.fine_tune
        if ft.optimizer_reset or self._adam is None:
            self._adam = AdamState.for_params(self.model.n_params, lr=ft.lr)
        _, x, labels = self._labeled_arrays()
        trace = []
        for _ in range(ft.steps):
            loss, grads = protonet_nll(self.model, x, labels, self.config.distance_kind)
            check_finite_grads(self.model, grads)
            adam_step(self.model.params, grads, self._adam, self.model.trainable_mask)
            trace.append(loss)
        return trace

    def _score_pool(self) -> dict[str, np.ndarray] | None:
        ids = sorted(self.pool.unlabeled)
        if not ids:
            self.last_mean_uncertainty = 0.0
            return None
        probs = self.predict_pool(ids)
        self.last_mean_uncertainty = float(
            np.mean([least_confidence(probs[i]) for i in ids])
        )
        return probs

    def _evaluate(self) -> None:
        accuracy = None
        if self.test_dataset is not None and self.test_dataset.hidden_labels is not None:
            if self._test_trunk is not None:
                emb = self.model.embed_from_trunk(self._test_trunk)
            else:
                emb = self._embed_full(self.test_dataset.values_array())
            probs = classify(emb, self.prototypes)
            classes = np.asarray(self.prototypes.classes)
            preds = classes[np.argmax(probs, axis=1)]
            truth = np.asarray(self.test_dataset.hidden_labels)
            accuracy = float(np.mean(preds == truth))
        point = {
            "query_count": len(self.pool.labeled),
            "accuracy": accuracy,
            "mean_pool_uncertainty": self.last_mean_uncertainty,
        }
        self.curve_points.append(point)
        self._journal("eval_point", point)

    def _issue_query(self, pool_probs: dict[str, np.ndarray] | None) -> None:
        if pool_probs is None:
            pool_probs = self._score_pool()
        ids = sorted(pool_probs)
        strategy = self.config.strategy
        substituted = False
        if self.prototypes.n_classes < 2 and strategy not in ("random", "random_batch"):
            # Uncertainty is undefined over a single class; fall back to a
            # seeded random draw until a second class appears.
            strategy = "random"
            substituted = True
            logger.debug(
                "single class seen; substituting random selection for %s",
                self.config.strategy,
            )
        request = QueryRequest(
            pool_probs=pool_probs,
            strategy=strategy,
            batch_size=min(self.config.batch_size, len(ids)),
            seed=int(self.rng.integers(2**31)),
        )
        if strategy == "ranked_batch":
            labeled_ids = [li.instance.id for li in self.pool.labeled]
            request.pool_embeddings = dict(zip(ids, self._embed_ids(ids)))
            request.labeled_embeddings = self._embed_ids(labeled_ids)
        selection = select(request)
        self.pending = list(selection.ids)
        self.pending_scores = list(selection.scores)
        self.pending_probs = {i: pool_probs[i] for i in selection.ids}
        self._journal(
            "query_issued",
            {
                "ids": selection.ids,
                "scores": selection.scores,
                "strategy": strategy,
                "substituted": substituted,
                "iteration": self.queries_issued + 1,
            },
        )
        self.status = "awaiting_label"

    # -- reporting --------------------------------------------------------

    @property
    def n_labeled(self) -> int:
        return len(self.pool.labeled)

    def progress(self) -> dict:
        return {
            "labeled": self.n_labeled,
            "budget": self.config.budget,
            "batch_size": self.config.batch_size,
            "queries_issued": self.queries_issued,
            "mean_pool_uncertainty": self.last_mean_uncertainty,
            "status": self.status,
            "class_names": list(self.registry.names),
        }

    def pending_card(self) -> dict | None:
        """Wire payload describing the instance awaiting a label."""
        if not self.pending:
            return None
        instance_id = self.pending[0]
        inst = self.display_dataset.instances[
            self.display_dataset.index_of(instance_id)
        ]
        if self.prototypes is not None and instance_id in self.pending_probs:
            probs = self.pending_probs[instance_id]
            class_names = [self.registry.names[k] for k in self.prototypes.classes]
            prob_list = [float(p) for p in probs]
        else:
            class_names = []
            prob_list = []
        return {
            "instance_id": instance_id,
            "channel_names": list(inst.channel_names),
            "values": inst.values.tolist(),
            "class_names": class_names,
            "probabilities": prob_list,
            "strategy_score": float(self.pending_scores[0]) if self.pending_scores else None,
            "query_index": self.queries_issued + (0 if self.phase == "init" else 1),
            "budget": self.config.budget,
        }
