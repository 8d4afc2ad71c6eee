"""Windowed time-series datasets: ingestion, synthesis, and preprocessing.

A dataset is an ordered collection of fixed-length multichannel windows.
Every instance in one dataset shares the same channel count C, window
length T, and channel names.  Labels, when present, are 0-based class
indices kept in a parallel list so that simulated-oracle runs can look
them up while live labeling sessions never see them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataFormatError, IngestionError, LabelError

HAR_WINDOW_LEN = 128


@dataclass(frozen=True)
class TimeSeriesInstance:
    """One fixed-length multichannel window, the unit of labeling."""

    id: str
    values: np.ndarray  # shape (C, T), float64
    channel_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D (C, T), got shape {values.shape}")
        c, t = values.shape
        if c < 1 or t < 2:
            raise ValueError(f"need C >= 1 and T >= 2, got ({c}, {t})")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"instance {self.id} contains non-finite values")
        if len(self.channel_names) != c:
            raise ValueError("channel_names length must equal channel count")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_timesteps(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabeledInstance:
    """An instance together with its committed class index."""

    instance: TimeSeriesInstance
    label: int

    def __post_init__(self):
        if self.label < 0:
            raise ValueError(f"label must be >= 0, got {self.label}")


@dataclass(frozen=True)
class Dataset:
    """Ordered instances plus optional hidden labels for simulated oracles."""

    instances: tuple[TimeSeriesInstance, ...]
    hidden_labels: tuple[int, ...] | None
    class_names: tuple[str, ...]
    split_tag: str = "pool"  # one of: pretrain, pool, test

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if self.hidden_labels is not None:
            labels = tuple(int(l) for l in self.hidden_labels)
            if len(labels) != len(self.instances):
                raise ValueError("hidden_labels must parallel instances")
            k = len(self.class_names)
            for i, l in enumerate(labels):
                if not 0 <= l < k:
                    raise LabelError(f"label {l} at row {i} outside class range 0..{k - 1}")
            object.__setattr__(self, "hidden_labels", labels)
        if self.instances:
            c0, t0 = self.instances[0].values.shape
            names0 = self.instances[0].channel_names
            for inst in self.instances:
                if inst.values.shape != (c0, t0) or inst.channel_names != names0:
                    raise ValueError("all instances must share (C, T) and channel names")

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def n_channels(self) -> int:
        return self.instances[0].n_channels

    @property
    def n_timesteps(self) -> int:
        return self.instances[0].n_timesteps

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def values_array(self) -> np.ndarray:
        """Stack all instances into one (N, C, T) array."""
        return np.stack([inst.values for inst in self.instances])

    def label_of(self, instance_id: str) -> int:
        if self.hidden_labels is None:
            raise LabelError("dataset has no hidden labels")
        idx = self.index_of(instance_id)
        return self.hidden_labels[idx]

    def index_of(self, instance_id: str) -> int:
        try:
            return self._id_index[instance_id]
        except AttributeError:
            object.__setattr__(
                self, "_id_index", {inst.id: i for i, inst in enumerate(self.instances)}
            )
            return self._id_index[instance_id]

    def without_labels(self) -> "Dataset":
        return replace(self, hidden_labels=None)

    def content_hash(self) -> str:
        """Stable hash of values + labels, for manifests and journals."""
        import hashlib

        h = hashlib.sha256()
        for inst in self.instances:
            h.update(inst.id.encode())
            h.update(np.ascontiguousarray(inst.values).tobytes())
        if self.hidden_labels is not None:
            h.update(np.asarray(self.hidden_labels, dtype=np.int64).tobytes())
        h.update(",".join(self.class_names).encode())
        return h.hexdigest()


@dataclass
class PoolState:
    """Mutable split of one dataset into unlabeled pool U and labeled set L."""

    unlabeled: set[str]
    labeled: list[LabeledInstance] = field(default_factory=list)
    per_class: dict[int, list[LabeledInstance]] = field(default_factory=dict)
    initial_size: int = 0

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "PoolState":
        ids = {inst.id for inst in dataset.instances}
        return cls(unlabeled=ids, initial_size=len(ids))

    def commit(self, instance: TimeSeriesInstance, label: int) -> None:
        if instance.id not in self.unlabeled:
            raise ValueError(f"instance {instance.id} is not in the unlabeled pool")
        self.unlabeled.discard(instance.id)
        li = LabeledInstance(instance, label)
        self.labeled.append(li)
        self.per_class.setdefault(label, []).append(li)

    @property
    def labeled_ids(self) -> set[str]:
        return {li.instance.id for li in self.labeled}

    def check_invariants(self) -> None:
        labeled_ids = self.labeled_ids
        assert not (self.unlabeled & labeled_ids), "pool and labeled set overlap"
        assert len(self.unlabeled) + len(self.labeled) == self.initial_size
        flattened = [li for group in self.per_class.values() for li in group]
        assert len(flattened) == len(self.labeled)


def _read_matrix(path: Path) -> np.ndarray:
    """Parse a whitespace-delimited float matrix, one window per row."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            tokens = line.split()
            if not tokens:
                continue
            try:
                row = [float(tok) for tok in tokens]
            except ValueError as exc:
                raise DataFormatError(f"{path.name} row {lineno}: non-numeric token ({exc})")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(
                    f"{path.name} row {lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path.name}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def load_uci_har(root_path: str | Path, split: str) -> Dataset:
    """Load one split of a UCI-HAR-format dataset.

    Expects ``<base>/Inertial Signals/*.txt`` channel files (one window of
    128 readings per row) and ``<base>/y_<split>.txt`` with 1-based labels,
    where ``base`` is ``root_path/<split>`` if that directory exists, else
    ``root_path`` itself.  Channel files are discovered by directory
    listing and ordered lexicographically.
    """
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    root = Path(root_path)
    base = root / split if (root / split).is_dir() else root
    signals_dir = base / "Inertial Signals"
    if not signals_dir.is_dir():
        raise IngestionError(f"missing directory: {signals_dir}")
    channel_files = sorted(signals_dir.glob("*.txt"))
    if not channel_files:
        raise IngestionError(f"no channel files in {signals_dir}")
    label_path = base / f"y_{split}.txt"
    if not label_path.is_file():
        raise IngestionError(f"missing label file: {label_path}")

    channels = []
    channel_names = []
    n_rows = None
    for path in channel_files:
        mat = _read_matrix(path)
        if mat.shape[1] != HAR_WINDOW_LEN:
            raise DataFormatError(
                f"{path.name}: expected {HAR_WINDOW_LEN} readings per window, got {mat.shape[1]}"
            )
        if n_rows is None:
            n_rows = mat.shape[0]
        elif mat.shape[0] != n_rows:
            raise DataFormatError(
                f"{path.name}: {mat.shape[0]} rows, other channels have {n_rows}"
            )
        channels.append(mat)
        name = path.stem
        suffix = f"_{split}"
        if name.endswith(suffix):
            name = name[: -len(suffix)]
        channel_names.append(name)

    raw_labels = _read_matrix(label_path)
    if raw_labels.shape[1] != 1:
        raise DataFormatError(f"{label_path.name}: expected one label per row")
    if raw_labels.shape[0] != n_rows:
        raise DataFormatError(
            f"{label_path.name}: {raw_labels.shape[0]} labels for {n_rows} windows"
        )
    labels_1based = raw_labels[:, 0]
    if not np.all(labels_1based == np.round(labels_1based)):
        raise DataFormatError(f"{label_path.name}: labels must be integers")
    labels_1based = labels_1based.astype(int)

    class_names = _har_class_names(root, base)
    k = len(class_names) if class_names else int(labels_1based.max())
    if not class_names:
        class_names = tuple(f"class_{i}" for i in range(k))
    bad = np.flatnonzero((labels_1based < 1) | (labels_1based > k))
    if bad.size:
        raise LabelError(
            f"{label_path.name} row {bad[0]}: label {labels_1based[bad[0]]} outside 1..{k}"
        )

    stacked = np.stack(channels, axis=1)  # (N, C, 128)
    names = tuple(channel_names)
    instances = tuple(
        TimeSeriesInstance(id=f"{split}-{i:06d}", values=stacked[i], channel_names=names)
        for i in range(n_rows)
    )
    return Dataset(
        instances=instances,
        hidden_labels=tuple(int(l) - 1 for l in labels_1based),
        class_names=class_names,
        split_tag="pretrain" if split == "train" else "test",
    )


def _har_class_names(root: Path, base: Path) -> tuple[str, ...]:
    for candidate in (root / "activity_labels.txt", base / "activity_labels.txt"):
        if candidate.is_file():
            names = []
            for line in candidate.read_text().splitlines():
                parts = line.split()
                if len(parts) >= 2:
                    names.append(parts[1])
            if names:
                return tuple(names)
    return ()


def resample_linear(instance: TimeSeriesInstance, target_len: int) -> TimeSeriesInstance:
    """Resample each channel to ``target_len`` points by linear interpolation.

    The new sample positions span the original index range [0, T-1]
    uniformly, so the first and last readings are preserved exactly.
    """
    if target_len < 2:
        raise ValueError(f"target_len must be >= 2, got {target_len}")
    t = instance.n_timesteps
    if target_len == t:
        return instance
    old_x = np.arange(t, dtype=np.float64)
    new_x = np.linspace(0.0, t - 1.0, target_len)
    values = np.stack([np.interp(new_x, old_x, ch) for ch in instance.values])
    return replace(instance, values=values)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the sinusoid-template synthetic generator."""

    n_classes: int
    n_per_class: int
    n_channels: int = 1
    n_timesteps: int = 64
    noise_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.n_per_class < 1:
            raise ValueError("need at least 1 instance per class")


def _class_template(k: int, n_channels: int, n_timesteps: int) -> np.ndarray:
    """Deterministic per-class sinusoid template, shape (C, T).

    Class k gets a distinctive base frequency and phase; channels are
    harmonics of the base so multichannel instances stay correlated the
    way body-worn sensor axes are.
    """
    t = np.linspace(0.0, 1.0, n_timesteps)
    freq = 1.0 + 1.5 * k
    phase = 2.0 * np.pi * k / max(1, 7)
    rows = []
    for c in range(n_channels):
        amp = 1.0 + 0.3 * c
        rows.append(amp * np.sin(2.0 * np.pi * freq * (c % 2 + 1) * t + phase + 0.9 * c))
    return np.stack(rows)


def make_synthetic(spec: SyntheticSpec, split_tag: str = "pool", id_prefix: str = "syn") -> Dataset:
    """Generate a deterministic synthetic dataset from sinusoid templates."""
    rng = np.random.default_rng(spec.seed)
    instances = []
    labels = []
    templates = [
        _class_template(k, spec.n_channels, spec.n_timesteps) for k in range(spec.n_classes)
    ]
    names = tuple(f"ch{c}" for c in range(spec.n_channels))
    i = 0
    for k in range(spec.n_classes):
        for _ in range(spec.n_per_class):
            noise = rng.normal(0.0, spec.noise_std, size=templates[k].shape)
            instances.append(
                TimeSeriesInstance(
                    id=f"{id_prefix}-{i:06d}",
                    values=templates[k] + noise,
                    channel_names=names,
                )
            )
            labels.append(k)
            i += 1
    # Deterministic shuffle so classes are interleaved like a real pool.
    order = rng.permutation(len(instances))
    instances = [instances[j] for j in order]
    labels = [labels[j] for j in order]
    # Re-id in storage order so instance ids stay sorted and unique.
    instances = [
        replace(inst, id=f"{id_prefix}-{j:06d}") for j, inst in enumerate(instances)
    ]
    return Dataset(
        instances=tuple(instances),
        hidden_labels=tuple(labels),
        class_names=tuple(f"class_{k}" for k in range(spec.n_classes)),
        split_tag=split_tag,
    )


def subset_classes(dataset: Dataset, classes: list[int] | tuple[int, ...]) -> Dataset:
    """Restrict a labeled dataset to the given classes, remapping labels.

    The surviving classes are renumbered 0..len(classes)-1 in the order
    given; instance order is otherwise preserved.
    """
    if dataset.hidden_labels is None:
        raise ValueError("subset_classes requires hidden labels")
    remap = {k: j for j, k in enumerate(classes)}
    instances, labels = [], []
    for inst, label in zip(dataset.instances, dataset.hidden_labels):
        if label in remap:
            instances.append(inst)
            labels.append(remap[label])
    return Dataset(
        instances=tuple(instances),
        hidden_labels=tuple(labels),
        class_names=tuple(dataset.class_names[k] for k in classes),
        split_tag=dataset.split_tag,
    )


def split_dataset(
    dataset: Dataset, first_size: int, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Seeded disjoint split into (first ``first_size`` instances, rest)."""
    n = len(dataset)
    if not 0 < first_size < n:
        raise ValueError(f"first_size must be in 1..{n - 1}, got {first_size}")
    order = np.random.default_rng(seed).permutation(n)
    def take(indices, tag):
        return Dataset(
            instances=tuple(dataset.instances[i] for i in indices),
            hidden_labels=(
                tuple(dataset.hidden_labels[i] for i in indices)
                if dataset.hidden_labels is not None
                else None
            ),
            class_names=dataset.class_names,
            split_tag=tag,
        )
    return take(order[:first_size], "pool"), take(order[first_size:], "test")


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean/std used for z-normalization."""

    mean: np.ndarray  # shape (C,)
    std: np.ndarray  # shape (C,); zero-variance channels keep std 1.0

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelStats":
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            std=np.asarray(d["std"], dtype=np.float64),
        )


def standardize(
    dataset: Dataset, stats: ChannelStats | None = None
) -> tuple[Dataset, ChannelStats]:
    """Z-normalize each channel; return the stats so other splits can reuse them.

    When ``stats`` is omitted they are computed from this dataset (pooled
    over all instances and timesteps).  Channels with zero variance are
    centered but not scaled.
    """
    values = dataset.values_array()  # (N, C, T)
    if stats is None:
        mean = values.mean(axis=(0, 2))
        std = values.std(axis=(0, 2))
        std = np.where(std == 0.0, 1.0, std)
        stats = ChannelStats(mean=mean, std=std)
    elif stats.mean.shape[0] != dataset.n_channels:
        raise ValueError(
            f"stats have {stats.mean.shape[0]} channels, dataset has {dataset.n_channels}"
        )
    normalized = (values - stats.mean[None, :, None]) / stats.std[None, :, None]
    instances = tuple(
        replace(inst, values=normalized[i]) for i, inst in enumerate(dataset.instances)
    )
    return replace(dataset, instances=instances), stats


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Persist a dataset as an .npz archive."""
    path = Path(path)
    arrays = {
        "values": dataset.values_array(),
        "ids": np.asarray([inst.id for inst in dataset.instances]),
        "channel_names": np.asarray(dataset.instances[0].channel_names),
        "class_names": np.asarray(dataset.class_names),
        "split_tag": np.asarray(dataset.split_tag),
    }
    if dataset.hidden_labels is not None:
        arrays["labels"] = np.asarray(dataset.hidden_labels, dtype=np.int64)
    np.savez_compressed(path, **arrays)


def load_dataset(path: str | Path) -> Dataset:
    """Load a dataset saved by :func:`save_dataset`."""
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"missing dataset file: {path}")
    with np.load(path, allow_pickle=False) as npz:
        values = npz["values"]
        ids = [str(s) for s in npz["ids"]]
        channel_names = tuple(str(s) for s in npz["channel_names"])
        class_names = tuple(str(s) for s in npz["class_names"])
        split_tag = str(npz["split_tag"])
        labels = tuple(int(l) for l in npz["labels"]) if "labels" in npz else None
    instances = tuple(
        TimeSeriesInstance(id=ids[i], values=values[i], channel_names=channel_names)
        for i in range(values.shape[0])
    )
    return Dataset(
        instances=instances,
        hidden_labels=labels,
        class_names=class_names,
        split_tag=split_tag,
    )
