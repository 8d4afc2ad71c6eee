"""Learning curves over repeated sessions with bootstrap confidence bands."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .engine import ActiveSession, SessionConfig, SimulatedOracle


def accuracy(predictions, labels) -> float:
    """Fraction of matching entries."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ValueError("predictions and labels must have equal nonzero length")
    return float(np.mean(predictions == labels))


def bootstrap_ci(
    values, n_resamples: int = 1000, level: float = 0.95, seed: int = 0
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of ``values``."""
    values = np.asarray(values, dtype=np.float64)
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    if values.size < 2:
        warnings.warn("bootstrap over fewer than 2 values gives a degenerate interval")
        v = float(values[0]) if values.size else float("nan")
        return (v, v)
    if np.all(values == values[0]):  # zero variance: exactly degenerate
        return (float(values[0]), float(values[0]))
    rng = np.random.default_rng(seed)
    samples = rng.integers(0, values.size, size=(n_resamples, values.size))
    means = values[samples].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    return (float(np.quantile(means, alpha)), float(np.quantile(means, 1.0 - alpha)))


@dataclass
class LearningCurve:
    query_counts: list[int]
    per_rep: np.ndarray  # (R, P) accuracy per repetition per point
    mean: np.ndarray  # (P,)
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_reps(self) -> int:
        return self.per_rep.shape[0]


def build_curve(
    query_counts: list[int],
    per_rep_accuracies: list[list[float]],
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    metadata: dict | None = None,
) -> LearningCurve:
    per_rep = np.asarray(per_rep_accuracies, dtype=np.float64)
    if per_rep.ndim != 2 or per_rep.shape[1] != len(query_counts):
        raise ValueError("every repetition must contribute one accuracy per point")
    if any(b <= a for a, b in zip(query_counts, query_counts[1:])):
        raise ValueError("query counts must be strictly increasing")
    mean = per_rep.mean(axis=0)
    los, his = [], []
    for j in range(per_rep.shape[1]):
        lo, hi = bootstrap_ci(per_rep[:, j], n_resamples=n_resamples, level=level,
                              seed=seed + j)
        # Percentile intervals can exclude the point estimate in tiny,
        # heavily skewed samples; keep the bands bracketing the mean.
        los.append(min(lo, float(mean[j])))
        his.append(max(hi, float(mean[j])))
    return LearningCurve(
        query_counts=list(query_counts),
        per_rep=per_rep,
        mean=mean,
        ci_lo=np.asarray(los),
        ci_hi=np.asarray(his),
        metadata=metadata or {},
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def curve_to_csv(curve: LearningCurve) -> str:
    """Serialize with 17 significant digits so parsing is lossless."""
    r = curve.n_reps
    header = "query_count," + ",".join(f"rep_{i}" for i in range(r)) + ",mean,ci_lo,ci_hi"
    lines = [header]
    for j, q in enumerate(curve.query_counts):
        cells = [str(int(q))]
        cells += [_fmt(curve.per_rep[i, j]) for i in range(r)]
        cells += [_fmt(curve.mean[j]), _fmt(curve.ci_lo[j]), _fmt(curve.ci_hi[j])]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str) -> LearningCurve:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    r = sum(1 for h in header if h.startswith("rep_"))
    query_counts, rows, mean, lo, hi = [], [], [], [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        query_counts.append(int(cells[0]))
        rows.append([float(c) for c in cells[1 : 1 + r]])
        mean.append(float(cells[1 + r]))
        lo.append(float(cells[2 + r]))
        hi.append(float(cells[3 + r]))
    return LearningCurve(
        query_counts=query_counts,
        per_rep=np.asarray(rows).T.copy() if rows else np.empty((r, 0)),
        mean=np.asarray(mean),
        ci_lo=np.asarray(lo),
        ci_hi=np.asarray(hi),
    )


def run_repetition(
    config: SessionConfig, pool: Dataset, test: Dataset, journal_path: Path
) -> list[dict]:
    session = ActiveSession.start(
        config, pool, SimulatedOracle(pool), journal_path, test_dataset=test
    )
    session.run_to_completion()
    return session.curve_points


def run_experiment(
    config: SessionConfig,
    pool: Dataset,
    test: Dataset,
    out_dir: str | Path,
    name: str = "experiment",
    n_reps: int = 5,
    base_seed: int = 0,
    workers: int = 1,
) -> LearningCurve:
    """Run ``n_reps`` seeded sessions of one config and aggregate the curve.

    Each repetition derives its own seed; failures mark the experiment
    partial but keep the surviving repetitions.  Results are folded in
    repetition order regardless of completion order.
    """
    out_dir = Path(out_dir)
    journal_dir = out_dir / "journals"
    journal_dir.mkdir(parents=True, exist_ok=True)
    seeds = [int(s) for s in np.random.SeedSequence(base_seed).generate_state(n_reps)]
    configs = [
        SessionConfig.from_dict({**config.to_dict(), "seed": seeds[r]})
        for r in range(n_reps)
    ]
    paths = [journal_dir / f"{name}_rep{r}.jsonl" for r in range(n_reps)]

    def one(r: int):
        return run_repetition(configs[r], pool, test, paths[r])

    results: list[list[dict] | None] = [None] * n_reps
    failures: dict[int, str] = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            futures = [pool_exec.submit(one, r) for r in range(n_reps)]
            for r, fut in enumerate(futures):
                try:
                    results[r] = fut.result()
                except Exception as exc:  # noqa: BLE001 - repetition isolation
                    failures[r] = str(exc)
    else:
        for r in range(n_reps):
            try:
                results[r] = one(r)
            except Exception as exc:  # noqa: BLE001
                failures[r] = str(exc)

    kept = [r for r in range(n_reps) if results[r] is not None]
    if not kept:
        raise RuntimeError(f"all repetitions failed: {failures}")
    query_counts = [p["query_count"] for p in results[kept[0]]]
    per_rep = [[p["accuracy"] for p in results[r]] for r in kept]
    curve = build_curve(
        query_counts,
        per_rep,
        seed=base_seed,
        metadata={
            "name": name,
            "algorithm": config.algorithm,
            "strategy": config.strategy,
            "seeds": [seeds[r] for r in kept],
            "dataset_hash": pool.content_hash(),
            "test_hash": test.content_hash(),
            "partial": bool(failures),
            "failures": failures,
        },
    )
    (out_dir / f"{name}.csv").write_text(curve_to_csv(curve))
    return curve


@dataclass
class CurveSummary:
    queries_to_reach: dict[float, int]
    exploitation_slope: float


def summarize(
    curve: LearningCurve,
    thresholds: tuple[float, ...] = (0.8, 0.85, 0.9),
    tail_fraction: float = 0.25,
) -> CurveSummary:
    """Threshold crossings of the mean curve plus its tail slope.

    Unreachable thresholds are simply absent from the map.  The tail
    slope is the least-squares slope over the final ``tail_fraction`` of
    points (at least two).
    """
    if not curve.query_counts:
        raise ValueError("cannot summarize an empty curve")
    reach: dict[float, int] = {}
    for theta in thresholds:
        hit = [q for q, a in zip(curve.query_counts, curve.mean) if a >= theta]
        if hit:
            reach[theta] = min(hit)
    n_tail = max(2, int(np.ceil(tail_fraction * len(curve.query_counts))))
    xs = np.asarray(curve.query_counts[-n_tail:], dtype=np.float64)
    ys = curve.mean[-n_tail:]
    if len(xs) < 2 or np.all(xs == xs[0]):
        slope = 0.0
    else:
        slope = float(np.polyfit(xs, ys, 1)[0])
    return CurveSummary(queries_to_reach=reach, exploitation_slope=slope)
