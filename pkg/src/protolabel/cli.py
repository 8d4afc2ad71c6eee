"""Command-line entry point: pretrain, simulate, eval, serve, export."""

from __future__ import annotations

import functools
import json
import logging
import socket
import sys
from pathlib import Path

import click

from . import __version__
from .config import Config, RunManifest, defaults_help, mark_done
from .data import (
    Dataset,
    load_dataset,
    load_uci_har,
    make_synthetic,
    split_dataset,
    standardize,
    subset_classes,
    SyntheticSpec,
)
from .engine import ActiveSession, FineTuneConfig, PendingOracle, SessionConfig, SimulatedOracle
from .errors import ConfigError, DataFormatError, IngestionError, LabelError
from .evaluation import build_curve, curve_to_csv, run_experiment, summarize
from .nn import TrainConfig, build_har_encoder, cross_entropy_pretrain, save_checkpoint

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PORT = 4


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (IngestionError, DataFormatError, LabelError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


def common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="Config file (INI sections; see defaults below).")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the command's primary seed.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default="out",
                      show_default=True, help="Output directory.")(fn)
    fn = click.option("--verbose", is_flag=True, help="Enable debug logging.")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
                      help="Override any config key (repeatable).")(fn)
    return fn


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def load_config(config_path, overrides, seed, seed_key) -> Config:
    cfg = Config.load(config_path, tuple(overrides))
    if seed is not None:
        section, option = seed_key.split(".")
        cfg.set(section, option, str(seed))
    return cfg


def build_pretrain_dataset(cfg: Config) -> Dataset:
    kind = cfg.get("dataset", "kind")
    if kind == "synthetic":
        return make_synthetic(
            SyntheticSpec(
                n_classes=cfg.getint("dataset", "pretrain_classes"),
                n_per_class=cfg.getint("dataset", "pretrain_per_class"),
                n_channels=cfg.getint("dataset", "channels"),
                n_timesteps=cfg.getint("dataset", "timesteps"),
                noise_std=cfg.getfloat("dataset", "noise_std"),
                seed=cfg.getint("dataset", "seed"),
            ),
            split_tag="pretrain",
            id_prefix="pre",
        )
    if kind == "uci_har":
        root = cfg.get("dataset", "root")
        if not root:
            raise ConfigError("dataset.root is required for kind=uci_har")
        ds = load_uci_har(root, "train")
        n_pre = cfg.getint("dataset", "pretrain_classes")
        if 0 < n_pre < ds.n_classes:
            ds = subset_classes(ds, list(range(n_pre)))
        return ds
    if kind == "npz":
        path = cfg.get("dataset", "pretrain_path")
        if not path:
            raise ConfigError("dataset.pretrain_path is required for kind=npz")
        return load_dataset(path)
    raise ConfigError(f"unknown dataset.kind {kind!r}")


def build_pool_and_test(cfg: Config) -> tuple[Dataset, Dataset]:
    kind = cfg.get("dataset", "kind")
    if kind == "synthetic":
        base = dict(
            n_classes=cfg.getint("dataset", "classes"),
            n_channels=cfg.getint("dataset", "channels"),
            n_timesteps=cfg.getint("dataset", "timesteps"),
            noise_std=cfg.getfloat("dataset", "noise_std"),
        )
        seed = cfg.getint("dataset", "seed")
        pool = make_synthetic(
            SyntheticSpec(n_per_class=cfg.getint("dataset", "per_class"),
                          seed=seed + 1, **base),
            id_prefix="pool",
        )
        test = make_synthetic(
            SyntheticSpec(n_per_class=cfg.getint("dataset", "test_per_class"),
                          seed=seed + 2, **base),
            split_tag="test",
            id_prefix="test",
        )
        return pool, test
    if kind == "uci_har":
        root = cfg.get("dataset", "root")
        if not root:
            raise ConfigError("dataset.root is required for kind=uci_har")
        held_out = load_uci_har(root, "test")
        pool_size = cfg.getint("dataset", "per_class")  # reused as pool size here
        pool_size = min(pool_size, len(held_out) - 1)
        return split_dataset(held_out, pool_size, seed=cfg.getint("dataset", "seed"))
    if kind == "npz":
        pool_path = cfg.get("dataset", "pool_path")
        test_path = cfg.get("dataset", "test_path")
        if not pool_path:
            raise ConfigError("dataset.pool_path is required for kind=npz")
        pool = load_dataset(pool_path)
        test = load_dataset(test_path) if test_path else None
        return pool, test
    raise ConfigError(f"unknown dataset.kind {kind!r}")


def session_config_from(cfg: Config) -> SessionConfig:
    cadence = cfg.get("session", "eval_cadence")
    return SessionConfig(
        algorithm=cfg.get("session", "algorithm"),
        budget=cfg.getint("session", "budget"),
        strategy=cfg.get("session", "strategy"),
        batch_size=cfg.getint("session", "batch_size"),
        seed=cfg.getint("session", "seed"),
        fine_tune=FineTuneConfig(
            steps=cfg.getint("session", "fine_tune_steps"),
            lr=cfg.getfloat("session", "fine_tune_lr"),
            optimizer_reset=cfg.getbool("session", "optimizer_reset"),
        ),
        checkpoint_path=cfg.get("session", "checkpoint") or None,
        distance_kind=cfg.get("session", "distance"),
        eval_cadence=int(cadence) if cadence else None,
        embed_dim=cfg.getint("encoder", "embed_dim"),
    )


@click.group(epilog="Config keys and defaults:\n\n" + defaults_help())
@click.version_option(__version__)
def main():
    """Prototype-guided active labeling for windowed time-series data."""


@main.command()
@common_options
@cli_errors
def pretrain(config_path, seed, out_dir, verbose, overrides):
    """Train the encoder on the pretrain split and write a checkpoint."""
    setup_logging(verbose)
    cfg = load_config(config_path, overrides, seed, "train.seed")
    dataset = build_pretrain_dataset(cfg)
    RunManifest(
        command="pretrain",
        config_path=config_path,
        resolved=cfg.resolved(),
        out_dir=out_dir,
        version=__version__,
        dataset_hashes={"pretrain": dataset.content_hash()},
    ).write()
    standardized, stats = standardize(dataset)
    model = build_har_encoder(
        dataset.n_channels,
        dataset.n_timesteps,
        dataset.n_classes,
        embed_dim=cfg.getint("encoder", "embed_dim"),
        seed=cfg.getint("train", "seed"),
    )
    train_cfg = TrainConfig(
        epochs=cfg.getint("train", "epochs"),
        batch_size=cfg.getint("train", "batch_size"),
        lr=cfg.getfloat("train", "lr"),
        seed=cfg.getint("train", "seed"),
    )
    model, history = cross_entropy_pretrain(model, standardized, train_cfg)
    out = Path(out_dir)
    ckpt = out / "encoder.ckpt"
    save_checkpoint(
        model, ckpt, stats=stats,
        meta={"pretrain_classes": list(dataset.class_names), "epochs": train_cfg.epochs},
    )
    (out / "train_log.json").write_text(json.dumps({"epoch_loss": history}, indent=2))
    mark_done(out_dir)
    click.echo(f"checkpoint written to {ckpt} (final epoch loss {history[-1]:.4f})")


@main.command()
@common_options
@cli_errors
def simulate(config_path, seed, out_dir, verbose, overrides):
    """Run one budgeted session against the simulated oracle."""
    setup_logging(verbose)
    cfg = load_config(config_path, overrides, seed, "session.seed")
    pool, test = build_pool_and_test(cfg)
    session_cfg = session_config_from(cfg)
    RunManifest(
        command="simulate",
        config_path=config_path,
        resolved=cfg.resolved(),
        out_dir=out_dir,
        version=__version__,
        dataset_hashes={
            "pool": pool.content_hash(),
            **({"test": test.content_hash()} if test is not None else {}),
        },
    ).write()
    out = Path(out_dir)
    journal_path = out / "session.jsonl"
    session = ActiveSession.start(
        session_cfg, pool, SimulatedOracle(pool), journal_path, test_dataset=test
    )
    session.run_to_completion()
    points = session.curve_points
    import warnings

    with warnings.catch_warnings():
        # a single repetition legitimately has a degenerate interval
        warnings.simplefilter("ignore", UserWarning)
        curve = build_curve(
            [p["query_count"] for p in points],
            [[p["accuracy"] if p["accuracy"] is not None else float("nan") for p in points]],
            n_resamples=1,
            seed=session_cfg.seed,
        )
    (out / "curve.csv").write_text(curve_to_csv(curve))
    mark_done(out_dir)
    final = points[-1]["accuracy"]
    click.echo(
        f"session finished: {session.n_labeled} labels, "
        f"final accuracy {final if final is not None else 'n/a'}"
    )


@main.command(name="eval")
@common_options
@cli_errors
def eval_cmd(config_path, seed, out_dir, verbose, overrides):
    """Sweep algorithms/strategies with repeated seeded runs."""
    setup_logging(verbose)
    cfg = load_config(config_path, overrides, seed, "session.seed")
    pool, test = build_pool_and_test(cfg)
    if test is None:
        raise ConfigError("eval needs a test split")
    algorithms = cfg.getlist("eval", "algorithms") or [cfg.get("session", "algorithm")]
    strategies = cfg.getlist("eval", "strategies") or [cfg.get("session", "strategy")]
    reps = cfg.getint("eval", "reps")
    workers = cfg.getint("eval", "workers")
    thresholds = tuple(float(t) for t in cfg.getlist("eval", "thresholds"))
    RunManifest(
        command="eval",
        config_path=config_path,
        resolved=cfg.resolved(),
        out_dir=out_dir,
        version=__version__,
        dataset_hashes={"pool": pool.content_hash(), "test": test.content_hash()},
    ).write()
    base = session_config_from(cfg)
    rows = []
    for algorithm in algorithms:
        for strategy in strategies:
            name = f"{algorithm}_{strategy}"
            session_cfg = SessionConfig.from_dict(
                {**base.to_dict(), "algorithm": algorithm, "strategy": strategy,
                 "checkpoint_path": base.checkpoint_path if algorithm != "online_pn" else None}
            )
            curve = run_experiment(
                session_cfg, pool, test, out_dir, name=name, n_reps=reps,
                base_seed=base.seed, workers=workers,
            )
            summary = summarize(curve, thresholds=thresholds)
            row = {
                "name": name,
                "algorithm": algorithm,
                "strategy": strategy,
                "final_mean_accuracy": float(curve.mean[-1]),
                "tail_slope": summary.exploitation_slope,
            }
            for theta in thresholds:
                key = f"queries_to_reach_{theta}"
                row[key] = summary.queries_to_reach.get(theta)
            rows.append(row)
            click.echo(f"{name}: final mean accuracy {curve.mean[-1]:.4f}")
    (Path(out_dir) / "summary.json").write_text(json.dumps(rows, indent=2))
    header = list(rows[0].keys())
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if row[h] is None else str(row[h]) for h in header))
    (Path(out_dir) / "summary.csv").write_text("\n".join(lines) + "\n")
    mark_done(out_dir)


@main.command()
@common_options
@cli_errors
def serve(config_path, seed, out_dir, verbose, overrides):
    """Start the labeling service (and static UI, when built)."""
    setup_logging(verbose)
    cfg = load_config(config_path, overrides, seed, "session.seed")
    import os

    host = os.environ.get("PROTOLABEL_HOST", cfg.get("serve", "host"))
    port = int(os.environ.get("PROTOLABEL_PORT", cfg.get("serve", "port")))
    data_dir = os.environ.get("PROTOLABEL_DATA_DIR", cfg.get("serve", "data_dir"))
    journal_dir = os.environ.get("PROTOLABEL_JOURNAL_DIR", cfg.get("serve", "journal_dir"))
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    # match the server's own bind semantics, else TIME_WAIT sockets from a
    # just-stopped instance would read as busy
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError:
        click.echo(f"port {port} on {host} is busy", err=True)
        sys.exit(EXIT_PORT)
    finally:
        probe.close()

    from .service import create_app
    import signal
    import uvicorn

    # uvicorn replays trapped signals to the pre-existing handler after its
    # graceful shutdown; journals are flushed per event, so exit clean.
    signal.signal(signal.SIGTERM, lambda *_: sys.exit(0))

    app = create_app(data_dir=data_dir, journal_dir=journal_dir)
    click.echo(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="debug" if verbose else "info")


@main.command()
@common_options
@click.option("--journal", "journal_path", type=click.Path(), required=True,
              help="Session journal to export labels from.")
@cli_errors
def export(config_path, seed, out_dir, verbose, overrides, journal_path):
    """Export committed labels plus predictions for the remaining pool."""
    setup_logging(verbose)
    cfg = load_config(config_path, overrides, seed, "session.seed")
    pool, test = build_pool_and_test(cfg)
    session = ActiveSession.resume(pool, PendingOracle(), journal_path, test_dataset=test)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = session.export_rows()
    lines = ["instance_id,class_name,source"]
    lines += [f"{i},{name},{source}" for i, name, source in rows]
    path = out / "labels.csv"
    path.write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {len(rows)} rows to {path}")


if __name__ == "__main__":
    main()
