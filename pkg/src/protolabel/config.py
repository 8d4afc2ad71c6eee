"""Flat key-value configuration with sections, defaults, and overrides.

The defaults table below is the single source of truth for every tunable
the tool exposes; commands materialize it, apply the config file, then
apply ``--set section.key=value`` flags in order.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

DEFAULTS: dict[str, dict[str, str]] = {
    "dataset": {
        "kind": "synthetic",  # synthetic | uci_har | npz
        "classes": "6",
        "pretrain_classes": "4",
        "pretrain_per_class": "150",
        "per_class": "200",
        "test_per_class": "100",
        "channels": "3",
        "timesteps": "64",
        "noise_std": "0.5",
        "seed": "0",
        "root": "",  # uci_har dataset root
        "pretrain_path": "",  # npz paths
        "pool_path": "",
        "test_path": "",
    },
    "encoder": {
        "embed_dim": "64",
    },
    "train": {
        "epochs": "10",
        "batch_size": "32",
        "lr": "0.001",
        "seed": "0",
    },
    "session": {
        "algorithm": "atpn",
        "strategy": "margin",
        "budget": "50",
        "batch_size": "1",
        "seed": "0",
        "checkpoint": "",
        "fine_tune_steps": "5",
        "fine_tune_lr": "0.001",
        "optimizer_reset": "true",
        "distance": "euclidean",
        "eval_cadence": "",  # empty: every iteration up to budget 200, else every 5th
    },
    "eval": {
        "reps": "5",
        "strategies": "",  # empty: use session.strategy only
        "algorithms": "",  # empty: use session.algorithm only
        "workers": "1",
        "thresholds": "0.8,0.85,0.9",
    },
    "serve": {
        "host": "127.0.0.1",
        "port": "8765",
        "data_dir": "data",
        "journal_dir": "journals",
    },
}


class Config:
    """Resolved configuration: defaults, file values, then overrides."""

    def __init__(self, parser: configparser.ConfigParser):
        self._parser = parser

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: tuple[str, ...] = ()) -> "Config":
        parser = configparser.ConfigParser()
        parser.read_dict(DEFAULTS)
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            try:
                parser.read(path)
            except configparser.Error as exc:
                raise ConfigError(f"cannot parse {path}: {exc}")
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            key, value = item.split("=", 1)
            section, option = key.split(".", 1)
            if section not in parser or option not in parser[section]:
                raise ConfigError(f"unknown config key {section}.{option}")
            parser[section][option] = value
        return cls(parser)

    def get(self, section: str, option: str) -> str:
        try:
            return self._parser.get(section, option)
        except (configparser.NoSectionError, configparser.NoOptionError):
            raise ConfigError(f"missing config key {section}.{option}")

    def getint(self, section: str, option: str) -> int:
        try:
            return self._parser.getint(section, option)
        except ValueError:
            raise ConfigError(f"{section}.{option} must be an integer")

    def getfloat(self, section: str, option: str) -> float:
        try:
            return self._parser.getfloat(section, option)
        except ValueError:
            raise ConfigError(f"{section}.{option} must be a number")

    def getbool(self, section: str, option: str) -> bool:
        try:
            return self._parser.getboolean(section, option)
        except ValueError:
            raise ConfigError(f"{section}.{option} must be a boolean")

    def getlist(self, section: str, option: str) -> list[str]:
        raw = self.get(section, option)
        return [item.strip() for item in raw.split(",") if item.strip()]

    def resolved(self) -> dict[str, dict[str, str]]:
        return {s: dict(self._parser[s]) for s in self._parser.sections()}

    def set(self, section: str, option: str, value: str) -> None:
        self._parser[section][option] = value


def defaults_help() -> str:
    """Render the defaults table for --help epilogs."""
    lines = []
    for section, options in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, value in options.items():
            lines.append(f"  {key} = {value if value else '<empty>'}")
    return "\n".join(lines)


@dataclass
class RunManifest:
    """Record of one command invocation, written before any real work."""

    command: str
    config_path: str | None
    resolved: dict
    out_dir: str
    version: str
    dataset_hashes: dict[str, str]

    def write(self) -> Path:
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "manifest.json"
        path.write_text(
            json.dumps(
                {
                    "command": self.command,
                    "config_path": self.config_path,
                    "resolved_config": self.resolved,
                    "out_dir": str(self.out_dir),
                    "version": self.version,
                    "dataset_hashes": self.dataset_hashes,
                },
                indent=2,
                sort_keys=True,
            )
        )
        return path


def mark_done(out_dir: str | Path) -> None:
    (Path(out_dir) / "done").write_text("done\n")
