import json
import socket
from pathlib import Path

import pytest
from click.testing import CliRunner

from protolabel.cli import main
from protolabel.config import DEFAULTS, Config
from protolabel.errors import ConfigError
from protolabel.journal import SessionJournal
from protolabel.nn import load_checkpoint

SMALL_DATASET = (
    "--set", "dataset.pretrain_per_class=30",
    "--set", "dataset.per_class=12",
    "--set", "dataset.test_per_class=8",
    "--set", "dataset.noise_std=0.5",
)


@pytest.fixture
def runner():
    return CliRunner()


class TestConfig:
    def test_defaults_follow_recipe(self):
        # The documented defaults: 10 epochs, batch 32, 5 reps, margin+atpn.
        assert DEFAULTS["train"]["epochs"] == "10"
        assert DEFAULTS["train"]["batch_size"] == "32"
        assert DEFAULTS["eval"]["reps"] == "5"
        assert DEFAULTS["session"]["strategy"] == "margin"
        assert DEFAULTS["session"]["algorithm"] == "atpn"

    def test_file_and_override_precedence(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[session]\nbudget = 99\n")
        cfg = Config.load(path, ("session.budget=7",))
        assert cfg.getint("session", "budget") == 7

    def test_unknown_override_key(self):
        with pytest.raises(ConfigError):
            Config.load(None, ("session.nope=1",))

    def test_missing_config_file(self):
        with pytest.raises(ConfigError):
            Config.load("/does/not/exist.ini")


class TestPretrainCommand:
    def test_checkpoint_round_trip(self, runner, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(
            main,
            ["pretrain", "--out", str(out), *SMALL_DATASET,
             "--set", "train.epochs=2", "--set", "encoder.embed_dim=16"],
        )
        assert result.exit_code == 0, result.output
        model, stats, meta = load_checkpoint(out / "encoder.ckpt")
        assert (model.n_channels, model.n_timesteps) == (3, 64)
        assert model.embed_dim == 16
        assert stats is not None
        assert (out / "manifest.json").is_file()
        assert (out / "done").is_file()
        log = json.loads((out / "train_log.json").read_text())
        assert len(log["epoch_loss"]) == 2

    def test_missing_dataset_exits_3(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["pretrain", "--out", str(tmp_path / "o"),
             "--set", "dataset.kind=npz",
             "--set", "dataset.pretrain_path=/missing.npz"],
        )
        assert result.exit_code == 3

    def test_bad_config_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["pretrain", "--out", str(tmp_path / "o"), "--set", "train.epochs=zero"],
        )
        assert result.exit_code == 2

    def test_epochs_default_is_ten(self):
        assert Config.load(None).getint("train", "epochs") == 10


@pytest.fixture(scope="module")
def pretrained(tmp_path_factory):
    out = tmp_path_factory.mktemp("pre")
    result = CliRunner().invoke(
        main,
        ["pretrain", "--out", str(out), *SMALL_DATASET,
         "--set", "train.epochs=4", "--set", "encoder.embed_dim=32"],
    )
    assert result.exit_code == 0, result.output
    return out / "encoder.ckpt"


class TestSimulateCommand:
    def test_journal_event_counts(self, runner, tmp_path, pretrained):
        out = tmp_path / "sim"
        result = runner.invoke(
            main,
            ["simulate", "--out", str(out), *SMALL_DATASET,
             "--set", f"session.checkpoint={pretrained}",
             "--set", "session.budget=10"],
        )
        assert result.exit_code == 0, result.output
        journal = SessionJournal.open(out / "session.jsonl")
        assert len(journal.events("query_issued")) == 10
        assert len(journal.events("init")) == 1
        assert len(journal.events("label_committed")) == 11
        assert (out / "curve.csv").is_file() and (out / "done").is_file()

    def test_byte_identical_reruns(self, runner, tmp_path, pretrained):
        args = [
            "simulate", *SMALL_DATASET,
            "--set", f"session.checkpoint={pretrained}",
            "--set", "session.budget=6", "--seed", "21",
        ]
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, args + ["--out", str(out)])
            assert result.exit_code == 0, result.output
            outs.append((out / "curve.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_online_pn_without_checkpoint(self, runner, tmp_path):
        out = tmp_path / "online"
        result = runner.invoke(
            main,
            ["simulate", "--out", str(out), *SMALL_DATASET,
             "--set", "session.algorithm=online_pn",
             "--set", "session.budget=4",
             "--set", "encoder.embed_dim=16"],
        )
        assert result.exit_code == 0, result.output


class TestEvalCommand:
    def test_sweep_outputs(self, runner, tmp_path, pretrained):
        out = tmp_path / "sweep"
        result = runner.invoke(
            main,
            ["eval", "--out", str(out), *SMALL_DATASET,
             "--set", f"session.checkpoint={pretrained}",
             "--set", "session.budget=5",
             "--set", "eval.reps=2",
             "--set", "eval.strategies=margin,random"],
        )
        assert result.exit_code == 0, result.output
        assert (out / "atpn_margin.csv").is_file()
        assert (out / "atpn_random.csv").is_file()
        summary = json.loads((out / "summary.json").read_text())
        assert {row["strategy"] for row in summary} == {"margin", "random"}
        assert any("queries_to_reach_0.9" in row for row in summary)
        assert (out / "summary.csv").is_file()
        assert (out / "done").is_file()


class TestExportCommand:
    def test_exports_labels_csv(self, runner, tmp_path, pretrained):
        sim_out = tmp_path / "sim"
        args = SMALL_DATASET + (
            "--set", f"session.checkpoint={pretrained}",
            "--set", "session.budget=5",
        )
        result = runner.invoke(main, ["simulate", "--out", str(sim_out), *args])
        assert result.exit_code == 0, result.output
        exp_out = tmp_path / "exp"
        result = runner.invoke(
            main,
            ["export", "--journal", str(sim_out / "session.jsonl"),
             "--out", str(exp_out), *args],
        )
        assert result.exit_code == 0, result.output
        lines = (exp_out / "labels.csv").read_text().splitlines()
        assert lines[0] == "instance_id,class_name,source"
        labeled = [l for l in lines[1:] if l.endswith(",labeled")]
        predicted = [l for l in lines[1:] if l.endswith(",predicted")]
        assert len(labeled) == 6
        assert len(labeled) + len(predicted) == 6 * 12  # whole pool accounted for


class TestServeCommand:
    def test_busy_port_exits_4(self, runner, tmp_path):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            result = runner.invoke(
                main,
                ["serve", "--out", str(tmp_path),
                 "--set", f"serve.port={port}",
                 "--set", f"serve.data_dir={tmp_path / 'data'}",
                 "--set", f"serve.journal_dir={tmp_path / 'journals'}"],
            )
            assert result.exit_code == 4
        finally:
            blocker.close()

    def test_help_lists_config_keys(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        assert "session" in result.output and "budget" in result.output
