import json

import pytest

from protolabel.errors import DataFormatError
from protolabel.journal import ReplayMismatchError, SessionJournal


@pytest.fixture
def journal(tmp_path):
    j = SessionJournal.create(tmp_path / "s.jsonl", {"seed": 1}, "hash123")
    j.append("init", {"instance_id": "a"})
    j.append("label_committed", {"instance_id": "a", "class_name": "x"})
    return j


def test_create_then_open_verifies(journal):
    reopened = SessionJournal.open(journal.path)
    assert reopened.header["config"] == {"seed": 1}
    assert reopened.header["dataset_hash"] == "hash123"
    assert [r["type"] for r in reopened.records] == ["init", "label_committed"]
    assert [r["seq"] for r in reopened.records] == [1, 2]


def test_refuses_to_overwrite(journal):
    with pytest.raises(FileExistsError):
        SessionJournal.create(journal.path, {}, "h")


def test_tampered_payload_detected(journal):
    lines = journal.path.read_text().splitlines()
    rec = json.loads(lines[1])
    rec["payload"]["instance_id"] = "evil"
    lines[1] = json.dumps(rec)
    journal.path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataFormatError, match="hash mismatch"):
        SessionJournal.open(journal.path)


def test_tampered_chain_detected(journal):
    lines = journal.path.read_text().splitlines()
    journal.path.write_text("\n".join([lines[0], lines[2]]) + "\n")
    with pytest.raises(DataFormatError):
        SessionJournal.open(journal.path)


def test_replay_verifies_in_order(journal):
    reopened = SessionJournal.open(journal.path)
    assert reopened.replaying
    reopened.append("init", {"instance_id": "a"})
    reopened.append("label_committed", {"instance_id": "a", "class_name": "x"})
    assert not reopened.replaying
    # after replay is exhausted, appends write for real
    reopened.append("eval_point", {"query_count": 1})
    assert len(SessionJournal.open(journal.path).records) == 3


def test_replay_divergence_detected(journal):
    reopened = SessionJournal.open(journal.path)
    with pytest.raises(ReplayMismatchError):
        reopened.append("init", {"instance_id": "WRONG"})


def test_unsupported_version(tmp_path):
    path = tmp_path / "v.jsonl"
    path.write_text('{"journal_version": 99, "type": "header", "hash": "x"}\n')
    with pytest.raises(DataFormatError, match="version"):
        SessionJournal.open(path)
