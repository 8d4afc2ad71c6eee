"""Append-only session journal with a tamper-evident hash chain.

Line-delimited JSON.  The first line is a version header carrying the
session config and dataset hash; every following line is an event

    {"seq": n, "type": ..., "payload": {...}, "hash": ...}

where ``hash`` is sha256 over the previous record's hash plus the
canonical JSON of the record without its hash field.  Events carry no
wall-clock fields, so a deterministic engine replays to identical bytes.

A journal opened over an existing file starts in verify mode: appends
are checked against the recorded lines instead of being written, until
the recorded events are exhausted.  This is how a crashed session
resumes without duplicating history.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .errors import DataFormatError

JOURNAL_VERSION = 1


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _chain_hash(prev_hash: str, record_without_hash: dict) -> str:
    return hashlib.sha256((prev_hash + _canonical(record_without_hash)).encode()).hexdigest()


class ReplayMismatchError(DataFormatError):
    """An appended event disagrees with the journal's recorded history."""


class SessionJournal:
    def __init__(self, path: str | Path, header: dict, records: list[dict]):
        self.path = Path(path)
        self.header = header
        self.records = records
        self.replay_cursor = 0  # next recorded event an append must match
        self.durable = False

    @classmethod
    def create(cls, path: str | Path, config: dict, dataset_hash: str) -> "SessionJournal":
        path = Path(path)
        if path.exists():
            raise FileExistsError(f"journal already exists: {path}")
        header = {
            "journal_version": JOURNAL_VERSION,
            "type": "header",
            "config": config,
            "dataset_hash": dataset_hash,
        }
        header["hash"] = _chain_hash("", {k: v for k, v in header.items() if k != "hash"})
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(_canonical(header) + "\n")
        journal = cls(path, header, [])
        journal.replay_cursor = 0
        return journal

    @classmethod
    def open(cls, path: str | Path) -> "SessionJournal":
        path = Path(path)
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
        if not lines:
            raise DataFormatError(f"journal {path} is empty")
        header = json.loads(lines[0])
        if header.get("journal_version") != JOURNAL_VERSION:
            raise DataFormatError(
                f"unsupported journal version {header.get('journal_version')!r}"
            )
        records = [json.loads(ln) for ln in lines[1:]]
        journal = cls(path, header, records)
        journal.verify_chain()
        return journal

    def verify_chain(self) -> None:
        expect = _chain_hash("", {k: v for k, v in self.header.items() if k != "hash"})
        if self.header.get("hash") != expect:
            raise DataFormatError(f"journal {self.path}: header hash mismatch")
        prev = self.header["hash"]
        for i, rec in enumerate(self.records):
            body = {k: v for k, v in rec.items() if k != "hash"}
            if rec.get("seq") != i + 1:
                raise DataFormatError(f"journal {self.path}: bad sequence at line {i + 2}")
            if rec.get("hash") != _chain_hash(prev, body):
                raise DataFormatError(f"journal {self.path}: hash mismatch at seq {i + 1}")
            prev = rec["hash"]

    @property
    def replaying(self) -> bool:
        return self.replay_cursor < len(self.records)

    def append(self, event_type: str, payload: dict) -> dict:
        """Append an event, or verify it against recorded history when replaying."""
        body = {
            "seq": self.replay_cursor + 1,
            "type": event_type,
            "payload": payload,
        }
        if self.replaying:
            recorded = self.records[self.replay_cursor]
            recorded_body = {k: v for k, v in recorded.items() if k != "hash"}
            if recorded_body != body:
                raise ReplayMismatchError(
                    f"replay diverged at seq {body['seq']}: engine produced "
                    f"{body['type']}, journal has {recorded['type']}"
                )
            self.replay_cursor += 1
            return recorded
        prev = self.records[-1]["hash"] if self.records else self.header["hash"]
        record = dict(body)
        record["hash"] = _chain_hash(prev, body)
        with open(self.path, "a") as fh:
            fh.write(_canonical(record) + "\n")
            fh.flush()
            if self.durable:
                os.fsync(fh.fileno())
        self.records.append(record)
        self.replay_cursor += 1
        return record

    def events(self, event_type: str | None = None) -> list[dict]:
        if event_type is None:
            return list(self.records)
        return [r for r in self.records if r["type"] == event_type]
