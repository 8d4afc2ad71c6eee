"""HTTP service for live labeling sessions and static hosting of the UI.

Endpoints (JSON bodies unless noted; floats serialize as shortest
round-trip decimal literals):

    GET  /health                    version probe
    GET  /datasets                  registered datasets
    POST /datasets                  register synthetic/npz/uci_har/upload
    GET  /sessions                  all sessions (resumable after restart)
    POST /sessions                  create a session (idempotency key aware)
    GET  /sessions/{id}             handle with progress
    GET  /sessions/{id}/next        pending query card, 204 when none, 410 done
    POST /sessions/{id}/labels      commit a label for the pending card
    GET  /sessions/{id}/curve       metric points plus label history
    GET  /sessions/{id}/export      CSV: committed labels + predictions
    /                               static UI bundle, when present

One lock per session serializes mutations; reads work on snapshots.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .data import Dataset, SyntheticSpec, load_dataset, load_uci_har, make_synthetic, save_dataset
from .engine import ActiveSession, FineTuneConfig, PendingOracle, SessionConfig, SimulatedOracle
from .errors import BudgetExhaustedError, ConfigError, ProtolabelError

logger = logging.getLogger("protolabel.service")


class DatasetRegistration(BaseModel):
    name: str
    kind: str  # synthetic | npz | uci_har | upload
    strip_labels: bool = False
    # synthetic
    classes: int = 6
    per_class: int = 50
    channels: int = 3
    timesteps: int = 64
    noise_std: float = 0.5
    seed: int = 0
    # npz / uci_har
    path: str | None = None
    split: str = "test"
    # upload
    content_b64: str | None = None


class SessionCreateRequest(BaseModel):
    dataset: str
    config: dict = Field(default_factory=dict)
    test_dataset: str | None = None
    oracle: str = "human"  # human | simulated
    idempotency_key: str | None = None
    async_updates: bool = False


class LabelRequest(BaseModel):
    instance_id: str
    class_name: str


class DatasetRegistry:
    """Materializes registered datasets as npz files under data_dir."""

    def __init__(self, data_dir: Path):
        self.data_dir = data_dir
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.data_dir / "datasets.json"
        self.index: dict[str, dict] = (
            json.loads(self.index_path.read_text()) if self.index_path.is_file() else {}
        )
        self._cache: dict[str, Dataset] = {}

    def _persist(self) -> None:
        self.index_path.write_text(json.dumps(self.index, indent=2, sort_keys=True))

    def register(self, req: DatasetRegistration) -> dict:
        if req.name in self.index:
            raise HTTPException(409, f"dataset {req.name!r} already registered")
        if req.kind == "synthetic":
            ds = make_synthetic(
                SyntheticSpec(
                    n_classes=req.classes,
                    n_per_class=req.per_class,
                    n_channels=req.channels,
                    n_timesteps=req.timesteps,
                    noise_std=req.noise_std,
                    seed=req.seed,
                ),
                id_prefix=req.name,
            )
        elif req.kind == "npz":
            if not req.path:
                raise HTTPException(400, "kind=npz requires a path")
            ds = load_dataset(req.path)
        elif req.kind == "uci_har":
            if not req.path:
                raise HTTPException(400, "kind=uci_har requires a path")
            ds = load_uci_har(req.path, req.split)
        elif req.kind == "upload":
            if not req.content_b64:
                raise HTTPException(400, "kind=upload requires content_b64")
            blob = self.data_dir / f"{req.name}.upload.npz"
            blob.write_bytes(base64.b64decode(req.content_b64))
            ds = load_dataset(blob)
        else:
            raise HTTPException(400, f"unknown dataset kind {req.kind!r}")
        if req.strip_labels:
            ds = ds.without_labels()
        save_dataset(ds, self.data_dir / f"{req.name}.npz")
        entry = self.describe(req.name, ds)
        self.index[req.name] = entry
        self._persist()
        self._cache[req.name] = ds
        return entry

    @staticmethod
    def describe(name: str, ds: Dataset) -> dict:
        return {
            "name": name,
            "n_instances": len(ds),
            "n_channels": ds.n_channels,
            "n_timesteps": ds.n_timesteps,
            "class_names": list(ds.class_names),
            "has_labels": ds.hidden_labels is not None,
            "hash": ds.content_hash(),
        }

    def get(self, name: str) -> Dataset:
        if name not in self.index:
            raise HTTPException(404, f"unknown dataset {name!r}")
        if name not in self._cache:
            self._cache[name] = load_dataset(self.data_dir / f"{name}.npz")
        return self._cache[name]

    def list(self) -> list[dict]:
        return [self.index[name] for name in sorted(self.index)]


class ManagedSession:
    def __init__(self, session_id: str, engine: ActiveSession, meta: dict):
        self.id = session_id
        self.engine = engine
        self.meta = meta
        self.lock = threading.Lock()
        self.updating = False
        self.error: str | None = None

    @property
    def status(self) -> str:
        if self.error or self.engine is None:
            return "failed"
        if self.updating:
            return "ready"
        return self.engine.status  # awaiting_label | finished

    def handle(self) -> dict:
        if self.engine is None:
            return {
                "session_id": self.id,
                "status": "failed",
                "error": self.error,
                "dataset": self.meta.get("dataset"),
            }
        return {
            "session_id": self.id,
            "status": self.status,
            "progress": self.engine.progress(),
            "config": self.engine.config.to_dict(),
            "dataset": self.meta["dataset"],
        }


class SessionManager:
    def __init__(self, registry: DatasetRegistry, journal_dir: Path):
        self.registry = registry
        self.journal_dir = journal_dir
        self.journal_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.journal_dir / "sessions.json"
        self.meta: dict[str, dict] = (
            json.loads(self.index_path.read_text()) if self.index_path.is_file() else {}
        )
        self.sessions: dict[str, ManagedSession] = {}
        self.by_key: dict[str, str] = {
            m["idempotency_key"]: sid
            for sid, m in self.meta.items()
            if m.get("idempotency_key")
        }
        self._lock = threading.Lock()
        self._resume_all()

    def _persist(self) -> None:
        self.index_path.write_text(json.dumps(self.meta, indent=2, sort_keys=True))

    def _journal_path(self, session_id: str) -> Path:
        return self.journal_dir / f"{session_id}.jsonl"

    def _resume_all(self) -> None:
        for sid, meta in self.meta.items():
            try:
                pool = self.registry.get(meta["dataset"])
                test = self.registry.get(meta["test_dataset"]) if meta.get("test_dataset") else None
                oracle = SimulatedOracle(pool) if meta.get("oracle") == "simulated" else PendingOracle()
                engine = ActiveSession.resume(
                    pool, oracle, self._journal_path(sid), test_dataset=test
                )
                engine.journal.durable = meta.get("oracle") != "simulated"
                self.sessions[sid] = ManagedSession(sid, engine, meta)
                logger.info("resumed session %s (%s)", sid, engine.status)
            except Exception as exc:  # noqa: BLE001 - resume isolation
                logger.warning("could not resume session %s: %s", sid, exc)
                broken = ManagedSession(sid, None, meta)  # type: ignore[arg-type]
                broken.error = str(exc)
                self.sessions[sid] = broken

    def create(self, req: SessionCreateRequest) -> tuple[ManagedSession, bool]:
        with self._lock:
            if req.idempotency_key and req.idempotency_key in self.by_key:
                return self.sessions[self.by_key[req.idempotency_key]], True
            pool = self.registry.get(req.dataset)
            test = self.registry.get(req.test_dataset) if req.test_dataset else None
            config = self._session_config(req.config)
            if req.oracle == "simulated":
                if pool.hidden_labels is None:
                    raise HTTPException(400, "simulated oracle needs a labeled dataset")
                oracle = SimulatedOracle(pool)
            elif req.oracle == "human":
                oracle = PendingOracle()
            else:
                raise HTTPException(400, f"unknown oracle {req.oracle!r}")
            sid = uuid.uuid4().hex[:12]
            try:
                engine = ActiveSession.start(
                    config, pool, oracle, self._journal_path(sid), test_dataset=test
                )
            except ProtolabelError as exc:
                raise HTTPException(400, str(exc))
            engine.journal.durable = req.oracle == "human"
            if req.oracle == "simulated":
                engine.run_to_completion()
            meta = {
                "dataset": req.dataset,
                "test_dataset": req.test_dataset,
                "oracle": req.oracle,
                "idempotency_key": req.idempotency_key,
                "async_updates": req.async_updates,
            }
            managed = ManagedSession(sid, engine, meta)
            self.sessions[sid] = managed
            self.meta[sid] = meta
            if req.idempotency_key:
                self.by_key[req.idempotency_key] = sid
            self._persist()
            return managed, False

    def _session_config(self, raw: dict) -> SessionConfig:
        raw = dict(raw)
        checkpoint = raw.pop("checkpoint", None) or raw.pop("checkpoint_path", None)
        if checkpoint and not os.path.isabs(checkpoint):
            checkpoint = str(self.registry.data_dir / checkpoint)
        fine_tune = FineTuneConfig(
            steps=int(raw.pop("fine_tune_steps", 5)),
            lr=float(raw.pop("fine_tune_lr", 1e-3)),
            optimizer_reset=bool(raw.pop("optimizer_reset", True)),
        )
        known = {
            "algorithm": raw.get("algorithm", "atpn"),
            "budget": int(raw.get("budget", 50)),
            "strategy": raw.get("strategy", "margin"),
            "batch_size": int(raw.get("batch_size", 1)),
            "seed": int(raw.get("seed", 0)),
            "distance_kind": raw.get("distance", raw.get("distance_kind", "euclidean")),
            "eval_cadence": raw.get("eval_cadence"),
            "embed_dim": int(raw.get("embed_dim", 64)),
        }
        if known["eval_cadence"] not in (None, ""):
            known["eval_cadence"] = int(known["eval_cadence"])
        else:
            known["eval_cadence"] = None
        try:
            return SessionConfig(
                checkpoint_path=checkpoint, fine_tune=fine_tune, **known
            )
        except ConfigError as exc:
            raise HTTPException(400, str(exc))

    def get(self, session_id: str) -> ManagedSession:
        if session_id not in self.sessions:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return self.sessions[session_id]


def _find_ui_dir() -> Path | None:
    env = os.environ.get("PROTOLABEL_UI_DIR")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    candidates.append(Path.cwd() / "frontend" / "dist")
    for c in candidates:
        if c.is_dir() and (c / "index.html").is_file():
            return c
    return None


def create_app(data_dir: str | Path = "data", journal_dir: str | Path = "journals") -> FastAPI:
    app = FastAPI(title="protolabel", version=__version__)
    registry = DatasetRegistry(Path(data_dir))
    manager = SessionManager(registry, Path(journal_dir))
    app.state.registry = registry
    app.state.manager = manager

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": registry.list()}

    @app.post("/datasets", status_code=201)
    def register_dataset(req: DatasetRegistration):
        try:
            return registry.register(req)
        except ProtolabelError as exc:
            raise HTTPException(400, str(exc))

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                manager.sessions[sid].handle()
                if manager.sessions[sid].engine is not None
                else {"session_id": sid, "status": "failed", "error": manager.sessions[sid].error}
                for sid in sorted(manager.sessions)
            ]
        }

    @app.post("/sessions")
    def create_session(req: SessionCreateRequest):
        managed, existed = manager.create(req)
        if existed:
            return JSONResponse(managed.handle(), status_code=409)
        return JSONResponse(managed.handle(), status_code=201)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return manager.get(session_id).handle()

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str):
        managed = manager.get(session_id)
        if managed.status == "finished":
            raise HTTPException(410, "session finished")
        if managed.status in ("ready", "failed"):
            return Response(status_code=204)
        card = managed.engine.pending_card()
        if card is None:
            return Response(status_code=204)
        card["session_id"] = session_id
        return card

    @app.post("/sessions/{session_id}/labels")
    def post_label(session_id: str, req: LabelRequest):
        managed = manager.get(session_id)
        if managed.engine is None:
            raise HTTPException(410, f"session failed to resume: {managed.error}")
        if not req.class_name.strip():
            raise HTTPException(422, "class name must be nonempty")
        if managed.status == "finished":
            raise HTTPException(410, "session finished")

        def commit():
            managed.engine.commit_label(req.instance_id, req.class_name.strip())

        with managed.lock:
            pending = managed.engine.pending[:1]
            if not pending or pending[0] != req.instance_id:
                raise HTTPException(409, f"instance {req.instance_id} is not the pending card")
            if managed.meta.get("async_updates"):
                managed.updating = True

                def run():
                    try:
                        commit()
                    except Exception as exc:  # noqa: BLE001
                        managed.error = str(exc)
                    finally:
                        managed.updating = False

                threading.Thread(target=run, daemon=True).start()
                return managed.handle()
            try:
                commit()
            except BudgetExhaustedError as exc:
                raise HTTPException(410, str(exc))
            except ValueError as exc:
                raise HTTPException(409, str(exc))
            return managed.handle()

    @app.get("/sessions/{session_id}/curve")
    def get_curve(session_id: str):
        managed = manager.get(session_id)
        if managed.engine is None:
            raise HTTPException(410, f"session failed to resume: {managed.error}")
        labels = [
            {
                "instance_id": r["payload"]["instance_id"],
                "class_name": r["payload"]["class_name"],
                "sequence": r["seq"],
            }
            for r in managed.engine.journal.events("label_committed")
        ]
        return {
            "session_id": session_id,
            "points": managed.engine.curve_points,
            "label_history": labels,
        }

    @app.get("/sessions/{session_id}/export")
    def export_labels(session_id: str):
        managed = manager.get(session_id)
        if managed.engine is None:
            raise HTTPException(410, f"session failed to resume: {managed.error}")
        rows = managed.engine.export_rows()
        lines = ["instance_id,class_name,source"]
        lines += [f"{i},{name},{source}" for i, name, source in rows]
        return PlainTextResponse("\n".join(lines) + "\n", media_type="text/csv")

    ui_dir = _find_ui_dir()
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def placeholder():
            return (
                "<html><body><h1>protolabel service</h1>"
                "<p>UI bundle not built; the JSON API is live. "
                "See <a href='/docs'>/docs</a>.</p></body></html>"
            )

    return app
