"""Model checkpoints: a single JSON document, bit-exact round trip.

Layout (format_version 1):

    {
      "format_version": 1,
      "arch": {"n_channels": C, "n_timesteps": T, "embed_dim": M,
               "n_head_classes": K},
      "params_b64": base64 of the flat parameter vector,
                    little-endian float64, layer order as built,
      "trainable_mask_b64": base64 of one uint8 per parameter,
      "stats": {"mean": [...], "std": [...]} or null,
      "meta": free-form dict (pretrain class names, seeds, ...)
    }
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from ..data import ChannelStats
from ..errors import ConfigError
from .model import EncoderModel, build_har_encoder

FORMAT_VERSION = 1


def save_checkpoint(
    model: EncoderModel,
    path: str | Path,
    stats: ChannelStats | None = None,
    meta: dict | None = None,
) -> None:
    params_le = model.params.astype("<f8", copy=False)
    mask_u8 = model.trainable_mask.astype(np.uint8)
    doc = {
        "format_version": FORMAT_VERSION,
        "arch": {
            "n_channels": model.n_channels,
            "n_timesteps": model.n_timesteps,
            "embed_dim": model.embed_dim,
            "n_head_classes": model.n_head_classes,
        },
        "params_b64": base64.b64encode(params_le.tobytes()).decode(),
        "trainable_mask_b64": base64.b64encode(mask_u8.tobytes()).decode(),
        "stats": stats.to_dict() if stats is not None else None,
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path) -> tuple[EncoderModel, ChannelStats | None, dict]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"missing checkpoint file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"checkpoint {path} is not valid JSON: {exc}")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    arch = doc["arch"]
    model = build_har_encoder(
        arch["n_channels"],
        arch["n_timesteps"],
        arch["n_head_classes"],
        embed_dim=arch["embed_dim"],
    )
    params = np.frombuffer(base64.b64decode(doc["params_b64"]), dtype="<f8")
    mask = np.frombuffer(base64.b64decode(doc["trainable_mask_b64"]), dtype=np.uint8)
    if params.size != model.n_params or mask.size != model.n_params:
        raise ConfigError("checkpoint parameter count does not match its architecture")
    model.params[:] = params
    model.trainable_mask[:] = mask.astype(bool)
    stats = ChannelStats.from_dict(doc["stats"]) if doc.get("stats") else None
    return model, stats, doc.get("meta", {})
