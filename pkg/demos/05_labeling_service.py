#!/usr/bin/env python3
"""Drive the HTTP labeling service the way the browser UI does.

Registers a dataset, opens a human-oracle session, labels the queried
cards over the wire, and exports the result — all in-process via the
ASGI test client so no port is needed.

    python3 demos/05_labeling_service.py
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from protolabel import SyntheticSpec, load_dataset, make_synthetic, standardize
from protolabel.nn import TrainConfig, build_har_encoder, cross_entropy_pretrain, save_checkpoint
from protolabel.service import create_app

tmp = Path(tempfile.mkdtemp())
data_dir, journal_dir = tmp / "data", tmp / "journals"
data_dir.mkdir()

# Ship a pretrained encoder into the service's data directory.
pretrain = make_synthetic(SyntheticSpec(4, 80, 3, 64, noise_std=1.0, seed=1),
                          split_tag="pretrain")
standardized, stats = standardize(pretrain)
encoder = build_har_encoder(3, 64, 4, embed_dim=64, seed=0)
encoder, _ = cross_entropy_pretrain(encoder, standardized,
                                    TrainConfig(epochs=6, batch_size=32, seed=0))
save_checkpoint(encoder, data_dir / "encoder.ckpt", stats=stats)

client = TestClient(create_app(data_dir=data_dir, journal_dir=journal_dir))
print("health:", client.get("/health").json())

client.post("/datasets", json={
    "name": "bench", "kind": "synthetic", "classes": 6, "per_class": 15,
    "channels": 3, "timesteps": 64, "noise_std": 1.0, "seed": 42,
})
print("datasets:", [d["name"] for d in client.get("/datasets").json()["datasets"]])

handle = client.post("/sessions", json={
    "dataset": "bench",
    "oracle": "human",
    "config": {"algorithm": "atpn", "strategy": "margin", "budget": 8,
               "checkpoint": "encoder.ckpt", "seed": 3},
}).json()
sid = handle["session_id"]
print(f"session {sid}: {handle['status']}")

# Play the expert: answer each card with the dataset's true class.
truth = load_dataset(data_dir / "bench.npz")
while True:
    response = client.get(f"/sessions/{sid}/next")
    if response.status_code != 200:
        break
    card = response.json()
    name = truth.class_names[truth.label_of(card["instance_id"])]
    probs = ", ".join(f"{c}={p:.2f}" for c, p in
                      zip(card["class_names"], card["probabilities"])) or "cold start"
    print(f"  card {card['instance_id']} ({probs}) -> {name}")
    client.post(f"/sessions/{sid}/labels",
                json={"instance_id": card["instance_id"], "class_name": name})

curve = client.get(f"/sessions/{sid}/curve").json()
print("labels committed:", len(curve["label_history"]))
print("uncertainty trend:",
      [round(p["mean_pool_uncertainty"], 3) for p in curve["points"]])
export = client.get(f"/sessions/{sid}/export").text
print("export preview:")
for line in export.splitlines()[:5]:
    print("  " + line)
