#!/usr/bin/env python3
"""Run one active labeling session end to end against a simulated oracle.

Shows the loop: a single seeded instance starts the labeled set, the
encoder's feature layer fine-tunes on every committed label, prototypes
are recomputed, and margin sampling picks the next query.

    python3 demos/03_active_session.py
"""

import tempfile
from pathlib import Path

from protolabel import SyntheticSpec, make_synthetic, standardize
from protolabel.engine import ActiveSession, SessionConfig, SimulatedOracle
from protolabel.nn import TrainConfig, build_har_encoder, cross_entropy_pretrain, save_checkpoint

tmp = Path(tempfile.mkdtemp())

# Transfer setting: the encoder knows 4 classes; the pool contains 6.
pretrain = make_synthetic(SyntheticSpec(4, 100, 3, 64, noise_std=1.5, seed=1),
                          split_tag="pretrain")
pool = make_synthetic(SyntheticSpec(6, 60, 3, 64, noise_std=1.5, seed=2), id_prefix="pool")
test = make_synthetic(SyntheticSpec(6, 40, 3, 64, noise_std=1.5, seed=3),
                      split_tag="test", id_prefix="test")

standardized, stats = standardize(pretrain)
encoder = build_har_encoder(3, 64, 4, embed_dim=64, seed=0)
encoder, _ = cross_entropy_pretrain(encoder, standardized,
                                    TrainConfig(epochs=8, batch_size=32, seed=0))
checkpoint = tmp / "encoder.ckpt"
save_checkpoint(encoder, checkpoint, stats=stats)

config = SessionConfig(
    algorithm="atpn",          # fine-tune feature layer + head each iteration
    strategy="margin",         # query the smallest top-2 probability gap
    budget=40,
    seed=11,
    checkpoint_path=str(checkpoint),
)
session = ActiveSession.start(config, pool, SimulatedOracle(pool),
                              tmp / "session.jsonl", test_dataset=test)
session.run_to_completion()

print(f"labeled {session.n_labeled} of {len(pool)} pool instances")
print("accuracy curve (labels -> test accuracy):")
for point in session.curve_points[::5]:
    bar = "#" * int(40 * point["accuracy"])
    print(f"  {point['query_count']:>4} {bar} {point['accuracy']:.3f}")

events = session.journal.events()
kinds = sorted({e["type"] for e in events})
print(f"journal: {len(events)} hash-chained events of kinds {kinds}")
print("exported rows:", len(session.export_rows()), "(labeled + predicted)")
