#!/usr/bin/env python3
"""Compare query strategies on the same session setup.

Runs the frozen-encoder variant with each selection rule over a few seeds
and prints how many labels each needed to reach 85% test accuracy.

    python3 demos/04_query_strategies.py
"""

import tempfile
from pathlib import Path

from protolabel import SyntheticSpec, make_synthetic, standardize, summarize
from protolabel.engine import SessionConfig
from protolabel.evaluation import run_experiment
from protolabel.nn import TrainConfig, build_har_encoder, cross_entropy_pretrain, save_checkpoint

tmp = Path(tempfile.mkdtemp())
pretrain = make_synthetic(SyntheticSpec(4, 100, 3, 64, noise_std=2.0, seed=1),
                          split_tag="pretrain")
pool = make_synthetic(SyntheticSpec(6, 80, 3, 64, noise_std=2.0, seed=2), id_prefix="pool")
test = make_synthetic(SyntheticSpec(6, 50, 3, 64, noise_std=2.0, seed=3),
                      split_tag="test", id_prefix="test")

standardized, stats = standardize(pretrain)
encoder = build_har_encoder(3, 64, 4, embed_dim=64, seed=0)
encoder, _ = cross_entropy_pretrain(encoder, standardized,
                                    TrainConfig(epochs=8, batch_size=32, seed=0))
checkpoint = tmp / "encoder.ckpt"
save_checkpoint(encoder, checkpoint, stats=stats)

print(f"{'strategy':<18} {'labels to 85%':>14} {'final acc':>10} {'tail slope':>12}")
for strategy in ("margin", "least_confidence", "entropy", "random", "ranked_batch"):
    cfg = SessionConfig(
        algorithm="atpn",
        strategy=strategy,
        budget=60,
        batch_size=4 if strategy == "ranked_batch" else 1,
        seed=0,
        checkpoint_path=str(checkpoint),
        eval_cadence=2,
    )
    curve = run_experiment(cfg, pool, test, tmp / strategy, name=strategy,
                           n_reps=3, base_seed=5)
    summary = summarize(curve, thresholds=(0.85,))
    reach = summary.queries_to_reach.get(0.85, "never")
    print(f"{strategy:<18} {str(reach):>14} {curve.mean[-1]:>10.3f} "
          f"{summary.exploitation_slope:>12.5f}")
