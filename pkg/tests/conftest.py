"""Shared fixtures: small synthetic splits and a pretrained checkpoint."""

import numpy as np
import pytest

from protolabel.data import SyntheticSpec, make_synthetic, standardize
from protolabel.nn import TrainConfig, build_har_encoder, cross_entropy_pretrain, save_checkpoint

C, T, M = 3, 64, 32
NOISE = 0.5


@pytest.fixture(scope="session")
def small_splits():
    """Pretrain on 4 classes, pool/test on 6 (transfer setting)."""
    pretrain = make_synthetic(
        SyntheticSpec(4, 40, C, T, noise_std=NOISE, seed=101), split_tag="pretrain"
    )
    pool = make_synthetic(
        SyntheticSpec(6, 25, C, T, noise_std=NOISE, seed=102), id_prefix="pool"
    )
    test = make_synthetic(
        SyntheticSpec(6, 15, C, T, noise_std=NOISE, seed=103),
        split_tag="test",
        id_prefix="test",
    )
    return pretrain, pool, test


@pytest.fixture(scope="session")
def checkpoint_path(small_splits, tmp_path_factory):
    pretrain, _, _ = small_splits
    std, stats = standardize(pretrain)
    model = build_har_encoder(C, T, pretrain.n_classes, embed_dim=M, seed=0)
    cross_entropy_pretrain(model, std, TrainConfig(epochs=6, batch_size=32, seed=0))
    path = tmp_path_factory.mktemp("ckpt") / "encoder.ckpt"
    save_checkpoint(model, path, stats=stats, meta={"classes": list(pretrain.class_names)})
    return str(path)
