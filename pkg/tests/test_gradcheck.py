import numpy as np
import pytest

from protolabel.nn import build_har_encoder, grad_check


@pytest.fixture(scope="module")
def probe():
    model = build_har_encoder(1, 16, 2, embed_dim=4, seed=0)
    rng = np.random.default_rng(42)
    x = rng.normal(size=(6, 1, 16))
    labels = np.asarray([0, 1, 0, 1, 1, 0])
    return model, x, labels


@pytest.mark.parametrize("loss", ["cross_entropy", "mse", "protonet_nll"])
def test_backprop_matches_central_differences(probe, loss):
    model, x, labels = probe
    assert grad_check(model, loss, x, labels, h=1e-5, n_probe=200) < 1e-4


def test_unknown_loss_rejected(probe):
    model, x, labels = probe
    with pytest.raises(ValueError):
        grad_check(model, "hinge", x, labels)


def test_probe_covers_all_params_when_model_small(probe):
    # n_probe above the parameter count degrades to an exhaustive check
    model, x, labels = probe
    err = grad_check(model, "cross_entropy", x, labels, n_probe=10**9)
    assert err < 1e-4
