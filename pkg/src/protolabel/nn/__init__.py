"""Minimal float64 neural-network kernel: layers, model, losses, Adam."""

from .layers import Conv1D, Dense, Dropout, Flatten, MaxPool1D, ReLU
from .model import EncoderModel, build_har_encoder, freeze_except_feature_and_head
from .optim import AdamState, adam_step
from .losses import cross_entropy_from_logits, mse_softmax_from_logits, softmax
from .train import TrainConfig, cross_entropy_pretrain, mse_head_step, one_hot
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AdamState",
    "Conv1D",
    "Dense",
    "Dropout",
    "EncoderModel",
    "Flatten",
    "MaxPool1D",
    "ReLU",
    "TrainConfig",
    "adam_step",
    "build_har_encoder",
    "cross_entropy_from_logits",
    "cross_entropy_pretrain",
    "freeze_except_feature_and_head",
    "grad_check",
    "load_checkpoint",
    "mse_head_step",
    "mse_softmax_from_logits",
    "one_hot",
    "save_checkpoint",
    "softmax",
]
