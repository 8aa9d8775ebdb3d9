"""Autoregressive recurrent sketch model with a mixture-density head."""

from .checkpoint import load_checkpoint, save_checkpoint
from .engine import SketcherEngine
from .mdn import LossTerms, MixtureParams, mdn_nll, sample_next
from .model import (
    ModelParams,
    RecurrentState,
    SketcherConfig,
    Suggestion,
    complete,
    forward_step,
    init_params,
    init_state,
    loss_and_grads,
)
from .training import EpochStats, TrainResult, fine_tune, grad_check, train

__all__ = [
    "EpochStats",
    "LossTerms",
    "MixtureParams",
    "ModelParams",
    "RecurrentState",
    "SketcherConfig",
    "SketcherEngine",
    "Suggestion",
    "TrainResult",
    "complete",
    "fine_tune",
    "forward_step",
    "grad_check",
    "init_params",
    "init_state",
    "load_checkpoint",
    "loss_and_grads",
    "mdn_nll",
    "sample_next",
    "save_checkpoint",
    "train",
]
