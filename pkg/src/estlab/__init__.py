"""estlab: echo state transformer sequence models, recurrent/attention
baselines, the STREAM working-memory benchmark, and a sweep harness, all on
a small reverse-mode autodiff core.
"""

from .baselines import (GRUConfig, LSTMConfig, TransformerConfig, build_gru,
                        build_lstm, build_transformer)
from .checkpoint import load_checkpoint, save_checkpoint
from .est import ESTConfig, build_est
from .tensor import Tape, Tensor, backward, grad_check
from .training import AdamW, RunRecord, TrainConfig, evaluate, train
from .zoo import build_model, make_config

__all__ = [
    "AdamW", "ESTConfig", "GRUConfig", "LSTMConfig", "RunRecord", "Tape",
    "Tensor", "TrainConfig", "TransformerConfig", "backward", "build_est",
    "build_gru", "build_lstm", "build_model", "build_transformer", "evaluate",
    "grad_check", "load_checkpoint", "make_config", "save_checkpoint", "train",
]

__version__ = "0.1.0"
