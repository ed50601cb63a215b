"""The full echo state transformer: embedding, per-layer previous-state
attention + working memory + self-attention + feed-forward, output head.

The model is steppable: all recurrent state lives in a fixed set of memory
units, so per-step cost does not depend on how many steps came before.
Training unrolls the recurrence on one tape (backpropagation through time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attention import (AttentionHead, FeedForward, feed_forward,
                        init_attention_head, init_feed_forward,
                        memory_self_attention, previous_state_attention)
from .errors import ConfigError
from .reservoir import (ReservoirUnit, WorkingMemoryState, init_reservoir,
                        memory_step)
from .rng import derive_seed, rng_for
from .tensor import Tensor, linear


@dataclass
class ESTConfig:
    memory_units: int
    memory_dim: int
    attention_dim: int
    num_layers: int
    input_dim: int
    output_dim: int
    connectivity: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("memory_units", "memory_dim", "attention_dim",
                     "num_layers", "input_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"ESTConfig.{name} must be >= 1")
        if not 0.0 < self.connectivity <= 1.0:
            raise ConfigError("ESTConfig.connectivity must be in (0, 1]")


@dataclass
class ESTLayer:
    heads: list[AttentionHead]          # one per memory unit
    units: list[ReservoirUnit]
    sa_head: AttentionHead
    reduce: Tensor                      # (M * d_m) x d_a
    ff: FeedForward

    def params(self) -> list[Tensor]:
        out = [p for h in self.heads for p in h.params()]
        out += [p for u in self.units for p in u.params()]
        out += self.sa_head.params()
        out.append(self.reduce)
        out += self.ff.params()
        return out


class ESTModel:
    """Built model plus its recurrent state (one WorkingMemoryState per layer)."""

    family = "est"

    def __init__(self, config: ESTConfig, embed_w: Tensor, embed_b: Tensor,
                 layers: list[ESTLayer], out_w: Tensor, out_b: Tensor):
        self.config = config
        self.embed_w = embed_w
        self.embed_b = embed_b
        self.layers = layers
        self.out_w = out_w
        self.out_b = out_b
        self.state: list[WorkingMemoryState] | None = None

    def reset_state(self) -> None:
        cfg = self.config
        self.state = [WorkingMemoryState.zeros(cfg.memory_units, cfg.memory_dim)
                      for _ in self.layers]

    def parameters(self) -> list[Tensor]:
        """Every trainable tensor; the fixed recurrent matrices are excluded."""
        out = [self.embed_w, self.embed_b]
        for layer in self.layers:
            out += layer.params()
        out += [self.out_w, self.out_b]
        return out

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        """All tensors including fixed ones, with stable checkpoint names."""
        out = [("embed.w", self.embed_w), ("embed.b", self.embed_b)]
        for li, layer in enumerate(self.layers):
            p = f"layer{li}"
            for hi, h in enumerate(layer.heads):
                out += [(f"{p}.head{hi}.w_q", h.w_q), (f"{p}.head{hi}.w_k", h.w_k),
                        (f"{p}.head{hi}.w_v", h.w_v)]
            for ui, u in enumerate(layer.units):
                out += [(f"{p}.unit{ui}.w_hat", u.w_hat), (f"{p}.unit{ui}.rho", u.rho),
                        (f"{p}.unit{ui}.w_in", u.w_in),
                        (f"{p}.unit{ui}.score_w", u.score_w),
                        (f"{p}.unit{ui}.score_b", u.score_b)]
            out += [(f"{p}.sa.w_q", layer.sa_head.w_q), (f"{p}.sa.w_k", layer.sa_head.w_k),
                    (f"{p}.sa.w_v", layer.sa_head.w_v), (f"{p}.reduce", layer.reduce),
                    (f"{p}.ff.w1", layer.ff.w1), (f"{p}.ff.b1", layer.ff.b1),
                    (f"{p}.ff.w2", layer.ff.w2), (f"{p}.ff.b2", layer.ff.b2)]
        out += [("out.w", self.out_w), ("out.b", self.out_b)]
        return out

    def forward_step(self, token) -> Tensor:
        return forward_step(self, token)

    def forward_sequence(self, tokens) -> Tensor:
        return forward_sequence(self, tokens)


def build_est(config: ESTConfig) -> ESTModel:
    """Deterministic construction from the config seed."""
    cfg = config
    d_a, d_m, m = cfg.attention_dim, cfg.memory_dim, cfg.memory_units
    rng = rng_for(cfg.seed, "est-init")

    def u(rows, cols):
        bound = 1.0 / math.sqrt(rows)
        return Tensor(rng.uniform(-bound, bound, size=(rows, cols)), requires_grad=True)

    layers = []
    for li in range(cfg.num_layers):
        heads = [init_attention_head(d_a, d_m, d_a, d_a, rng) for _ in range(m)]
        units = [init_reservoir(d_m, d_a, cfg.connectivity,
                                seed=derive_seed(cfg.seed, f"layer{li}.unit{ui}"))
                 for ui in range(m)]
        sa_head = init_attention_head(d_m, d_m, d_a, d_m, rng)
        layers.append(ESTLayer(
            heads=heads, units=units, sa_head=sa_head,
            reduce=u(m * d_m, d_a), ff=init_feed_forward(d_a, rng),
        ))
    model = ESTModel(
        config=cfg,
        embed_w=u(cfg.input_dim, d_a),
        embed_b=Tensor(np.zeros((1, d_a)), requires_grad=True),
        layers=layers,
        out_w=u(d_a, cfg.output_dim),
        out_b=Tensor(np.zeros((1, cfg.output_dim)), requires_grad=True),
    )
    model.reset_state()
    return model


def forward_step(model: ESTModel, token) -> Tensor:
    """One timestep: embed, update every layer's memory, read out.

    Layer l > 1 consumes layer l-1's feed-forward output in place of the
    embedding. Updates the recurrent state in place.
    """
    if model.state is None:
        raise ValueError("model state not initialized; call reset_state() first")
    if not isinstance(token, Tensor):
        token = Tensor(np.asarray(token, dtype=np.float64).reshape(1, -1))
    x = linear(token, model.embed_w, model.embed_b)
    for li, layer in enumerate(model.layers):
        info = previous_state_attention(x, model.state[li].states, layer.heads)
        model.state[li] = memory_step(model.state[li], info, layer.units)
        x = memory_self_attention(model.state[li].states, layer.sa_head, layer.reduce)
        x = feed_forward(x, layer.ff)
    return linear(x, model.out_w, model.out_b)


def forward_sequence(model: ESTModel, tokens) -> Tensor:
    """Run T steps from a zero state; recorded on one tape this is full BPTT."""
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 2 or tokens.shape[0] < 1:
        raise ValueError(f"tokens must be T x input_dim with T >= 1, got {tokens.shape}")
    model.reset_state()
    from .tensor import concat_rows
    outs = [forward_step(model, tokens[t:t + 1]) for t in range(tokens.shape[0])]
    return concat_rows(outs)


def count_parameters(model_or_config) -> int:
    """Trainable scalar count; fixed recurrent matrices never count."""
    if isinstance(model_or_config, ESTConfig):
        cfg = model_or_config
        m, d_m, d_a = cfg.memory_units, cfg.memory_dim, cfg.attention_dim
        per_layer = (
            m * (d_a * d_a + d_m * d_a + d_m * d_a)   # per-unit q/k/v projections
            + m * (1 + d_a * d_m + d_a + 1)           # rho, w_in, score map
            + (d_m * d_a + d_m * d_a + d_m * d_m)     # self-attention q/k/v
            + m * d_m * d_a                           # flatten-reduce matrix
            + (d_a * 4 * d_a + 4 * d_a + 4 * d_a * d_a + d_a)  # feed-forward
        )
        return (cfg.input_dim * d_a + d_a
                + cfg.num_layers * per_layer
                + d_a * cfg.output_dim + cfg.output_dim)
    return sum(p.data.size for p in model_or_config.parameters())
