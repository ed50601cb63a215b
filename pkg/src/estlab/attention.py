"""Attention blocks: scaled dot-product, per-unit previous-state attention,
memory self-attention, and the position-wise feed-forward block.

Conventions (fixed here, used by the full model):
  - query/key width d_k equals the model's attention width everywhere,
  - previous-state attention values have attention width so the embedding
    residual is shape-legal,
  - memory self-attention values keep memory width so the state residual is
    shape-legal, and its output is flattened and linearly reduced,
  - feed-forward is relu with a residual add and a 4x hidden width.
No layer normalization and no dropout in any of these blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .tensor import (Tensor, add, attention_product, concat_rows, linear,
                     matmul, relu, reshape)


@dataclass
class AttentionHead:
    """Q/K/V projection matrices for one attention product (no biases)."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor

    def params(self) -> list[Tensor]:
        return [self.w_q, self.w_k, self.w_v]


def init_attention_head(d_in_q: int, d_in_kv: int, d_k: int, d_v: int,
                        rng: np.random.Generator) -> AttentionHead:
    """Fan-in uniform init: each matrix in +-1/sqrt(rows)."""
    if d_k <= 0:
        raise ConfigError("attention head needs d_k > 0")

    def u(rows, cols):
        bound = 1.0 / math.sqrt(rows)
        return Tensor(rng.uniform(-bound, bound, size=(rows, cols)),
                      requires_grad=True)

    return AttentionHead(w_q=u(d_in_q, d_k), w_k=u(d_in_kv, d_k), w_v=u(d_in_kv, d_v))


@dataclass
class FeedForward:
    """Two affine maps around a relu; hidden width is exactly 4x the input."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    def params(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_feed_forward(d: int, rng: np.random.Generator) -> FeedForward:
    hidden = 4 * d

    def u(rows, cols):
        bound = 1.0 / math.sqrt(rows)
        return Tensor(rng.uniform(-bound, bound, size=(rows, cols)),
                      requires_grad=True)

    return FeedForward(
        w1=u(d, hidden), b1=Tensor(np.zeros((1, hidden)), requires_grad=True),
        w2=u(hidden, d), b2=Tensor(np.zeros((1, d)), requires_grad=True),
    )


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor,
                         causal_mask: np.ndarray | None = None) -> Tensor:
    """softmax(q k^T / sqrt(d_k)) v, with optional boolean keep-mask.

    Masked-out entries get exactly zero weight; a row with every entry
    masked has no distribution and is rejected. The product itself runs as
    one fused op (it is the hot path of every model here).
    """
    d_k = q.data.shape[1]
    if k.data.shape[1] != d_k:
        raise DimensionError(f"attention: query width {d_k} vs key width {k.data.shape[1]}")
    if k.data.shape[0] != v.data.shape[0]:
        raise DimensionError("attention: key/value row counts differ")
    if causal_mask is not None:
        if causal_mask.shape != (q.data.shape[0], k.data.shape[0]):
            raise DimensionError(
                f"attention: mask {causal_mask.shape} vs scores "
                f"{(q.data.shape[0], k.data.shape[0])}")
        if not causal_mask.any(axis=1).all():
            raise DimensionError("attention: fully-masked row")
    return attention_product(q, k, v, keep=causal_mask)


def previous_state_attention(emb: Tensor, states: Tensor,
                             heads: list[AttentionHead]) -> Tensor:
    """Per-unit attention: row i queries all unit states with the embedding.

    Head i builds its query from emb (one row per step) and keys/values from
    the full M-row state matrix; the embedding is added back as a residual.
    Output row i is unit i's information vector.
    """
    m = states.data.shape[0]
    if not heads:
        raise ConfigError("previous_state_attention: need at least one memory unit")
    if len(heads) != m:
        raise DimensionError(f"{len(heads)} heads for {m} state rows")
    rows = []
    for head in heads:
        q = matmul(emb, head.w_q)
        k = matmul(states, head.w_k)
        v = matmul(states, head.w_v)
        rows.append(add(scaled_dot_attention(q, k, v), emb))
    return concat_rows(rows)


def memory_self_attention(states: Tensor, head: AttentionHead,
                          reduce: Tensor) -> Tensor:
    """Attend over unit states as tokens, add the state residual, flatten and
    reduce to one attention-width row."""
    m, d_m = states.data.shape
    if reduce.data.shape[0] != m * d_m:
        raise DimensionError(f"reduce expects {m * d_m} rows, has {reduce.data.shape[0]}")
    q = matmul(states, head.w_q)
    k = matmul(states, head.w_k)
    v = matmul(states, head.w_v)
    attended = add(scaled_dot_attention(q, k, v), states)
    return matmul(reshape(attended, 1, m * d_m), reduce)


def feed_forward(x: Tensor, ff: FeedForward) -> Tensor:
    """relu MLP with residual: x + w2.relu(w1.x + b1) + b2."""
    return add(linear(relu(linear(x, ff.w1, ff.b1)), ff.w2, ff.b2), x)
