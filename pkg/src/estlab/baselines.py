"""Baseline sequence models under the same training contract as the EST:
GRU, LSTM, and a decoder-only causal Transformer.

The recurrent baselines step token by token like the EST. The Transformer
processes whole sequences with a causal mask (teacher forcing in training);
it keeps layer normalization, as a standard decoder block does. All three
share the EST's fan-in uniform init and the checkpoint container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attention import FeedForward, scaled_dot_attention
from .errors import ConfigError
from .rng import rng_for
from .tensor import (Tensor, add, concat_cols, concat_rows, layer_norm_rows,
                     linear, matmul, mul, relu, sigmoid, slice_cols, sub,
                     tanh)


def _uniform(rng, rows, cols):
    bound = 1.0 / math.sqrt(rows)
    return Tensor(rng.uniform(-bound, bound, size=(rows, cols)), requires_grad=True)


def _zeros(rows, cols):
    return Tensor(np.zeros((rows, cols)), requires_grad=True)


# --- GRU -----------------------------------------------------------------


@dataclass
class GRUConfig:
    hidden_size: int
    num_layers: int
    input_dim: int
    output_dim: int
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_size", "num_layers", "input_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"GRUConfig.{name} must be >= 1")


@dataclass
class GRULayer:
    # update/reset gates share one fused block; the candidate is separate
    # because the reset gate multiplies the state before its matmul
    w_x_zr: Tensor   # in x 2H
    w_h_zr: Tensor   # H x 2H
    b_zr: Tensor     # 1 x 2H
    w_x_h: Tensor    # in x H
    w_h_h: Tensor    # H x H
    b_h: Tensor      # 1 x H

    def params(self):
        return [self.w_x_zr, self.w_h_zr, self.b_zr, self.w_x_h, self.w_h_h, self.b_h]


class GRUModel:
    family = "gru"

    def __init__(self, config: GRUConfig, layers: list[GRULayer],
                 out_w: Tensor, out_b: Tensor):
        self.config = config
        self.layers = layers
        self.out_w = out_w
        self.out_b = out_b
        self.state: list[Tensor] | None = None

    def reset_state(self):
        h = self.config.hidden_size
        self.state = [Tensor(np.zeros((1, h))) for _ in self.layers]

    def parameters(self):
        out = [p for layer in self.layers for p in layer.params()]
        return out + [self.out_w, self.out_b]

    def named_tensors(self):
        out = []
        for li, l in enumerate(self.layers):
            for name, t in zip(("w_x_zr", "w_h_zr", "b_zr", "w_x_h", "w_h_h", "b_h"),
                               l.params()):
                out.append((f"layer{li}.{name}", t))
        return out + [("out.w", self.out_w), ("out.b", self.out_b)]

    def forward_sequence(self, tokens) -> Tensor:
        tokens = np.asarray(tokens, dtype=np.float64)
        self.reset_state()
        outs = []
        for t in range(tokens.shape[0]):
            self.state, y = gru_step(self, self.state, Tensor(tokens[t:t + 1]))
            outs.append(y)
        return concat_rows(outs)


def build_gru(config: GRUConfig) -> GRUModel:
    rng = rng_for(config.seed, "gru-init")
    h = config.hidden_size
    layers = []
    for li in range(config.num_layers):
        d_in = config.input_dim if li == 0 else h
        layers.append(GRULayer(
            w_x_zr=_uniform(rng, d_in, 2 * h), w_h_zr=_uniform(rng, h, 2 * h),
            b_zr=_zeros(1, 2 * h),
            w_x_h=_uniform(rng, d_in, h), w_h_h=_uniform(rng, h, h),
            b_h=_zeros(1, h),
        ))
    model = GRUModel(config, layers, _uniform(rng, h, config.output_dim),
                     _zeros(1, config.output_dim))
    model.reset_state()
    return model


def gru_step(model: GRUModel, state: list[Tensor], token: Tensor):
    """Gated update per layer: z/r gates, candidate with reset-scaled state,
    convex mix of old state and candidate. Returns (new_state, output)."""
    h_size = model.config.hidden_size
    x = token
    new_state = []
    one = Tensor(np.ones((1, h_size)))
    for layer, h in zip(model.layers, state):
        pre = add(add(matmul(x, layer.w_x_zr), matmul(h, layer.w_h_zr)), layer.b_zr)
        z = sigmoid(slice_cols(pre, 0, h_size))
        r = sigmoid(slice_cols(pre, h_size, 2 * h_size))
        cand = tanh(add(add(matmul(x, layer.w_x_h),
                            matmul(mul(r, h), layer.w_h_h)), layer.b_h))
        h_new = add(mul(sub(one, z), h), mul(z, cand))
        new_state.append(h_new)
        x = h_new
    return new_state, linear(x, model.out_w, model.out_b)


# --- LSTM -----------------------------------------------------------------


@dataclass
class LSTMConfig:
    hidden_size: int
    num_layers: int
    input_dim: int
    output_dim: int
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_size", "num_layers", "input_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"LSTMConfig.{name} must be >= 1")


@dataclass
class LSTMLayer:
    w_x: Tensor   # in x 4H, gate order i|f|o|g
    w_h: Tensor   # H x 4H
    b: Tensor     # 1 x 4H

    def params(self):
        return [self.w_x, self.w_h, self.b]


class LSTMModel:
    family = "lstm"

    def __init__(self, config: LSTMConfig, layers: list[LSTMLayer],
                 out_w: Tensor, out_b: Tensor):
        self.config = config
        self.layers = layers
        self.out_w = out_w
        self.out_b = out_b
        self.state: list[tuple[Tensor, Tensor]] | None = None

    def reset_state(self):
        h = self.config.hidden_size
        self.state = [(Tensor(np.zeros((1, h))), Tensor(np.zeros((1, h))))
                      for _ in self.layers]

    def parameters(self):
        out = [p for layer in self.layers for p in layer.params()]
        return out + [self.out_w, self.out_b]

    def named_tensors(self):
        out = []
        for li, l in enumerate(self.layers):
            out += [(f"layer{li}.w_x", l.w_x), (f"layer{li}.w_h", l.w_h),
                    (f"layer{li}.b", l.b)]
        return out + [("out.w", self.out_w), ("out.b", self.out_b)]

    def forward_sequence(self, tokens) -> Tensor:
        tokens = np.asarray(tokens, dtype=np.float64)
        self.reset_state()
        outs = []
        for t in range(tokens.shape[0]):
            self.state, y = lstm_step(self, self.state, Tensor(tokens[t:t + 1]))
            outs.append(y)
        return concat_rows(outs)


def build_lstm(config: LSTMConfig) -> LSTMModel:
    rng = rng_for(config.seed, "lstm-init")
    h = config.hidden_size
    layers = []
    for li in range(config.num_layers):
        d_in = config.input_dim if li == 0 else h
        layers.append(LSTMLayer(
            w_x=_uniform(rng, d_in, 4 * h), w_h=_uniform(rng, h, 4 * h),
            b=_zeros(1, 4 * h),
        ))
    model = LSTMModel(config, layers, _uniform(rng, h, config.output_dim),
                      _zeros(1, config.output_dim))
    model.reset_state()
    return model


def lstm_step(model: LSTMModel, state: list[tuple[Tensor, Tensor]], token: Tensor):
    """Standard i/f/o gates plus cell candidate; returns (new_state, output)."""
    hs = model.config.hidden_size
    x = token
    new_state = []
    for layer, (h, c) in zip(model.layers, state):
        pre = add(add(matmul(x, layer.w_x), matmul(h, layer.w_h)), layer.b)
        i = sigmoid(slice_cols(pre, 0, hs))
        f = sigmoid(slice_cols(pre, hs, 2 * hs))
        o = sigmoid(slice_cols(pre, 2 * hs, 3 * hs))
        g = tanh(slice_cols(pre, 3 * hs, 4 * hs))
        c_new = add(mul(f, c), mul(i, g))
        h_new = mul(o, tanh(c_new))
        new_state.append((h_new, c_new))
        x = h_new
    return new_state, linear(x, model.out_w, model.out_b)


# --- Transformer -----------------------------------------------------------


@dataclass
class TransformerConfig:
    d_model: int
    nhead: int
    num_layers: int
    dim_feedforward: int
    input_dim: int
    output_dim: int
    max_len: int = 512
    seed: int = 0

    def __post_init__(self):
        for name in ("d_model", "nhead", "num_layers", "dim_feedforward",
                     "input_dim", "output_dim", "max_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"TransformerConfig.{name} must be >= 1")
        if self.d_model % self.nhead != 0:
            raise ConfigError(
                f"d_model={self.d_model} is not divisible by nhead={self.nhead}")


@dataclass
class ProjHead:
    w_q: Tensor
    b_q: Tensor
    w_k: Tensor
    b_k: Tensor
    w_v: Tensor
    b_v: Tensor

    def params(self):
        return [self.w_q, self.b_q, self.w_k, self.b_k, self.w_v, self.b_v]


@dataclass
class TransformerLayer:
    heads: list[ProjHead]
    w_o: Tensor
    b_o: Tensor
    ln1_g: Tensor
    ln1_b: Tensor
    ff: FeedForward
    ln2_g: Tensor
    ln2_b: Tensor

    def params(self):
        out = [p for h in self.heads for p in h.params()]
        out += [self.w_o, self.b_o, self.ln1_g, self.ln1_b]
        out += self.ff.params()
        out += [self.ln2_g, self.ln2_b]
        return out


def sinusoidal_encoding(max_len: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_len)[:, None].astype(np.float64)
    i = np.arange(d_model)[None, :].astype(np.float64)
    angles = pos / np.power(10000.0, 2.0 * (i // 2) / d_model)
    pe = np.where(i % 2 == 0, np.sin(angles), np.cos(angles))
    return pe


class TransformerModel:
    family = "transformer"

    def __init__(self, config: TransformerConfig, embed_w, embed_b,
                 layers: list[TransformerLayer], out_w, out_b):
        self.config = config
        self.embed_w = embed_w
        self.embed_b = embed_b
        self.layers = layers
        self.out_w = out_w
        self.out_b = out_b
        self.pos_enc = sinusoidal_encoding(config.max_len, config.d_model)

    def reset_state(self):
        pass  # stateless between sequences: the whole prefix is reprocessed

    def parameters(self):
        out = [self.embed_w, self.embed_b]
        for layer in self.layers:
            out += layer.params()
        return out + [self.out_w, self.out_b]

    def named_tensors(self):
        out = [("embed.w", self.embed_w), ("embed.b", self.embed_b)]
        for li, l in enumerate(self.layers):
            for hi, h in enumerate(l.heads):
                for n, t in zip(("w_q", "b_q", "w_k", "b_k", "w_v", "b_v"), h.params()):
                    out.append((f"layer{li}.head{hi}.{n}", t))
            out += [(f"layer{li}.w_o", l.w_o), (f"layer{li}.b_o", l.b_o),
                    (f"layer{li}.ln1_g", l.ln1_g), (f"layer{li}.ln1_b", l.ln1_b),
                    (f"layer{li}.ff.w1", l.ff.w1), (f"layer{li}.ff.b1", l.ff.b1),
                    (f"layer{li}.ff.w2", l.ff.w2), (f"layer{li}.ff.b2", l.ff.b2),
                    (f"layer{li}.ln2_g", l.ln2_g), (f"layer{li}.ln2_b", l.ln2_b)]
        return out + [("out.w", self.out_w), ("out.b", self.out_b)]

    def forward_sequence(self, tokens) -> Tensor:
        return transformer_forward(self, tokens)


def build_transformer(config: TransformerConfig) -> TransformerModel:
    rng = rng_for(config.seed, "transformer-init")
    d, dh = config.d_model, config.d_model // config.nhead
    layers = []
    for _ in range(config.num_layers):
        heads = [ProjHead(
            w_q=_uniform(rng, d, dh), b_q=_zeros(1, dh),
            w_k=_uniform(rng, d, dh), b_k=_zeros(1, dh),
            w_v=_uniform(rng, d, dh), b_v=_zeros(1, dh),
        ) for _ in range(config.nhead)]
        layers.append(TransformerLayer(
            heads=heads,
            w_o=_uniform(rng, d, d), b_o=_zeros(1, d),
            ln1_g=Tensor(np.ones((1, d)), requires_grad=True), ln1_b=_zeros(1, d),
            ff=FeedForward(
                w1=_uniform(rng, d, config.dim_feedforward),
                b1=_zeros(1, config.dim_feedforward),
                w2=_uniform(rng, config.dim_feedforward, d),
                b2=_zeros(1, d),
            ),
            ln2_g=Tensor(np.ones((1, d)), requires_grad=True), ln2_b=_zeros(1, d),
        ))
    return TransformerModel(
        config,
        embed_w=_uniform(rng, config.input_dim, d), embed_b=_zeros(1, d),
        layers=layers,
        out_w=_uniform(rng, d, config.output_dim), out_b=_zeros(1, config.output_dim),
    )


def transformer_forward(model: TransformerModel, tokens) -> Tensor:
    """Causal full-sequence forward: every position may attend to itself and
    earlier positions only. Output row t is the prediction for step t."""
    tokens = np.asarray(tokens, dtype=np.float64)
    t_len = tokens.shape[0]
    cfg = model.config
    if t_len > cfg.max_len:
        raise ConfigError(f"sequence length {t_len} exceeds max_len {cfg.max_len}")
    keep = np.tril(np.ones((t_len, t_len), dtype=bool))
    x = add(linear(Tensor(tokens), model.embed_w, model.embed_b),
            Tensor(model.pos_enc[:t_len]))
    for layer in model.layers:
        parts = []
        for h in layer.heads:
            q = linear(x, h.w_q, h.b_q)
            k = linear(x, h.w_k, h.b_k)
            v = linear(x, h.w_v, h.b_v)
            parts.append(scaled_dot_attention(q, k, v, causal_mask=keep))
        attn = linear(concat_cols(parts), layer.w_o, layer.b_o)
        x = layer_norm_rows(add(x, attn), layer.ln1_g, layer.ln1_b)
        ffn = linear(relu(linear(x, layer.ff.w1, layer.ff.b1)),
                     layer.ff.w2, layer.ff.b2)
        x = layer_norm_rows(add(x, ffn), layer.ln2_g, layer.ln2_b)
    return linear(x, model.out_w, model.out_b)


# --- parameter counting -----------------------------------------------------


def count_parameters(obj) -> int:
    """Trainable scalar count, closed form for configs, exact for models."""
    if isinstance(obj, GRUConfig):
        h = obj.hidden_size
        total = 0
        for li in range(obj.num_layers):
            d_in = obj.input_dim if li == 0 else h
            total += 3 * (d_in * h + h * h + h)
        return total + h * obj.output_dim + obj.output_dim
    if isinstance(obj, LSTMConfig):
        h = obj.hidden_size
        total = 0
        for li in range(obj.num_layers):
            d_in = obj.input_dim if li == 0 else h
            total += 4 * (d_in * h + h * h + h)
        return total + h * obj.output_dim + obj.output_dim
    if isinstance(obj, TransformerConfig):
        d, f = obj.d_model, obj.dim_feedforward
        per_layer = (3 * (d * d + d)      # q/k/v projections with biases
                     + d * d + d          # output projection
                     + 2 * d + 2 * d      # two layer norms
                     + d * f + f + f * d + d)
        return (obj.input_dim * d + d
                + obj.num_layers * per_layer
                + d * obj.output_dim + obj.output_dim)
    return sum(p.data.size for p in obj.parameters())
