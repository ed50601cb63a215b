"""Named model configurations for the benchmark sweep.

Four architecture sizes per family (nominal 1k / 10k / 100k / 1M trainable
parameters), four structural variants for EST and Transformer, one each for
GRU and LSTM. Configs here carry only architectural fields; input/output
dims and seed are filled in per task at build time.
"""

from __future__ import annotations

from dataclasses import replace

from .baselines import (GRUConfig, LSTMConfig, TransformerConfig, build_gru,
                        build_lstm, build_transformer)
from .baselines import count_parameters as count_baseline
from .errors import ConfigError
from .est import ESTConfig, build_est
from .est import count_parameters as count_est

SIZE_BUCKETS = {"1k": 1_000, "10k": 10_000, "100k": 100_000, "1M": 1_000_000}

# architectural fields only; (input_dim, output_dim, seed) set per run
EST_ZOO = {
    "est-1-1k": dict(memory_units=2, memory_dim=13, attention_dim=6, num_layers=1),
    "est-2-1k": dict(memory_units=10, memory_dim=15, attention_dim=3, num_layers=1),
    "est-3-1k": dict(memory_units=5, memory_dim=5, attention_dim=5, num_layers=1),
    "est-4-1k": dict(memory_units=4, memory_dim=29, attention_dim=4, num_layers=1),
    "est-1-10k": dict(memory_units=6, memory_dim=48, attention_dim=13, num_layers=1),
    "est-2-10k": dict(memory_units=14, memory_dim=49, attention_dim=8, num_layers=1),
    "est-3-10k": dict(memory_units=10, memory_dim=46, attention_dim=10, num_layers=1),
    "est-4-10k": dict(memory_units=8, memory_dim=110, attention_dim=8, num_layers=1),
    "est-1-100k": dict(memory_units=12, memory_dim=101, attention_dim=32, num_layers=1),
    "est-2-100k": dict(memory_units=34, memory_dim=100, attention_dim=17, num_layers=1),
    "est-3-100k": dict(memory_units=23, memory_dim=85, attention_dim=23, num_layers=1),
    "est-4-100k": dict(memory_units=16, memory_dim=314, attention_dim=16, num_layers=1),
    "est-1-1M": dict(memory_units=30, memory_dim=241, attention_dim=64, num_layers=1),
    "est-2-1M": dict(memory_units=64, memory_dim=252, attention_dim=38, num_layers=1),
    "est-3-1M": dict(memory_units=47, memory_dim=253, attention_dim=47, num_layers=1),
    "est-4-1M": dict(memory_units=38, memory_dim=529, attention_dim=38, num_layers=1),
}

GRU_ZOO = {
    "gru-1k": dict(hidden_size=12, num_layers=1),
    "gru-10k": dict(hidden_size=51, num_layers=1),
    "gru-100k": dict(hidden_size=175, num_layers=1),
    "gru-1M": dict(hidden_size=570, num_layers=1),
}

LSTM_ZOO = {
    "lstm-1k": dict(hidden_size=10, num_layers=1),
    "lstm-10k": dict(hidden_size=43, num_layers=1),
    "lstm-100k": dict(hidden_size=151, num_layers=1),
    "lstm-1M": dict(hidden_size=493, num_layers=1),
}

TRANSFORMER_ZOO = {
    "transformer-1-1k": dict(d_model=8, nhead=2, num_layers=1, dim_feedforward=29),
    "transformer-2-1k": dict(d_model=8, nhead=4, num_layers=1, dim_feedforward=29),
    "transformer-3-1k": dict(d_model=10, nhead=2, num_layers=1, dim_feedforward=10),
    "transformer-4-1k": dict(d_model=10, nhead=5, num_layers=1, dim_feedforward=10),
    "transformer-1-10k": dict(d_model=28, nhead=4, num_layers=1, dim_feedforward=112),
    "transformer-2-10k": dict(d_model=28, nhead=7, num_layers=1, dim_feedforward=112),
    "transformer-3-10k": dict(d_model=38, nhead=2, num_layers=1, dim_feedforward=38),
    "transformer-4-10k": dict(d_model=38, nhead=19, num_layers=1, dim_feedforward=38),
    "transformer-1-100k": dict(d_model=90, nhead=5, num_layers=1, dim_feedforward=360),
    "transformer-2-100k": dict(d_model=90, nhead=18, num_layers=1, dim_feedforward=360),
    "transformer-3-100k": dict(d_model=128, nhead=8, num_layers=1, dim_feedforward=128),
    "transformer-4-100k": dict(d_model=128, nhead=16, num_layers=1, dim_feedforward=128),
    "transformer-1-1M": dict(d_model=290, nhead=29, num_layers=1, dim_feedforward=1130),
    "transformer-2-1M": dict(d_model=290, nhead=58, num_layers=1, dim_feedforward=1130),
    "transformer-3-1M": dict(d_model=405, nhead=9, num_layers=1, dim_feedforward=405),
    "transformer-4-1M": dict(d_model=405, nhead=45, num_layers=1, dim_feedforward=405),
}

FAMILIES = ("est", "gru", "lstm", "transformer")
_ZOO_BY_FAMILY = {"est": EST_ZOO, "gru": GRU_ZOO, "lstm": LSTM_ZOO,
                  "transformer": TRANSFORMER_ZOO}
_CONFIG_CLS = {"est": ESTConfig, "gru": GRUConfig, "lstm": LSTMConfig,
               "transformer": TransformerConfig}
_BUILDERS = {"est": build_est, "gru": build_gru, "lstm": build_lstm,
             "transformer": build_transformer}


def config_names(family: str, size: str | None = None) -> list[str]:
    zoo = _ZOO_BY_FAMILY.get(family)
    if zoo is None:
        raise ConfigError(f"unknown model family {family!r}")
    if size is None:
        return sorted(zoo)
    if size not in SIZE_BUCKETS:
        raise ConfigError(f"unknown size bucket {size!r}")
    return sorted(name for name in zoo if name.endswith(f"-{size}"))


def family_of(config_name: str) -> str:
    for family, zoo in _ZOO_BY_FAMILY.items():
        if config_name in zoo:
            return family
    raise ConfigError(f"unknown model config {config_name!r}")


def size_of(config_name: str) -> str:
    return config_name.rsplit("-", 1)[1]


def make_config(config_name: str, input_dim: int, output_dim: int,
                seed: int = 0, **overrides):
    """Instantiate a zoo entry with task dims (and e.g. max_len) filled in."""
    family = family_of(config_name)
    fields = dict(_ZOO_BY_FAMILY[family][config_name])
    fields.update(input_dim=input_dim, output_dim=output_dim, seed=seed)
    fields.update(overrides)
    return _CONFIG_CLS[family](**fields)


def build_model(config):
    """Build any family's model from its config dataclass."""
    for family, cls in _CONFIG_CLS.items():
        if isinstance(config, cls):
            return _BUILDERS[family](config)
    raise ConfigError(f"unknown config type {type(config).__name__}")


def count_parameters(config) -> int:
    if isinstance(config, ESTConfig):
        return count_est(config)
    return count_baseline(config)


def with_seed(config, seed: int):
    return replace(config, seed=seed)


def parameter_count_report(input_dim: int = 4, output_dim: int = 4) -> list[dict]:
    """Exact counts for every zoo entry vs its nominal bucket.

    Rows flag entries outside [0.5x, 2x] of nominal; the EST variants with
    wide memory relative to attention width exceed the band because every
    unit carries full per-unit projections and the self-attention values
    keep memory width (both are architectural contracts, not bugs).
    """
    rows = []
    for family in FAMILIES:
        for name in config_names(family):
            cfg = make_config(name, input_dim, output_dim)
            nominal = SIZE_BUCKETS[size_of(name)]
            count = count_parameters(cfg)
            rows.append({
                "config": name,
                "family": family,
                "size": size_of(name),
                "nominal": nominal,
                "count": count,
                "ratio": count / nominal,
                "within_band": 0.5 * nominal <= count <= 2.0 * nominal,
            })
    return rows
