"""Model checkpoints: self-describing single-file container.

Layout: 8-byte format tag, little-endian uint32 JSON header length, JSON
header (family, config, seed, ordered tensor manifest with names/shapes),
then each tensor's float64 little-endian bytes in manifest order. All
tensors are stored, including the fixed reservoir matrices, so a load never
has to replay initialization.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from .baselines import GRUConfig, LSTMConfig, TransformerConfig
from .errors import DataError
from .est import ESTConfig
from .zoo import build_model

MAGIC = b"ESTCKPT1"

_CONFIG_TYPES = {
    "est": ESTConfig,
    "gru": GRUConfig,
    "lstm": LSTMConfig,
    "transformer": TransformerConfig,
}


def save_checkpoint(model, path: str) -> None:
    tensors = model.named_tensors()
    header = {
        "format": "est-checkpoint",
        "version": 1,
        "family": model.family,
        "config": dataclasses.asdict(model.config),
        "seed": model.config.seed,
        "tensors": [{"name": n, "rows": t.data.shape[0], "cols": t.data.shape[1]}
                    for n, t in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for _, t in tensors:
            f.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path: str):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:8] != MAGIC:
        raise DataError(f"{path}: not a checkpoint (magic {raw[:8]!r})")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen].decode())
    family = header["family"]
    if family not in _CONFIG_TYPES:
        raise DataError(f"{path}: unknown model family {family!r}")
    config = _CONFIG_TYPES[family](**header["config"])
    model = build_model(config)
    by_name = dict(model.named_tensors())
    if set(by_name) != {m["name"] for m in header["tensors"]}:
        raise DataError(f"{path}: tensor manifest does not match the architecture")
    offset = 12 + hlen
    for manifest in header["tensors"]:
        rows, cols = manifest["rows"], manifest["cols"]
        tensor = by_name[manifest["name"]]
        if tensor.data.shape != (rows, cols):
            raise DataError(f"{path}: {manifest['name']} has shape "
                            f"{tensor.data.shape}, file says {(rows, cols)}")
        n = rows * cols
        tensor.data[...] = np.frombuffer(raw, dtype="<f8", count=n,
                                         offset=offset).reshape(rows, cols)
        offset += 8 * n
    if offset != len(raw):
        raise DataError(f"{path}: trailing bytes after tensor payload")
    # the cached transposes of fixed reservoir matrices must track the load
    if family == "est":
        for layer in model.layers:
            for unit in layer.units:
                unit.w_hat_t.data[...] = unit.w_hat.data.T
    return model
