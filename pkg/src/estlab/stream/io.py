"""Dataset export: one self-describing binary file per split.

Layout: 8-byte format tag, little-endian uint32 JSON header length, JSON
header (task, full config echo, config hash, seed, split, sample counts and
dims), then per sample: inputs and targets as little-endian float64 rows and
the eval mask as one byte per step. A human-readable JSON config echo sits
next to the binaries.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from ..errors import DataError
from .tasks import TaskConfig, TaskData, TaskSample, config_as_dict, dims

MAGIC = b"STRMDS01"


def config_hash(cfg: TaskConfig) -> str:
    payload = json.dumps(config_as_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def write_split(path: str, cfg: TaskConfig, split: str,
                samples: list[TaskSample], seed: int) -> None:
    if not samples:
        raise DataError(f"refusing to write empty split {split!r}")
    t_len = samples[0].inputs.shape[0]
    in_dim, out_dim, kind = dims(cfg)
    header = {
        "format": "stream-dataset",
        "version": 1,
        "task": cfg.task,
        "config": config_as_dict(cfg),
        "config_hash": config_hash(cfg),
        "seed": seed,
        "split": split,
        "n_samples": len(samples),
        "sequence_steps": t_len,
        "input_dim": in_dim,
        "output_dim": out_dim,
        "kind": kind,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for s in samples:
            if s.inputs.shape != (t_len, in_dim) or s.targets.shape != (t_len, out_dim):
                raise DataError(f"sample shape mismatch in split {split!r}")
            f.write(np.ascontiguousarray(s.inputs, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(s.targets, dtype="<f8").tobytes())
            f.write(s.eval_mask.astype(np.uint8).tobytes())


def load_split(path: str) -> tuple[dict, list[TaskSample]]:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:8] != MAGIC:
        raise DataError(f"{path}: not a stream dataset (magic {raw[:8]!r})")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen].decode())
    t_len = header["sequence_steps"]
    in_dim, out_dim = header["input_dim"], header["output_dim"]
    stride = 8 * t_len * (in_dim + out_dim) + t_len
    offset = 12 + hlen
    expected = offset + header["n_samples"] * stride
    if len(raw) != expected:
        raise DataError(f"{path}: size {len(raw)} != expected {expected}")
    samples = []
    for _ in range(header["n_samples"]):
        inputs = np.frombuffer(raw, dtype="<f8", count=t_len * in_dim,
                               offset=offset).reshape(t_len, in_dim).copy()
        offset += 8 * t_len * in_dim
        targets = np.frombuffer(raw, dtype="<f8", count=t_len * out_dim,
                                offset=offset).reshape(t_len, out_dim).copy()
        offset += 8 * t_len * out_dim
        mask = np.frombuffer(raw, dtype=np.uint8, count=t_len,
                             offset=offset).astype(bool)
        offset += t_len
        samples.append(TaskSample(inputs, targets, mask, header["kind"]))
    return header, samples


def export_dataset(data: TaskData, out_dir: str, seed: int) -> dict[str, str]:
    """Write all three splits plus a config echo; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for split, samples in data.splits.items():
        path = os.path.join(out_dir, f"{data.config.task}_{split}.bin")
        write_split(path, data.config, split, samples, seed)
        paths[split] = path
    echo_path = os.path.join(out_dir, f"{data.config.task}_config.json")
    with open(echo_path, "w") as f:
        json.dump({"task": data.config.task, "seed": seed,
                   "config_hash": config_hash(data.config),
                   "config": config_as_dict(data.config)}, f, indent=2, sort_keys=True)
        f.write("\n")
    paths["config"] = echo_path
    return paths
