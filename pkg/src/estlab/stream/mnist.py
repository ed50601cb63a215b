"""IDX (ubyte) file ingestion for the sequential digit task.

Standard format: big-endian int32 magic (0x00000803 for images with two
dimension fields after the count, 0x00000801 for labels), then raw uint8
payload. Gzipped files are detected by magic and decompressed transparently.
The user supplies the files; nothing is downloaded.
"""

from __future__ import annotations

import gzip
import os
import struct

import numpy as np

from ..errors import DataError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


def _read_bytes(path: str) -> bytes:
    if not os.path.exists(path):
        if os.path.exists(path + ".gz"):
            path = path + ".gz"
        else:
            raise DataError(f"IDX file not found: {path}")
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx_images(path: str) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise DataError(f"{path}: truncated IDX image header")
    magic, count, rows, cols = struct.unpack(">iiii", raw[:16])
    if magic != IMAGE_MAGIC:
        raise DataError(
            f"{path}: bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise DataError(f"{path}: payload shorter than header promises "
                        f"({len(raw)} < {expected} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols,
                         offset=16).reshape(count, rows, cols)


def read_idx_labels(path: str) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise DataError(f"{path}: truncated IDX label header")
    magic, count = struct.unpack(">ii", raw[:8])
    if magic != LABEL_MAGIC:
        raise DataError(
            f"{path}: bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    if len(raw) < 8 + count:
        raise DataError(f"{path}: payload shorter than header promises")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8)


def load_mnist_arrays(data_dir: str):
    """((train_images, train_labels), (test_images, test_labels)) from a dir."""
    train = (read_idx_images(os.path.join(data_dir, TRAIN_IMAGES)),
             read_idx_labels(os.path.join(data_dir, TRAIN_LABELS)))
    test = (read_idx_images(os.path.join(data_dir, TEST_IMAGES)),
            read_idx_labels(os.path.join(data_dir, TEST_LABELS)))
    for imgs, labels in (train, test):
        if len(imgs) != len(labels):
            raise DataError(
                f"image/label counts differ: {len(imgs)} vs {len(labels)}")
    return train, test
