"""STREAM: twelve synthetic working-memory tasks plus scoring and dataset IO."""

from .tasks import (DEFAULT_TASK_CONFIGS, TASK_NAMES, TaskConfig, TaskData,
                    TaskSample, dims, generate, score)
from .io import export_dataset, load_split, write_split
from .mnist import read_idx_images, read_idx_labels

__all__ = [
    "DEFAULT_TASK_CONFIGS", "TASK_NAMES", "TaskConfig", "TaskData",
    "TaskSample", "dims", "generate", "score", "export_dataset",
    "load_split", "write_split", "read_idx_images", "read_idx_labels",
]
