"""Generators for the twelve STREAM tasks.

Channel layout convention for composite inputs, in order: symbol/value
block, then marker bit, then trigger bit (each only when the task uses it).
Discrete targets are one-hot rows at evaluated positions and zero elsewhere;
the eval mask is the single source of truth for which positions score.

Every generator is a pure function of (config, seed): identical arguments
give bit-identical samples.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import ConfigError, DataError
from ..rng import rng_for
from .mnist import load_mnist_arrays

TASK_NAMES = (
    "discrete_postcasting",
    "continuous_postcasting",
    "sinus_forecasting",
    "chaotic_forecasting",
    "discrete_pattern_completion",
    "continuous_pattern_completion",
    "simple_copy",
    "selective_copy",
    "adding_problem",
    "sorting_problem",
    "sequential_mnist",
    "bracket_matching",
)

DISCRETE_TASKS = {
    "discrete_postcasting", "discrete_pattern_completion", "simple_copy",
    "selective_copy", "adding_problem", "sorting_problem", "sequential_mnist",
    "bracket_matching",
}


@dataclass
class TaskSample:
    inputs: np.ndarray     # (T, input_dim)
    targets: np.ndarray    # (T, output_dim); zeros at unevaluated steps
    eval_mask: np.ndarray  # (T,) bool, at least one True
    kind: str              # "discrete" | "continuous"


@dataclass
class TaskConfig:
    """One task plus its generation and training-protocol parameters."""

    task: str
    n_train: int = 100
    n_valid: int = 20
    n_test: int = 100
    sequence_length: int = 50
    delay: int = 5
    n_symbols: int = 3
    base_length: int = 4
    mask_ratio: float = 0.2
    n_markers: int = 5
    max_number: int = 3
    max_depth: int = 5
    forecast_length: int = 5
    training_ratio: float = 0.45
    validation_ratio: float = 0.1
    testing_ratio: float = 0.45
    batch_size: int = 10
    epochs: int = 250
    patience: int = 30
    seed: int = 0
    data_dir: str | None = None  # sequential_mnist only

    def __post_init__(self):
        if self.task not in TASK_NAMES:
            raise ConfigError(f"unknown task {self.task!r}")


@dataclass
class TaskData:
    config: TaskConfig
    train: list[TaskSample] = field(default_factory=list)
    valid: list[TaskSample] = field(default_factory=list)
    test: list[TaskSample] = field(default_factory=list)

    @property
    def splits(self) -> dict[str, list[TaskSample]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}


# benchmark defaults, one entry per task
DEFAULT_TASK_CONFIGS = {
    "adding_problem": TaskConfig(task="adding_problem", sequence_length=10,
                                 max_number=3),
    "bracket_matching": TaskConfig(task="bracket_matching", sequence_length=50,
                                   max_depth=5),
    "chaotic_forecasting": TaskConfig(task="chaotic_forecasting",
                                      sequence_length=200, forecast_length=5,
                                      batch_size=1),
    "continuous_pattern_completion": TaskConfig(
        task="continuous_pattern_completion", sequence_length=60,
        base_length=4, mask_ratio=0.2),
    "continuous_postcasting": TaskConfig(task="continuous_postcasting",
                                         sequence_length=50, delay=5),
    "discrete_pattern_completion": TaskConfig(
        task="discrete_pattern_completion", sequence_length=60, n_symbols=3,
        base_length=4, mask_ratio=0.2),
    "discrete_postcasting": TaskConfig(task="discrete_postcasting",
                                       sequence_length=50, delay=5, n_symbols=3),
    "selective_copy": TaskConfig(task="selective_copy", sequence_length=40,
                                 delay=5, n_markers=5, n_symbols=3),
    "sequential_mnist": TaskConfig(task="sequential_mnist"),
    "simple_copy": TaskConfig(task="simple_copy", sequence_length=22, delay=5,
                              n_symbols=3),
    "sinus_forecasting": TaskConfig(task="sinus_forecasting",
                                    sequence_length=200, forecast_length=5,
                                    batch_size=1),
    "sorting_problem": TaskConfig(task="sorting_problem", sequence_length=10,
                                  n_symbols=3),
}

SINUS_CARRIER_HZ = 10.0
SINUS_MODULATOR_HZ = 0.5
SINUS_MODULATION_INDEX = 2.0
SAMPLE_DT = 0.01
LORENZ_SIGMA, LORENZ_RHO, LORENZ_BETA = 10.0, 28.0, 8.0 / 3.0
LORENZ_TRANSIENT = 1000


def dims(cfg: TaskConfig) -> tuple[int, int, str]:
    """(input_dim, output_dim, kind) for models and IO; single source of truth."""
    t = cfg.task
    if t == "discrete_postcasting":
        return cfg.n_symbols, cfg.n_symbols, "discrete"
    if t == "continuous_postcasting":
        return 1, 1, "continuous"
    if t == "sinus_forecasting":
        return 1, 1, "continuous"
    if t == "chaotic_forecasting":
        return 3, 3, "continuous"
    if t == "discrete_pattern_completion":
        return cfg.n_symbols + 1, cfg.n_symbols, "discrete"
    if t == "continuous_pattern_completion":
        return 1, 1, "continuous"
    if t == "simple_copy":
        return cfg.n_symbols + 1, cfg.n_symbols, "discrete"
    if t == "selective_copy":
        return cfg.n_symbols + 2, cfg.n_symbols, "discrete"
    if t == "adding_problem":
        return cfg.max_number + 2, 2 * cfg.max_number - 1, "discrete"
    if t == "sorting_problem":
        return cfg.n_symbols + cfg.sequence_length + 1, cfg.n_symbols, "discrete"
    if t == "sequential_mnist":
        return 29, 10, "discrete"
    if t == "bracket_matching":
        return 2, 2, "discrete"
    raise ConfigError(f"unknown task {t!r}")


def _one_hot(indices: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((len(indices), width))
    out[np.arange(len(indices)), indices] = 1.0
    return out


def _count_splits(cfg: TaskConfig) -> dict[str, int]:
    return {"train": cfg.n_train, "valid": cfg.n_valid, "test": cfg.n_test}


def _per_sample_task(cfg, seed, make_sample) -> TaskData:
    data = TaskData(config=cfg)
    for split, n in _count_splits(cfg).items():
        rng = rng_for(seed, f"{cfg.task}:{split}")
        getattr(data, split).extend(make_sample(rng) for _ in range(n))
    return data


# --- simple memory -----------------------------------------------------------


def gen_discrete_postcasting(cfg: TaskConfig, seed: int) -> TaskData:
    """Echo each one-hot symbol after a fixed delay."""
    t_len, delay, n_sym = cfg.sequence_length, cfg.delay, cfg.n_symbols
    if delay >= t_len:
        raise ConfigError(f"delay {delay} must be < sequence_length {t_len}")

    def make(rng):
        syms = rng.integers(0, n_sym, size=t_len)
        inputs = _one_hot(syms, n_sym)
        targets = np.zeros((t_len, n_sym))
        mask = np.zeros(t_len, dtype=bool)
        mask[delay:] = True
        targets[delay:] = inputs[:t_len - delay]
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


def gen_continuous_postcasting(cfg: TaskConfig, seed: int) -> TaskData:
    """Echo each real value in [-0.8, 0.8] after a fixed delay."""
    t_len, delay = cfg.sequence_length, cfg.delay
    if delay >= t_len:
        raise ConfigError(f"delay {delay} must be < sequence_length {t_len}")

    def make(rng):
        vals = rng.uniform(-0.8, 0.8, size=t_len)
        inputs = vals.reshape(-1, 1)
        targets = np.zeros((t_len, 1))
        mask = np.zeros(t_len, dtype=bool)
        mask[delay:] = True
        targets[delay:, 0] = vals[:t_len - delay]
        return TaskSample(inputs, targets, mask, "continuous")

    return _per_sample_task(cfg, seed, make)


# --- signal processing ---------------------------------------------------------


def _chronological_split(signal: np.ndarray, cfg: TaskConfig) -> TaskData:
    """Cut one (T+forecast) signal into shifted-target train/valid/test runs."""
    ratios = (cfg.training_ratio, cfg.validation_ratio, cfg.testing_ratio)
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {ratios}")
    t_len, fl = cfg.sequence_length, cfg.forecast_length
    n_train = int(round(ratios[0] * t_len))
    n_valid = int(round(ratios[1] * t_len))
    bounds = {"train": (0, n_train),
              "valid": (n_train, n_train + n_valid),
              "test": (n_train + n_valid, t_len)}
    kind = "continuous"
    data = TaskData(config=cfg)
    for split, (a, b) in bounds.items():
        if b <= a:
            raise ConfigError(f"{split} split is empty under ratios {ratios}")
        sample = TaskSample(
            inputs=signal[a:b].copy(),
            targets=signal[a + fl:b + fl].copy(),
            eval_mask=np.ones(b - a, dtype=bool),
            kind=kind,
        )
        getattr(data, split).append(sample)
    return data


def gen_sinus_forecasting(cfg: TaskConfig, seed: int) -> TaskData:
    """Frequency-modulated sine: predict the value forecast_length steps ahead.

    The carrier's phase is modulated by a slower sine, so the signal mixes a
    fast and a slow timescale. The signal itself is deterministic.
    """
    total = cfg.sequence_length + cfg.forecast_length
    t = np.arange(total) * SAMPLE_DT
    s = np.sin(2 * np.pi * SINUS_CARRIER_HZ * t
               + SINUS_MODULATION_INDEX * np.sin(2 * np.pi * SINUS_MODULATOR_HZ * t))
    return _chronological_split(s.reshape(-1, 1), cfg)


def lorenz_rk4(y0: np.ndarray, steps: int, dt: float = SAMPLE_DT) -> np.ndarray:
    """Classic fixed-step 4th-order integration of the Lorenz system."""

    def deriv(y):
        x, yy, z = y
        return np.array([LORENZ_SIGMA * (yy - x),
                         x * (LORENZ_RHO - z) - yy,
                         x * yy - LORENZ_BETA * z])

    out = np.empty((steps + 1, 3))
    out[0] = y0
    y = np.asarray(y0, dtype=np.float64)
    for i in range(steps):
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * dt * k1)
        k3 = deriv(y + 0.5 * dt * k2)
        k4 = deriv(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return out


def gen_chaotic_forecasting(cfg: TaskConfig, seed: int) -> TaskData:
    """Lorenz attractor, each dimension min-max normalized to [-1, 1]."""
    retained = cfg.sequence_length + cfg.forecast_length
    rng = rng_for(seed, "chaotic_forecasting:init")
    y0 = np.array([1.0, 1.0, 1.0]) + rng.uniform(-0.01, 0.01, size=3)
    traj = lorenz_rk4(y0, LORENZ_TRANSIENT + retained)[LORENZ_TRANSIENT + 1:]
    lo, hi = traj.min(axis=0), traj.max(axis=0)
    signal = 2.0 * (traj - lo) / (hi - lo) - 1.0
    return _chronological_split(signal, cfg)


# --- long-term dependencies ------------------------------------------------------


def gen_discrete_pattern_completion(cfg: TaskConfig, seed: int) -> TaskData:
    """A short symbol pattern tiles the sequence; masked positions (symbol
    block zeroed, marker bit on) must be predicted."""
    t_len, n_sym, base_len = cfg.sequence_length, cfg.n_symbols, cfg.base_length
    n_masked = max(1, int(round(cfg.mask_ratio * t_len)))

    def make(rng):
        base = rng.integers(0, n_sym, size=base_len)
        tiled = base[np.arange(t_len) % base_len]
        inputs = np.zeros((t_len, n_sym + 1))
        inputs[np.arange(t_len), tiled] = 1.0
        masked = rng.choice(t_len, size=n_masked, replace=False)
        inputs[masked, :n_sym] = 0.0
        inputs[masked, n_sym] = 1.0
        targets = np.zeros((t_len, n_sym))
        targets[masked, tiled[masked]] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[masked] = True
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


def gen_continuous_pattern_completion(cfg: TaskConfig, seed: int) -> TaskData:
    """Tiled real pattern in [0, 0.8]; masked inputs carry the -1 sentinel."""
    t_len, base_len = cfg.sequence_length, cfg.base_length
    n_masked = max(1, int(round(cfg.mask_ratio * t_len)))

    def make(rng):
        base = rng.uniform(0.0, 0.8, size=base_len)
        tiled = base[np.arange(t_len) % base_len]
        inputs = tiled.reshape(-1, 1).copy()
        masked = rng.choice(t_len, size=n_masked, replace=False)
        inputs[masked, 0] = -1.0
        targets = np.zeros((t_len, 1))
        targets[masked, 0] = tiled[masked]
        mask = np.zeros(t_len, dtype=bool)
        mask[masked] = True
        return TaskSample(inputs, targets, mask, "continuous")

    return _per_sample_task(cfg, seed, make)


def gen_simple_copy(cfg: TaskConfig, seed: int) -> TaskData:
    """Memorize a symbol sequence, wait out a delay, replay it on trigger.

    Layout: L content steps, `delay` blank steps, then L output steps. The
    trigger bit fires at the first output step. T = 2L + delay.
    """
    l_len, delay, n_sym = cfg.sequence_length, cfg.delay, cfg.n_symbols
    t_len = 2 * l_len + delay

    def make(rng):
        syms = rng.integers(0, n_sym, size=l_len)
        inputs = np.zeros((t_len, n_sym + 1))
        inputs[np.arange(l_len), syms] = 1.0
        inputs[l_len + delay, n_sym] = 1.0
        targets = np.zeros((t_len, n_sym))
        targets[np.arange(l_len) + l_len + delay, syms] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[l_len + delay:] = True
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


def gen_selective_copy(cfg: TaskConfig, seed: int) -> TaskData:
    """Replay only the marker-flagged symbols, in their original order.

    Layout: L content steps (marker bit flags n_markers of them), `delay`
    blanks, then n_markers output steps; trigger fires at the first output
    step. T = L + delay + n_markers.
    """
    l_len, delay = cfg.sequence_length, cfg.delay
    n_sym, n_mark = cfg.n_symbols, cfg.n_markers
    if n_mark > l_len:
        raise ConfigError(f"n_markers {n_mark} exceeds sequence_length {l_len}")
    t_len = l_len + delay + n_mark

    def make(rng):
        syms = rng.integers(0, n_sym, size=l_len)
        marked = np.sort(rng.choice(l_len, size=n_mark, replace=False))
        inputs = np.zeros((t_len, n_sym + 2))
        inputs[np.arange(l_len), syms] = 1.0
        inputs[marked, n_sym] = 1.0
        inputs[l_len + delay, n_sym + 1] = 1.0
        targets = np.zeros((t_len, n_sym))
        targets[np.arange(n_mark) + l_len + delay, syms[marked]] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[l_len + delay:] = True
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


# --- information manipulation ------------------------------------------------------


def gen_adding_problem(cfg: TaskConfig, seed: int) -> TaskData:
    """Sum the two marker-flagged integers; answer as a class at the trigger.

    Integers are one-hot in {0..max_number-1}; the sum lives in
    {0..2(max_number-1)}, so output width is 2*max_number - 1. T = L + 1
    (one appended trigger step, the only evaluated position).
    """
    l_len, max_num = cfg.sequence_length, cfg.max_number
    if l_len < 2:
        raise ConfigError("adding_problem needs sequence_length >= 2")
    t_len = l_len + 1

    def make(rng):
        nums = rng.integers(0, max_num, size=l_len)
        marked = rng.choice(l_len, size=2, replace=False)
        inputs = np.zeros((t_len, max_num + 2))
        inputs[np.arange(l_len), nums] = 1.0
        inputs[marked, max_num] = 1.0
        inputs[l_len, max_num + 1] = 1.0
        targets = np.zeros((t_len, 2 * max_num - 1))
        targets[l_len, nums[marked].sum()] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[l_len] = True
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


def gen_sorting_problem(cfg: TaskConfig, seed: int) -> TaskData:
    """Each step pairs a symbol with a position indicator (a permutation);
    after the trigger, emit the symbols sorted by their positions.

    Layout: L content steps then L output steps; trigger at the first output
    step. Output step k wants the symbol whose position indicator was k.
    """
    l_len, n_sym = cfg.sequence_length, cfg.n_symbols
    t_len = 2 * l_len

    def make(rng):
        syms = rng.integers(0, n_sym, size=l_len)
        perm = rng.permutation(l_len)
        inv = np.argsort(perm)
        inputs = np.zeros((t_len, n_sym + l_len + 1))
        inputs[np.arange(l_len), syms] = 1.0
        inputs[np.arange(l_len), n_sym + perm] = 1.0
        inputs[l_len, n_sym + l_len] = 1.0
        targets = np.zeros((t_len, n_sym))
        targets[np.arange(l_len) + l_len, syms[inv]] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[l_len:] = True
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


def gen_sequential_mnist(cfg: TaskConfig, seed: int,
                         data_dir: str | None = None) -> TaskData:
    """Feed digit images column by column (28 steps of 28 pixels, scaled to
    [0, 1]); classify at the appended trigger step. Train/valid samples come
    from the training archive, test samples from the test archive."""
    data_dir = data_dir or cfg.data_dir or os.environ.get("EST_LAB_DATA_DIR")
    if not data_dir:
        raise DataError(
            "sequential_mnist needs a data directory: set EST_LAB_DATA_DIR or "
            "pass data_dir")
    (train_imgs, train_labels), (test_imgs, test_labels) = load_mnist_arrays(data_dir)

    def make_sample(image: np.ndarray, label: int) -> TaskSample:
        t_len = 29
        inputs = np.zeros((t_len, 29))
        inputs[:28, :28] = (image.astype(np.float64) / 255.0).T  # row t = column t
        inputs[28, 28] = 1.0
        targets = np.zeros((t_len, 10))
        targets[28, label] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[28] = True
        return TaskSample(inputs, targets, mask, "discrete")

    rng = rng_for(seed, "sequential_mnist:select")
    n_tv = cfg.n_train + cfg.n_valid
    if n_tv > len(train_imgs) or cfg.n_test > len(test_imgs):
        raise DataError("not enough MNIST images for the requested sample counts")
    tv_idx = rng.choice(len(train_imgs), size=n_tv, replace=False)
    test_idx = rng.choice(len(test_imgs), size=cfg.n_test, replace=False)
    data = TaskData(config=cfg)
    for i in tv_idx[:cfg.n_train]:
        data.train.append(make_sample(train_imgs[i], int(train_labels[i])))
    for i in tv_idx[cfg.n_train:]:
        data.valid.append(make_sample(train_imgs[i], int(train_labels[i])))
    for i in test_idx:
        data.test.append(make_sample(test_imgs[i], int(test_labels[i])))
    return data


def _balanced_brackets(rng: np.random.Generator, n_pairs: int, max_depth: int) -> list[int]:
    """Random balanced string (0=open, 1=close) with nesting <= max_depth."""
    if n_pairs == 0:
        return []
    first = 1 if max_depth <= 1 else int(rng.integers(1, n_pairs + 1))
    inner = _balanced_brackets(rng, first - 1, max_depth - 1)
    rest = _balanced_brackets(rng, n_pairs - first, max_depth)
    return [0] + inner + [1] + rest


def _brackets_valid(tokens) -> bool:
    depth = 0
    for tok in tokens:
        depth += 1 if tok == 0 else -1
        if depth < 0:
            return False
    return depth == 0


def gen_bracket_matching(cfg: TaskConfig, seed: int) -> TaskData:
    """Classify bracket strings as balanced or not at the final step.

    Half of each split is valid by construction (depth-capped recursive
    build); the other half corrupts a valid string with one flip or swap and
    keeps redrawing until the result really is invalid. Classes: 0=invalid,
    1=valid.
    """
    t_len, max_depth = cfg.sequence_length, cfg.max_depth
    if t_len % 2 != 0:
        raise ConfigError("bracket_matching needs an even sequence_length")

    def make(rng):
        valid = bool(rng.integers(0, 2))
        tokens = np.array(_balanced_brackets(rng, t_len // 2, max_depth))
        if not valid:
            while True:
                corrupted = tokens.copy()
                if rng.integers(0, 2) == 0:
                    pos = int(rng.integers(0, t_len))
                    corrupted[pos] = 1 - corrupted[pos]
                else:
                    pos = int(rng.integers(0, t_len - 1))
                    corrupted[[pos, pos + 1]] = corrupted[[pos + 1, pos]]
                if not _brackets_valid(corrupted):
                    tokens = corrupted
                    break
        inputs = _one_hot(tokens, 2)
        targets = np.zeros((t_len, 2))
        targets[t_len - 1, 1 if valid else 0] = 1.0
        mask = np.zeros(t_len, dtype=bool)
        mask[t_len - 1] = True
        return TaskSample(inputs, targets, mask, "discrete")

    return _per_sample_task(cfg, seed, make)


_GENERATORS = {
    "discrete_postcasting": gen_discrete_postcasting,
    "continuous_postcasting": gen_continuous_postcasting,
    "sinus_forecasting": gen_sinus_forecasting,
    "chaotic_forecasting": gen_chaotic_forecasting,
    "discrete_pattern_completion": gen_discrete_pattern_completion,
    "continuous_pattern_completion": gen_continuous_pattern_completion,
    "simple_copy": gen_simple_copy,
    "selective_copy": gen_selective_copy,
    "adding_problem": gen_adding_problem,
    "sorting_problem": gen_sorting_problem,
    "sequential_mnist": gen_sequential_mnist,
    "bracket_matching": gen_bracket_matching,
}


def generate(cfg: TaskConfig, seed: int | None = None) -> TaskData:
    """Generate all splits for a task; seed defaults to cfg.seed."""
    return _GENERATORS[cfg.task](cfg, cfg.seed if seed is None else seed)


def default_config(task: str, **overrides) -> TaskConfig:
    if task not in DEFAULT_TASK_CONFIGS:
        raise ConfigError(f"unknown task {task!r}")
    return replace(DEFAULT_TASK_CONFIGS[task], **overrides)


def config_as_dict(cfg: TaskConfig) -> dict:
    return asdict(cfg)


def score(samples: list[TaskSample], predictions: list[np.ndarray]) -> float:
    """Error over evaluated positions only.

    Discrete: fraction of masked positions whose argmax disagrees with the
    target's. Continuous: mean squared error over masked positions and dims.
    """
    if len(samples) != len(predictions):
        raise ConfigError(
            f"{len(predictions)} predictions for {len(samples)} samples")
    wrong = 0.0
    total = 0
    sq_err = 0.0
    n_vals = 0
    kind = samples[0].kind if samples else "discrete"
    for sample, pred in zip(samples, predictions):
        pred = np.asarray(pred)
        if pred.shape != sample.targets.shape:
            raise ConfigError(
                f"prediction shape {pred.shape} vs targets {sample.targets.shape}")
        m = sample.eval_mask
        if sample.kind == "discrete":
            wrong += int((pred[m].argmax(axis=1) != sample.targets[m].argmax(axis=1)).sum())
            total += int(m.sum())
        else:
            diff = pred[m] - sample.targets[m]
            sq_err += float((diff * diff).sum())
            n_vals += diff.size
    if kind == "discrete":
        if total == 0:
            raise ConfigError("score: no evaluated positions")
        return wrong / total
    if n_vals == 0:
        raise ConfigError("score: no evaluated positions")
    return sq_err / n_vals
