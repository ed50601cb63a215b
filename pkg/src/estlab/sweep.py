"""Grid execution over (task, family, size, config, learning rate, seed),
with an append-only crash-tolerant results store, resumability, and the two
aggregations used for reporting: best cell when seed-averaged (BWA) and best
single run over everything (BOA).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor, as_completed

from .errors import ConfigError
from .stream.tasks import TaskConfig, default_config, dims, generate
from .training import RunRecord, TrainConfig, train
from .zoo import build_model, config_names, make_config

STORE_FIELDS = ("task", "family", "size", "config", "lr", "seed", "val_error",
                "test_error", "epochs", "wall_ms", "status")


# --- results store -----------------------------------------------------------


def record_to_line(r: RunRecord) -> str:
    parts = [
        f"task={r.task}", f"family={r.family}", f"size={r.size}",
        f"config={r.config_id}", f"lr={r.learning_rate!r}", f"seed={r.seed}",
        f"val_error={r.val_error!r}", f"test_error={r.test_error!r}",
        f"epochs={r.epochs_run}", f"wall_ms={r.wall_ms}",
        f"status={r.status.replace(' ', '_')}",
    ]
    return " ".join(parts)


def parse_line(line: str) -> RunRecord | None:
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    kv = {}
    for token in line.split(" "):
        if "=" not in token:
            return None
        k, v = token.split("=", 1)
        kv[k] = v
    try:
        return RunRecord(
            task=kv["task"], family=kv["family"], size=kv["size"],
            config_id=kv["config"], learning_rate=float(kv["lr"]),
            seed=int(kv["seed"]), val_error=float(kv["val_error"]),
            test_error=float(kv["test_error"]), epochs_run=int(kv["epochs"]),
            wall_ms=int(kv["wall_ms"]), status=kv["status"],
        )
    except (KeyError, ValueError):
        return None


def load_records(path: str) -> list[RunRecord]:
    """Read the store; torn or malformed lines (e.g. a partial final line
    after a crash) are dropped."""
    if not os.path.exists(path):
        return []
    with open(path) as f:
        lines = f.read().split("\n")
    return [rec for rec in map(parse_line, lines) if rec is not None]


def append_record(path: str, record: RunRecord) -> None:
    with open(path, "a") as f:
        f.write(record_to_line(record) + "\n")
        f.flush()
        os.fsync(f.fileno())


# --- single cell -------------------------------------------------------------


def run_cell(task_cfg: TaskConfig, config_name: str, lr: float, seed: int,
             epochs: int | None = None, train_overrides: dict | None = None,
             checkpoint_path: str | None = None) -> RunRecord:
    """Train one grid cell from scratch (safe to call in a worker process).

    The dataset comes from the task config's own seed, shared by every cell
    of the task; the run seed varies model init and shuffling only. If
    checkpoint_path is given, the best-validation model is saved there.
    """
    data = generate(task_cfg)
    in_dim, out_dim, _ = dims(task_cfg)
    from .zoo import family_of, size_of
    family = family_of(config_name)
    overrides = {}
    if family == "transformer":
        max_t = max(len(s.eval_mask) for split in data.splits.values() for s in split)
        overrides["max_len"] = max_t
    model_cfg = make_config(config_name, in_dim, out_dim, seed=seed, **overrides)
    model = build_model(model_cfg)
    fields = dict(
        learning_rate=lr, batch_size=task_cfg.batch_size,
        epochs=epochs or task_cfg.epochs, patience=task_cfg.patience, seed=seed,
    )
    fields.update(train_overrides or {})
    record = train(model, data, TrainConfig(**fields), task=task_cfg.task,
                   config_id=config_name, size=size_of(config_name))
    if checkpoint_path:
        from .checkpoint import save_checkpoint
        save_checkpoint(model, checkpoint_path)
    return record


# --- sweep --------------------------------------------------------------------


def plan_cells(tasks, families, sizes, learning_rates, seeds,
               task_overrides=None, config_filter=None):
    """Cartesian product of the grid, one tuple per run.

    config_filter, when given, keeps only the named zoo variants (the grid
    otherwise includes every variant of each family and size).
    """
    if not (tasks and families and sizes and learning_rates and seeds):
        raise ConfigError("sweep grids must all be nonempty")
    cells = []
    for task in tasks:
        task_cfg = default_config(task, **(task_overrides or {}).get(task, {}))
        for family in families:
            for size in sizes:
                for name in config_names(family, size):
                    if config_filter and name not in config_filter:
                        continue
                    for lr in learning_rates:
                        for seed in seeds:
                            cells.append((task_cfg, name, float(lr), int(seed)))
    return cells


def _cell_key(task_cfg: TaskConfig, name: str, lr: float, seed: int) -> tuple:
    from .zoo import family_of, size_of
    return (task_cfg.task, family_of(name), size_of(name), name, lr, seed)


def _run_cell_args(args):
    task_cfg_fields, name, lr, seed, epochs = args
    return run_cell(TaskConfig(**task_cfg_fields), name, lr, seed, epochs=epochs)


def sweep(tasks, families, sizes, learning_rates, seeds, store_path,
          workers: int = 1, task_overrides=None, epochs: int | None = None,
          config_filter=None, log=None) -> list[RunRecord]:
    """Run the grid, skipping cells already in the store (resumable).

    Failures are recorded and the sweep continues. Independent runs may
    execute on a worker pool; the store has a single writer (this process).
    """
    import dataclasses

    cells = plan_cells(tasks, families, sizes, learning_rates, seeds,
                       task_overrides, config_filter)
    existing = load_records(store_path)
    done = {r.key() for r in existing}
    pending = [c for c in cells
               if _cell_key(*c) not in done]
    if log:
        log(f"{len(cells)} cells, {len(cells) - len(pending)} already done, "
            f"{len(pending)} to run")

    def note(rec):
        append_record(store_path, rec)
        if log:
            log(f"{rec.task} {rec.config_id} lr={rec.learning_rate} "
                f"seed={rec.seed}: test={rec.test_error:.4f} "
                f"({rec.epochs_run} epochs, {rec.wall_ms} ms, {rec.status})")

    new_records = []
    if workers <= 1:
        for task_cfg, name, lr, seed in pending:
            rec = _safe_run(task_cfg, name, lr, seed, epochs)
            note(rec)
            new_records.append(rec)
    else:
        payload = [(dataclasses.asdict(tc), name, lr, seed, epochs)
                   for tc, name, lr, seed in pending]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_cell_args, args): args for args in payload}
            for fut in as_completed(futures):
                args = futures[fut]
                try:
                    rec = fut.result()
                except Exception as exc:  # worker crashed: record and continue
                    tc, name, lr, seed = (TaskConfig(**args[0]), args[1],
                                          args[2], args[3])
                    rec = _failure_record(tc, name, lr, seed, exc)
                note(rec)
                new_records.append(rec)
    return existing + new_records


def _safe_run(task_cfg, name, lr, seed, epochs) -> RunRecord:
    try:
        return run_cell(task_cfg, name, lr, seed, epochs=epochs)
    except Exception as exc:
        return _failure_record(task_cfg, name, lr, seed, exc)


def _failure_record(task_cfg, name, lr, seed, exc) -> RunRecord:
    from .zoo import family_of, size_of
    return RunRecord(
        task=task_cfg.task, family=family_of(name), size=size_of(name),
        config_id=name, learning_rate=lr, seed=seed,
        val_error=float("nan"), test_error=float("nan"), epochs_run=0,
        wall_ms=0, status=f"failed:_{type(exc).__name__}",
    )


# --- aggregation -----------------------------------------------------------------


def _ok(records):
    return [r for r in records if r.status == "ok"]


def aggregate_bwa(records) -> dict[tuple, dict]:
    """Per (task, family, size): the (config, lr) cell whose seed-averaged
    test error is lowest, among cells that have every seed of the group."""
    groups: dict[tuple, list[RunRecord]] = {}
    for r in _ok(records):
        groups.setdefault((r.task, r.family, r.size), []).append(r)
    out = {}
    for key, rs in groups.items():
        all_seeds = sorted({r.seed for r in rs})
        cells: dict[tuple, dict[int, float]] = {}
        for r in rs:
            cells.setdefault((r.config_id, r.learning_rate), {})[r.seed] = r.test_error
        best = None
        for (config_id, lr), by_seed in cells.items():
            if sorted(by_seed) != all_seeds:
                continue
            mean = sum(by_seed.values()) / len(by_seed)
            if best is None or mean < best["error"]:
                best = {"error": mean, "config": config_id, "lr": lr,
                        "n_seeds": len(by_seed)}
        if best is not None:
            out[key] = best
    return out


def aggregate_boa(records) -> dict[tuple, dict]:
    """Per (task, family, size): the single lowest test error over all runs."""
    out = {}
    for r in _ok(records):
        key = (r.task, r.family, r.size)
        if key not in out or r.test_error < out[key]["error"]:
            out[key] = {"error": r.test_error, "config": r.config_id,
                        "lr": r.learning_rate, "seed": r.seed}
    return out


def best_by_task_family(agg: dict[tuple, dict]) -> dict[tuple, dict]:
    """Collapse sizes: per (task, family), the size with the lowest error."""
    out = {}
    for (task, family, size), cell in agg.items():
        key = (task, family)
        if key not in out or cell["error"] < out[key]["error"]:
            out[key] = dict(cell, size=size)
    return out


def format_table(agg: dict[tuple, dict], families=None) -> str:
    """Text table, one task per row, 'error / size' cells."""
    collapsed = best_by_task_family(agg)
    tasks = sorted({t for t, _ in collapsed})
    families = families or sorted({f for _, f in collapsed})
    width = max([len(t) for t in tasks] + [4]) + 2
    header = "Task".ljust(width) + "".join(f.ljust(16) for f in families)
    lines = [header, "-" * len(header)]
    for task in tasks:
        row = task.ljust(width)
        for family in families:
            cell = collapsed.get((task, family))
            row += (f"{cell['error']:.3f} / {cell['size']}".ljust(16)
                    if cell else "-".ljust(16))
        lines.append(row)
    return "\n".join(lines)


def table_csv(agg: dict[tuple, dict]) -> str:
    lines = ["task,family,size,error,config,lr"]
    for (task, family, size), cell in sorted(agg.items()):
        lines.append(f"{task},{family},{size},{cell['error']!r},"
                     f"{cell['config']},{cell['lr']!r}")
    return "\n".join(lines) + "\n"
