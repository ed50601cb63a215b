"""Command-line interface: generate / train / eval / sweep / report.

Experiments are declared in YAML files (sweep grids are data, not shell
loops); flags carry only cross-cutting knobs. Exit codes: 0 success,
2 configuration error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import yaml

from .checkpoint import load_checkpoint
from .errors import ConfigError, DataError
from .stream.io import export_dataset
from .stream.tasks import TaskConfig, default_config, dims, generate
from .sweep import (aggregate_boa, aggregate_bwa, append_record, format_table,
                    load_records, run_cell, sweep, table_csv)
from .training import evaluate
from .zoo import parameter_count_report

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

_TASK_FIELDS = {f.name for f in dataclasses.fields(TaskConfig)}
_TRAIN_FIELDS = {"learning_rate", "weight_decay", "batch_size", "epochs",
                 "patience", "seed", "clip_norm"}
_SWEEP_FIELDS = {"tasks", "families", "sizes", "learning_rates", "seeds",
                 "epochs", "task_overrides"}
_MODEL_FIELDS = {"config", "max_len"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(
            f"{where}: unknown key(s) {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}")


def load_spec(path: str, require: tuple[str, ...]) -> dict:
    """Parse and validate a YAML experiment file, field by field."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        try:
            spec = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _check_keys(spec, {"task", "model", "train", "sweep"}, path)
    for section in require:
        if section not in spec:
            raise ConfigError(f"{path}: missing required section {section!r}")
    if "task" in spec:
        task = spec["task"]
        if not isinstance(task, dict) or "name" not in task:
            raise ConfigError(f"{path}: task section needs a 'name' key")
        _check_keys({k: v for k, v in task.items() if k != "name"},
                    _TASK_FIELDS - {"task"}, f"{path}: task")
    if "model" in spec:
        _check_keys(spec["model"], _MODEL_FIELDS, f"{path}: model")
        if "config" not in spec["model"]:
            raise ConfigError(f"{path}: model section needs a 'config' key "
                              "(a zoo name like est-1-1k)")
    if "train" in spec:
        _check_keys(spec["train"], _TRAIN_FIELDS, f"{path}: train")
    if "sweep" in spec:
        _check_keys(spec["sweep"], _SWEEP_FIELDS, f"{path}: sweep")
    return spec


def task_config_from(spec: dict, seed_flag: int | None) -> TaskConfig:
    section = dict(spec["task"])
    name = section.pop("name")
    if seed_flag is not None:
        section["seed"] = seed_flag
    try:
        return default_config(name, **section)
    except TypeError as exc:
        raise ConfigError(f"task section: {exc}") from None


# --- commands ------------------------------------------------------------------


def cmd_generate(args) -> int:
    spec = load_spec(args.config, require=("task",))
    cfg = task_config_from(spec, args.seed)
    data = generate(cfg)
    paths = export_dataset(data, args.out, seed=cfg.seed)
    in_dim, out_dim, kind = dims(cfg)
    print(f"task {cfg.task} ({kind}), input_dim={in_dim}, output_dim={out_dim}")
    for split, samples in data.splits.items():
        steps = samples[0].inputs.shape[0]
        print(f"  {split}: {len(samples)} samples x {steps} steps "
              f"-> {paths[split]}")
    return EXIT_OK


def cmd_train(args) -> int:
    spec = load_spec(args.config, require=("task", "model", "train"))
    cfg = task_config_from(spec, None)
    overrides = dict(spec["train"])
    if args.seed is not None:
        overrides["seed"] = args.seed
    seed = int(overrides.pop("seed", 0))
    lr = overrides.pop("learning_rate", None)
    if lr is None:
        raise ConfigError("train section needs learning_rate")
    epochs = int(overrides.pop("epochs", cfg.epochs))
    task_cfg = dataclasses.replace(
        cfg,
        batch_size=int(overrides.pop("batch_size", cfg.batch_size)),
        patience=int(overrides.pop("patience", cfg.patience)))

    ckpt = None
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        ckpt = os.path.join(args.out, "checkpoint.ckpt")
    record = run_cell(task_cfg, spec["model"]["config"], float(lr), seed,
                      epochs=epochs, train_overrides=overrides,
                      checkpoint_path=ckpt)
    print(f"{record.task} {record.config_id} lr={record.learning_rate} "
          f"seed={record.seed}: val={record.val_error:.6f} "
          f"test={record.test_error:.6f} ({record.epochs_run} epochs, "
          f"{record.wall_ms} ms, {record.status})")
    if record.status != "ok":
        return EXIT_RUNTIME
    if args.out:
        append_record(os.path.join(args.out, "results.txt"), record)
        print(f"saved checkpoint to {ckpt}")
    return EXIT_OK


def cmd_eval(args) -> int:
    spec = load_spec(args.config, require=("task",))
    cfg = task_config_from(spec, args.seed)
    model = load_checkpoint(args.checkpoint)
    data = generate(cfg)
    in_dim, out_dim, _ = dims(cfg)
    if (model.config.input_dim, model.config.output_dim) != (in_dim, out_dim):
        raise ConfigError(
            f"checkpoint dims ({model.config.input_dim}, "
            f"{model.config.output_dim}) do not match task dims "
            f"({in_dim}, {out_dim})")
    err = evaluate(model, data.test)
    print(f"{cfg.task}: test_error={err:.6f} over {len(data.test)} samples")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_spec(args.config, require=("sweep",))
    section = spec["sweep"]
    for key in ("tasks", "families", "sizes", "learning_rates", "seeds"):
        if key not in section:
            raise ConfigError(f"sweep section needs {key!r}")
    os.makedirs(args.out, exist_ok=True)
    store = os.path.join(args.out, "results.txt")
    if os.path.exists(store) and not args.resume:
        raise ConfigError(
            f"results store {store} already exists; pass --resume to continue it")
    records = sweep(
        tasks=section["tasks"], families=section["families"],
        sizes=[str(s) for s in section["sizes"]],
        learning_rates=section["learning_rates"], seeds=section["seeds"],
        store_path=store, workers=args.workers,
        task_overrides=section.get("task_overrides"),
        epochs=section.get("epochs"), log=print,
    )
    ok = sum(r.status == "ok" for r in records)
    print(f"store {store}: {len(records)} records ({ok} ok)")
    return EXIT_OK


def cmd_report(args) -> int:
    records = load_records(args.store)
    if args.params:
        print("parameter counts vs nominal buckets (input_dim=output_dim=4):")
        for row in parameter_count_report():
            band = "in band" if row["within_band"] else "OUT OF BAND (documented)"
            print(f"  {row['config']:22s} {row['count']:>9} "
                  f"({row['ratio']:.2f}x nominal) {band}")
    if not records:
        print("results store is empty")
        return EXIT_OK
    bwa, boa = aggregate_bwa(records), aggregate_boa(records)
    print("\nBest when averaged over seeds (error / size):")
    print(format_table(bwa))
    print("\nBest over all runs (error / size):")
    print(format_table(boa))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name, agg in (("bwa", bwa), ("boa", boa)):
            path = os.path.join(args.out, f"{name}.csv")
            with open(path, "w") as f:
                f.write(table_csv(agg))
            print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="estlab",
        description="Echo state transformer lab: data generation, training, "
                    "sweeps, and reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write dataset files for one task")
    p.add_argument("--config", required=True, help="YAML file with a task section")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("train", help="train one model on one task")
    p.add_argument("--config", required=True,
                   help="YAML file with task, model, and train sections")
    p.add_argument("--out", default=None, help="directory for the result record")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a task's test split")
    p.add_argument("--config", required=True, help="YAML file with a task section")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="run a grid of training runs")
    p.add_argument("--config", required=True, help="YAML file with a sweep section")
    p.add_argument("--out", required=True, help="directory for the results store")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true",
                   help="continue an existing results store")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("report", help="aggregate a results store into tables")
    p.add_argument("--store", required=True, help="path to results.txt")
    p.add_argument("--out", default=None, help="directory for CSV output")
    p.add_argument("--params", action="store_true",
                   help="include the parameter-count report")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # runtime failure: anything else
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
