#!/usr/bin/env python3
"""Desk-scale training reproduction, standalone.

Runs the three headline checks on CPU and prints a comparison against the
full-scale reference numbers:
  a. est-1-1k on continuous postcasting (reference BWA 0.005 at 1k)
  b. est-1-10k on discrete postcasting (reference 0.000 at 10k)
  c. EST vs GRU vs LSTM on discrete pattern completion under an equal
     3-learning-rate x 2-seed mini-sweep (reference 0.166 / 0.467 / 0.459)

Results append to --out (resumable); rerunning skips finished cells.
Usage: python scripts/desk_scale_checks.py --out runs/desk [--workers 2]
"""

import argparse
import os

import numpy as np

from estlab.stream.tasks import default_config
from estlab.sweep import load_records, run_cell, append_record, sweep


def cached(store, task_cfg, name, lr, seed, epochs=None):
    from estlab.zoo import family_of, size_of
    key = (task_cfg.task, family_of(name), size_of(name), name, lr, seed)
    for r in load_records(store):
        if r.key() == key:
            return r
    rec = run_cell(task_cfg, name, lr, seed, epochs=epochs)
    append_record(store, rec)
    print(f"  {rec.config_id} lr={lr} seed={seed}: test={rec.test_error:.4f} "
          f"({rec.epochs_run} epochs)")
    return rec


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/desk")
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)

    print("a. continuous postcasting, est-1-1k, lr=0.003, seeds 0-2")
    store = os.path.join(args.out, "continuous_postcasting.txt")
    errs = [cached(store, default_config("continuous_postcasting"),
                   "est-1-1k", 0.003, s).test_error for s in (0, 1, 2)]
    print(f"   mean test error {np.mean(errs):.4f} (reference 0.005)\n")

    print("b. discrete postcasting, est-1-10k, lr=0.003, seed 0")
    store = os.path.join(args.out, "discrete_postcasting.txt")
    rec = cached(store, default_config("discrete_postcasting"), "est-1-10k",
                 0.003, 0)
    print(f"   test error {rec.test_error:.4f} (reference 0.000)\n")

    print("c. discrete pattern completion mini-sweep (est vs gru vs lstm)")
    store = os.path.join(args.out, "pattern_completion.txt")
    keep = {"est-1-1k", "est-1-10k", "gru-1k", "gru-10k", "lstm-1k", "lstm-10k"}
    records = sweep(
        tasks=["discrete_pattern_completion"], families=["est", "gru", "lstm"],
        sizes=["1k", "10k"], learning_rates=[0.01, 0.003, 0.001], seeds=[0, 1],
        store_path=store, workers=args.workers, epochs=150, config_filter=keep,
        log=lambda m: print(f"   {m}"))
    best = {}
    for r in records:
        if r.status == "ok":
            best[r.family] = min(best.get(r.family, 1.0), r.test_error)
    print(f"   best runs: est={best.get('est'):.4f} gru={best.get('gru'):.4f} "
          f"lstm={best.get('lstm'):.4f} (reference 0.166 / 0.467 / 0.459)")


if __name__ == "__main__":
    main()
