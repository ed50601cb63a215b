#!/usr/bin/env python3
"""Measure per-step inference cost as the sequence grows.

The EST keeps all recurrent state in a fixed set of memory units, so its
per-step cost is flat in t; a causal transformer reprocesses the whole
prefix each step, so its per-step cost grows with t. This script prints
both curves side by side.

Usage: python scripts/complexity_probe.py [--max-steps 1000]
"""

import argparse
import time

import numpy as np

from estlab.baselines import build_transformer, transformer_forward
from estlab.est import forward_step
from estlab.zoo import build_model, make_config


def est_step_times(checkpoints, trials=5):
    model = build_model(make_config("est-1-1k", 3, 3))
    tokens = np.random.default_rng(0).normal(size=(max(checkpoints) + 5, 3))
    times = {t: [] for t in checkpoints}
    for _ in range(trials):
        model.reset_state()
        for t in range(len(tokens)):
            t0 = time.perf_counter()
            forward_step(model, tokens[t:t + 1])
            dt = time.perf_counter() - t0
            if t in times:
                times[t].append(dt)
    return {t: float(np.median(v)) for t, v in times.items()}


def transformer_step_times(checkpoints, trials=3):
    model = build_model(make_config("transformer-1-1k", 3, 3,
                                    max_len=max(checkpoints) + 1))
    tokens = np.random.default_rng(0).normal(size=(max(checkpoints), 3))
    times = {}
    for t in checkpoints:
        samples = []
        for _ in range(trials):
            t0 = time.perf_counter()
            transformer_forward(model, tokens[:t])
            samples.append(time.perf_counter() - t0)
        times[t] = float(np.median(samples))
    return times


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-steps", type=int, default=1000)
    args = parser.parse_args()

    checkpoints = sorted({10, 30, 100, 300, args.max_steps})
    est = est_step_times(checkpoints)
    tr = transformer_step_times(checkpoints)
    print(f"{'t':>6}  {'EST ms/step':>12}  {'transformer ms/step':>20}")
    for t in checkpoints:
        print(f"{t:>6}  {est[t] * 1e3:>12.3f}  {tr[t] * 1e3:>20.3f}")
    print(f"\nEST ratio t={args.max_steps} vs t=10: "
          f"{est[args.max_steps] / est[10]:.2f}x")
    print(f"transformer ratio: {tr[args.max_steps] / tr[10]:.1f}x")


if __name__ == "__main__":
    main()
