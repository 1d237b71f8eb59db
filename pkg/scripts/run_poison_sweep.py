#!/usr/bin/env python3
"""Poison-amount sweep: full fair-robust training at 10%..40% label flipping."""

import argparse
import logging

import numpy as np

from fairrobust import benchmarks as B
from fairrobust.trainer import evaluate_model, train_fair_robust


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--grid", type=float, nargs="+",
                        default=[0.10, 0.20, 0.30, 0.40])
    args = parser.parse_args()
    logging.basicConfig(level=logging.ERROR)
    seeds = list(B.BENCHMARK_SEEDS)[: args.seeds]

    print(f"{'poison':>7} {'DI':>8} {'accuracy':>10}")
    for fraction in args.grid:
        accs, dis = [], []
        for seed in seeds:
            train, val, test = B.benchmark_datasets(seed, poison_fraction=fraction)
            model, _ = train_fair_robust(train, val, B.poisoned_config(seed))
            report = evaluate_model(model, test)
            accs.append(report.accuracy)
            dis.append(report.disparate_impact)
        print(f"{fraction:>6.0%} {np.mean(dis):>8.3f} {np.mean(accs):>10.3f}")


if __name__ == "__main__":
    main()
