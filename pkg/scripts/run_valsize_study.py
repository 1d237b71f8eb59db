#!/usr/bin/env python3
"""Validation-size study on poisoned data.

Shrinks the clean validation split from 10% to 0.1% and compares a strong
robustness knob (lambda2 = 0.4) against a weak one (lambda2 = 0.1). With a
tiny validation set the strong knob amplifies the adverse effect; turning it
down recovers accuracy.
"""

import argparse
import logging
from dataclasses import replace

import numpy as np

from fairrobust import benchmarks as B
from fairrobust.trainer import evaluate_model, train_fair_robust


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--val-fractions", type=float, nargs="+",
                        default=[0.10, 0.05, 0.001])
    parser.add_argument("--lambda2", type=float, nargs="+", default=[0.4, 0.1])
    args = parser.parse_args()
    logging.basicConfig(level=logging.ERROR)
    seeds = list(B.BENCHMARK_SEEDS)[: args.seeds]

    print(f"{'val size':>9} {'lambda2':>8} {'DI':>8} {'accuracy':>10}")
    for val_fraction in args.val_fractions:
        for lam2 in args.lambda2:
            accs, dis = [], []
            for seed in seeds:
                train, val, test = B.benchmark_datasets(
                    seed, poison_fraction=0.1, val_fraction=val_fraction)
                cfg = replace(B.poisoned_config(seed), lambda2=lam2)
                model, _ = train_fair_robust(train, val, cfg)
                report = evaluate_model(model, test)
                accs.append(report.accuracy)
                dis.append(report.disparate_impact)
            print(f"{val_fraction:>8.1%} {lam2:>8.1f} {np.mean(dis):>8.3f} "
                  f"{np.mean(accs):>10.3f}")


if __name__ == "__main__":
    main()
