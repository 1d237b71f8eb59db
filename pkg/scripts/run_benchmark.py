#!/usr/bin/env python3
"""Standard synthetic benchmark: logistic baseline vs adversarial fair-robust training.

Runs clean and 10%-poisoned settings over a seed family and prints mean +/- s/2
error ranges for accuracy and disparate impact on the clean test split.
"""

import argparse
import logging

from fairrobust import benchmarks as B
from fairrobust.harness import error_range
from fairrobust.trainer import evaluate_model, train_fair_robust, train_logistic_baseline


def collect(seeds, poison_fraction, trainer):
    accs, dis = [], []
    for seed in seeds:
        train, val, test = B.benchmark_datasets(seed, poison_fraction=poison_fraction)
        model = trainer(train, val, seed)
        report = evaluate_model(model, test)
        accs.append(report.accuracy)
        dis.append(report.disparate_impact)
    return accs, dis


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()
    logging.basicConfig(level=logging.ERROR)
    seeds = list(B.BENCHMARK_SEEDS)[: args.seeds]

    rows = [
        ("LR clean", 0.0,
         lambda tr, va, s: train_logistic_baseline(tr, B.baseline_config(s))),
        ("LR poisoned 10%", 0.1,
         lambda tr, va, s: train_logistic_baseline(tr, B.baseline_config(s))),
        ("fair-robust clean", 0.0,
         lambda tr, va, s: train_fair_robust(tr, va, B.clean_config(s))[0]),
        ("fair-robust poisoned 10%", 0.1,
         lambda tr, va, s: train_fair_robust(tr, va, B.poisoned_config(s))[0]),
    ]
    print(f"{'setting':<28} {'DI':>16} {'accuracy':>16}")
    for name, poison, trainer in rows:
        accs, dis = collect(seeds, poison, trainer)
        print(f"{name:<28} {error_range(dis).formatted:>16} {error_range(accs).formatted:>16}")


if __name__ == "__main__":
    main()
