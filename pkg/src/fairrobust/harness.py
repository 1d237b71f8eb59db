"""Experiment harness: grid sweeps over seeds with CSV reporting.

A sweep runs the full pipeline (generate or load, split, optionally poison the
training part, train, evaluate on the clean test part) for every grid point and
seed, writes one CSV row per run plus one aggregate row per grid point, and is
byte-reproducible for a fixed spec.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace, asdict

import numpy as np

from .dataset import Dataset, SyntheticSpec, generate_synthetic, load_csv, split
from .poison import PoisonSpec, flip_labels
from .trainer import TrainConfig, evaluate_model, train_fair_robust

RUN_FIELDS = ["lambda1", "lambda2", "seed", "acc", "di", "eo0", "eo1", "eopp", "runtime_s"]
EXTRA_FIELDS = ["sweep_axis", "grid_value", "config_hash", "status", "error"]

SWEEP_AXES = ("lambda1", "poison_fraction", "val_fraction", "none")


@dataclass
class ExperimentSpec:
    """One sweep: a data source, a base config, a grid axis, and seeds."""

    seeds: list[int]
    base: TrainConfig = field(default_factory=TrainConfig)
    sweep_axis: str = "none"
    grid: list[float] = field(default_factory=lambda: [0.0])
    synthetic: SyntheticSpec | None = None
    train_csv: str | None = None
    val_csv: str | None = None
    test_csv: str | None = None
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    poison_fraction: float = 0.0
    poison_group: int = 1
    poison_strategy: str = "degradation-surrogate"

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}")
        has_synth = self.synthetic is not None
        has_csv = self.train_csv is not None
        if has_synth == has_csv:
            raise ValueError("exactly one of synthetic spec or train_csv is required")
        if has_csv and self.test_csv is None:
            raise ValueError("test_csv is required with train_csv")

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["base"] = self.base.to_json_dict()
        out["synthetic"] = asdict(self.synthetic) if self.synthetic else None
        return out

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ExperimentSpec":
        payload = dict(payload)
        payload["base"] = TrainConfig.from_json_dict(payload.get("base", {}))
        if payload.get("synthetic") is not None:
            synth = dict(payload["synthetic"])
            for key in ("mean_neg", "cov_neg", "mean_pos", "cov_pos"):
                if key in synth and isinstance(synth[key], list):
                    synth[key] = tuple(
                        tuple(v) if isinstance(v, list) else v for v in synth[key]
                    )
            payload["synthetic"] = SyntheticSpec(**synth)
        if "split_fractions" in payload:
            payload["split_fractions"] = tuple(payload["split_fractions"])
        return cls(**payload)


def config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _seed_stream(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def _resolve_run(spec: ExperimentSpec, grid_value: float, seed: int):
    """Resolved (fractions, poison_fraction, config) for one grid point and seed."""
    fractions = spec.split_fractions
    poison_fraction = spec.poison_fraction
    cfg = replace(spec.base, seed=_seed_stream(seed, 3))
    if spec.sweep_axis == "lambda1":
        cfg = replace(cfg, lambda1=float(grid_value))
    elif spec.sweep_axis == "poison_fraction":
        poison_fraction = float(grid_value)
    elif spec.sweep_axis == "val_fraction":
        f_test = fractions[2]
        fractions = (1.0 - float(grid_value) - f_test, float(grid_value), f_test)
    return fractions, poison_fraction, cfg


def _load_datasets(spec: ExperimentSpec, fractions, seed: int):
    if spec.synthetic is not None:
        ds = generate_synthetic(spec.synthetic, _seed_stream(seed, 0))
        return split(ds, fractions, _seed_stream(seed, 1))
    train = load_csv(spec.train_csv)
    test = load_csv(spec.test_csv)
    if spec.val_csv is not None:
        return train, load_csv(spec.val_csv), test
    f_val = fractions[1]
    train, val, _ = split(train, (1.0 - f_val, f_val, 0.0), _seed_stream(seed, 1))
    return train, val, test


def run_single(spec: ExperimentSpec, grid_value: float, seed: int) -> dict:
    """One pipeline run; failures are recorded in the row, not raised."""
    fractions, poison_fraction, cfg = _resolve_run(spec, grid_value, seed)
    resolved = {
        "config": cfg.to_json_dict(),
        "fractions": fractions,
        "poison_fraction": poison_fraction,
        "grid_value": grid_value,
        "seed": seed,
    }
    row = {
        "lambda1": cfg.lambda1,
        "lambda2": cfg.lambda2,
        "seed": seed,
        "acc": "",
        "di": "",
        "eo0": "",
        "eo1": "",
        "eopp": "",
        "runtime_s": "",
        "sweep_axis": spec.sweep_axis,
        "grid_value": grid_value,
        "config_hash": config_hash(resolved),
        "status": "ok",
        "error": "",
    }
    start = time.perf_counter()
    try:
        train, val, test = _load_datasets(spec, fractions, seed)
        if poison_fraction > 0:
            pspec = PoisonSpec(
                target_group=spec.poison_group,
                fraction=poison_fraction,
                strategy=spec.poison_strategy,
                seed=_seed_stream(seed, 2),
            )
            train, _ = flip_labels(train, pspec)
        model, _ = train_fair_robust(train, val, cfg)
        report = evaluate_model(model, test)
        row.update(
            acc=report.accuracy,
            di=report.disparate_impact,
            eo0=report.equalized_odds.get(0, ""),
            eo1=report.equalized_odds.get(1, ""),
            eopp=report.equal_opportunity if report.equal_opportunity is not None else "",
        )
    except Exception as exc:  # recorded per-row; the sweep continues
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["runtime_s"] = round(time.perf_counter() - start, 3)
    return row


def _run_task(args):
    spec_payload, grid_value, seed = args
    return run_single(ExperimentSpec.from_json_dict(spec_payload), grid_value, seed)


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1
                   ) -> tuple[list[dict], list[dict]]:
    """All grid points x seeds; returns (run rows, aggregate rows) sorted.

    When ``out_dir`` is given, writes runs.csv, aggregates.csv, and (for a
    lambda1 sweep) tradeoff.csv there.
    """
    tasks = [(grid_value, seed) for grid_value in spec.grid for seed in spec.seeds]
    if jobs > 1:
        payload = spec.to_json_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_task, [(payload, g, s) for g, s in tasks]))
    else:
        rows = [run_single(spec, g, s) for g, s in tasks]
    rows.sort(key=lambda r: (r["grid_value"], r["seed"]))

    aggregates = []
    for grid_value in spec.grid:
        ok = [r for r in rows if r["grid_value"] == grid_value and r["status"] == "ok"]
        agg = {"sweep_axis": spec.sweep_axis, "grid_value": grid_value,
               "n_ok": len(ok), "n_failed": len(spec.seeds) - len(ok)}
        for key in ("acc", "di", "eo0", "eo1", "eopp"):
            values = [float(r[key]) for r in ok if r[key] != ""]
            agg[f"{key}_mean"] = float(np.mean(values)) if values else ""
            agg[f"{key}_std"] = (
                float(np.std(values, ddof=1)) if len(values) > 1 else ""
            )
        aggregates.append(agg)

    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, "runs.csv"), RUN_FIELDS + EXTRA_FIELDS, rows)
        if aggregates:
            _write_csv(os.path.join(out_dir, "aggregates.csv"),
                       list(aggregates[0].keys()), aggregates)
        if spec.sweep_axis == "lambda1":
            emit_tradeoff_curve(rows, path=os.path.join(out_dir, "tradeoff.csv"))
    return rows, aggregates


def _write_csv(path, fieldnames, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


@dataclass
class ErrorRange:
    mean: float
    std: float
    formatted: str


def error_range(values) -> ErrorRange:
    """Mean and sample standard deviation, formatted as ``m +/- s/2``."""
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ValueError("error_range needs at least 2 values")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1))
    return ErrorRange(mean, std, f"{mean:.3f} ± {std / 2:.3f}")


def emit_tradeoff_curve(rows, path=None) -> list[tuple[float, float, float]]:
    """(lambda1, mean accuracy, mean DI) per lambda1 value, sorted by lambda1."""
    buckets: dict[float, list[tuple[float, float]]] = {}
    for r in rows:
        if r.get("status", "ok") != "ok" or r.get("acc", "") == "":
            continue
        buckets.setdefault(float(r["lambda1"]), []).append(
            (float(r["acc"]), float(r["di"]))
        )
    curve = [
        (lam, float(np.mean([a for a, _ in pts])), float(np.mean([d for _, d in pts])))
        for lam, pts in sorted(buckets.items())
    ]
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda1", "accuracy", "disparate_impact"])
            writer.writerows(curve)
    return curve
