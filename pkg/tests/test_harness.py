import csv
import json
import statistics

import numpy as np
import pytest

from fairrobust.dataset import SyntheticSpec
from fairrobust.harness import (
    ExperimentSpec,
    emit_tradeoff_curve,
    error_range,
    run_experiment,
)
from fairrobust.trainer import TrainConfig


def tiny_spec(**kwargs):
    base = dict(
        seeds=[0, 1],
        base=TrainConfig(lambda1=0.2, lambda2=0.1, epochs=15, pretrain_epochs=5),
        synthetic=SyntheticSpec(n=200),
        sweep_axis="lambda1",
        grid=[0.0, 0.4],
    )
    base.update(kwargs)
    return ExperimentSpec(**base)


def test_error_range_basic():
    er = error_range([1.0, 2.0, 3.0])
    assert er.mean == pytest.approx(2.0)
    assert er.std == pytest.approx(1.0)
    assert er.formatted == "2.000 ± 0.500"


def test_error_range_constant():
    er = error_range([0.7, 0.7, 0.7])
    assert er.formatted.endswith("± 0.000")


def test_error_range_requires_two_values():
    with pytest.raises(ValueError):
        error_range([1.0])


def test_error_range_matches_statistics_module():
    values = [0.81, 0.79, 0.803, 0.788, 0.82, 0.795, 0.801, 0.809, 0.79, 0.8]
    er = error_range(values)
    assert er.mean == pytest.approx(statistics.mean(values))
    assert er.std == pytest.approx(statistics.stdev(values))


def test_run_experiment_row_and_aggregate_counts(tmp_path):
    rows, aggregates = run_experiment(tiny_spec(), out_dir=tmp_path)
    assert len(rows) == 4  # 2 grid points x 2 seeds
    assert len(aggregates) == 2
    assert all(r["status"] == "ok" for r in rows)
    with open(tmp_path / "runs.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header[:9] == ["lambda1", "lambda2", "seed", "acc", "di", "eo0", "eo1",
                          "eopp", "runtime_s"]
    assert (tmp_path / "tradeoff.csv").exists()


def test_run_experiment_byte_reproducible(tmp_path):
    spec = tiny_spec()
    rows_a, _ = run_experiment(spec, out_dir=tmp_path / "a")
    rows_b, _ = run_experiment(spec, out_dir=tmp_path / "b")
    skip = {"runtime_s"}
    for ra, rb in zip(rows_a, rows_b):
        assert {k: v for k, v in ra.items() if k not in skip} == \
               {k: v for k, v in rb.items() if k not in skip}
    a = (tmp_path / "a" / "tradeoff.csv").read_text()
    b = (tmp_path / "b" / "tradeoff.csv").read_text()
    assert a == b


def test_aggregates_are_functions_of_rows(tmp_path):
    rows, aggregates = run_experiment(tiny_spec(), out_dir=tmp_path)
    for agg in aggregates:
        members = [r for r in rows
                   if r["grid_value"] == agg["grid_value"] and r["status"] == "ok"]
        assert agg["acc_mean"] == pytest.approx(np.mean([r["acc"] for r in members]))


def test_failed_runs_recorded_not_raised():
    # group 1 cannot absorb a 90% flip budget -> per-row failure
    spec = tiny_spec(sweep_axis="poison_fraction", grid=[0.0, 0.9])
    rows, aggregates = run_experiment(spec)
    ok = [r for r in rows if r["status"] == "ok"]
    failed = [r for r in rows if r["status"] == "failed"]
    assert {r["grid_value"] for r in ok} == {0.0}
    assert {r["grid_value"] for r in failed} == {0.9}
    assert all("PoisonBudgetError" in r["error"] for r in failed)
    agg = {a["grid_value"]: a for a in aggregates}
    assert agg[0.9]["n_ok"] == 0 and agg[0.9]["acc_mean"] == ""


def test_emit_tradeoff_curve_single_point():
    rows = [{"lambda1": 0.3, "acc": 0.8, "di": 0.6, "status": "ok"}]
    assert emit_tradeoff_curve(rows) == [(0.3, 0.8, 0.6)]


def test_emit_tradeoff_curve_sorted():
    rows = [
        {"lambda1": 0.6, "acc": 0.7, "di": 0.9, "status": "ok"},
        {"lambda1": 0.1, "acc": 0.9, "di": 0.4, "status": "ok"},
        {"lambda1": 0.6, "acc": 0.8, "di": 0.8, "status": "ok"},
    ]
    curve = emit_tradeoff_curve(rows)
    assert [lam for lam, _, _ in curve] == [0.1, 0.6]
    assert curve[1][1] == pytest.approx(0.75)


def test_spec_json_round_trip():
    spec = tiny_spec()
    payload = json.loads(json.dumps(spec.to_json_dict()))
    back = ExperimentSpec.from_json_dict(payload)
    assert back.base == spec.base
    assert back.grid == spec.grid
    assert back.synthetic.n == spec.synthetic.n


def test_spec_requires_one_data_source():
    with pytest.raises(ValueError):
        ExperimentSpec(seeds=[0], synthetic=None, train_csv=None)
