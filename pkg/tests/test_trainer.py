import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairrobust.dataset import Dataset, SyntheticSpec, generate_synthetic, split
from fairrobust.metrics import disparate_impact
from fairrobust.nnet import get_flat_params
from fairrobust.trainer import (
    ConfigError,
    TrainConfig,
    compute_example_weights,
    decide,
    evaluate_model,
    model_inputs,
    predict,
    train_fair_robust,
    train_logistic_baseline,
)


def small_config(**kwargs):
    base = dict(epochs=60, pretrain_epochs=10, seed=0)
    base.update(kwargs)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def datasets():
    ds = generate_synthetic(SyntheticSpec(n=400), seed=1)
    return split(ds, (0.8, 0.1, 0.1), seed=2)


def test_weights_full_trust_when_score_is_one():
    w, r = compute_example_weights(np.ones(5), l_c=0.4, l_d=0.3, c_threshold=1.0)
    assert np.allclose(w, 1.0)


def test_weights_collapse_to_gate_when_score_is_zero():
    w, r = compute_example_weights(np.zeros(5), l_c=0.4, l_d=0.3, c_threshold=1.0)
    assert np.allclose(w, r)


def test_weights_sigmoid_midpoint():
    w, r = compute_example_weights(np.array([0.6]), l_c=0.5, l_d=0.5, c_threshold=1.0)
    assert r == pytest.approx(0.5)
    assert w[0] == pytest.approx(0.8)


def test_weights_suspended_when_payoff_nonpositive():
    w, r = compute_example_weights(np.array([0.1, 0.9]), l_c=0.5, l_d=-0.01,
                                   c_threshold=1.0)
    assert np.allclose(w, 1.0) and r == 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.001, 0.999), min_size=1, max_size=20),
       st.floats(0.01, 3.0), st.floats(0.01, 1.0), st.floats(0.0, 3.0))
def test_weights_lie_between_gate_and_one(d_values, l_c, l_d, c):
    w, r = compute_example_weights(np.array(d_values), l_c, l_d, c)
    assert 0.0 <= r <= 1.0
    assert np.all(w >= r - 1e-12) and np.all(w <= 1.0 + 1e-12)


def test_constant_scores_scale_weights_uniformly():
    w, r = compute_example_weights(np.full(7, 0.37), l_c=0.6, l_d=0.4, c_threshold=1.0)
    assert np.allclose(w, w[0])


def test_decide_tie_goes_positive():
    assert decide([0.5])[0] == 1
    assert decide([0.2])[0] == 0
    assert decide([0.8])[0] == 1


def test_end_to_end_hand_counted_di():
    # 10 rows, predictions fixed by a wide-margin separable fixture.
    x = np.array([[i] for i in [-4, -3, -2, -1, -0.5, 0.5, 1, 2, 3, 4]], dtype=float)
    y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1])
    z = np.array([0, 1, 0, 1, 0, 1, 0, 1, 1, 1])
    ds = Dataset(x, z, y)
    cfg = small_config(epochs=400, generator_lr=0.2, sensitive_input=False,
                       reweight=False)
    model = train_logistic_baseline(ds, cfg)
    preds = decide(predict(model, model_inputs(model, ds)))
    assert np.array_equal(preds, y)
    # rates: z=0 -> 1/4, z=1 -> 4/6; hand-counted DI = (1/4)/(4/6) = 0.375
    assert disparate_impact(preds, z) == pytest.approx(0.375)


def test_linearly_separable_baseline_perfect():
    x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    ds = Dataset(x, [0, 1, 0, 1], [0, 0, 1, 1])
    model = train_logistic_baseline(ds, small_config(epochs=500, generator_lr=0.3))
    preds = decide(predict(model, model_inputs(model, ds)))
    assert np.array_equal(preds, ds.labels)


def test_degenerate_lambdas_match_baseline_exactly(datasets):
    train, val, _ = datasets
    cfg = small_config(lambda1=0.0, lambda2=0.0, reweight=False)
    model_a, _ = train_fair_robust(train, val, cfg)
    model_b = train_logistic_baseline(train, cfg)
    assert np.abs(get_flat_params(model_a) - get_flat_params(model_b)).max() < 1e-9


def test_training_deterministic(datasets):
    train, val, _ = datasets
    cfg = small_config(lambda1=0.3, lambda2=0.2, epochs=40)
    model_a, hist_a = train_fair_robust(train, val, cfg)
    model_b, hist_b = train_fair_robust(train, val, cfg)
    assert np.array_equal(get_flat_params(model_a), get_flat_params(model_b))
    assert hist_a.l1 == hist_b.l1
    assert hist_a.l2 == hist_b.l2
    assert hist_a.r == hist_b.r


def test_history_length_matches_epochs(datasets):
    train, val, _ = datasets
    cfg = small_config(lambda1=0.2, lambda2=0.1, epochs=25)
    _, hist = train_fair_robust(train, val, cfg)
    assert len(hist) == 25
    assert len(hist.probe_di) == 25


def test_lambda2_requires_validation(datasets):
    train, _, _ = datasets
    with pytest.raises(ConfigError):
        train_fair_robust(train, None, small_config(lambda2=0.2))


def test_invalid_lambda_combination():
    with pytest.raises(ConfigError):
        TrainConfig(lambda1=0.7, lambda2=0.4)


def test_eo_and_eopp_criteria_run(datasets):
    train, val, _ = datasets
    for criterion in ("EO", "EOPP"):
        cfg = small_config(lambda1=0.3, lambda2=0.1, epochs=30,
                           fairness_criterion=criterion)
        model, hist = train_fair_robust(train, val, cfg)
        assert len(hist) == 30
        assert np.isfinite(hist.l2[-1])


def test_minibatch_mode_runs_and_is_deterministic(datasets):
    train, val, _ = datasets
    cfg = small_config(lambda1=0.3, lambda2=0.1, epochs=15, batch_size=64)
    model_a, _ = train_fair_robust(train, val, cfg)
    model_b, _ = train_fair_robust(train, val, cfg)
    assert np.array_equal(get_flat_params(model_a), get_flat_params(model_b))


def test_history_csv_round_trip(tmp_path, datasets):
    train, val, _ = datasets
    _, hist = train_fair_robust(train, val, small_config(lambda1=0.2, lambda2=0.1,
                                                         epochs=12))
    path = tmp_path / "history.csv"
    hist.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",")[:4] == ["epoch", "l1", "l2", "l3"]
    assert len(lines) == 13


def test_evaluate_model_reports(datasets):
    train, val, test = datasets
    model = train_logistic_baseline(train, small_config(epochs=300))
    report = evaluate_model(model, test)
    assert 0.5 < report.accuracy <= 1.0
    assert 0.0 <= report.disparate_impact <= 1.0
