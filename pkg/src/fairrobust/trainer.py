"""Alternating min-max training: classifier vs fairness and robustness adversaries.

The classifier ("generator") minimizes a convex combination of its weighted
cross entropy, the fairness adversary's payoff, and the robustness adversary's
payoff; the adversaries maximize their own payoffs with several ascent steps
per generator step. When re-weighting is on, per-example weights are rebuilt
every generator step from the robustness adversary's decision values, gated by
the relative performance of classifier and adversary.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace, asdict

import numpy as np

from .adversaries import (
    FairnessAdversary,
    RobustnessAdversary,
    fairness_objective_di,
    fairness_objective_eo,
    new_fairness_adversary,
    new_robustness_adversary,
    robustness_objective,
)
from .dataset import Dataset
from .metrics import MetricsReport, UndefinedGroupError, accuracy, compute_report, disparate_impact
from .nnet import (
    MLPModel,
    MLPSpec,
    adam_step,
    backward,
    forward,
    forward_with_cache,
    init_model,
    init_optimizer,
    sgd_step,
    weighted_cross_entropy,
    weighted_cross_entropy_grad,
)

logger = logging.getLogger(__name__)

FAIRNESS_CRITERIA = ("DI", "EO", "EOPP")


class ConfigError(ValueError):
    """Invalid training configuration."""


class TrainingDivergedError(RuntimeError):
    """Loss or gradients became non-finite during training."""


@dataclass
class TrainConfig:
    """Knobs for one training run.

    ``lambda1`` and ``lambda2`` weight the fairness and robustness payoffs; the
    cross entropy is scaled by ``1 - lambda1 - lambda2``. ``update_ratio`` is
    the number of adversary ascent steps per generator step. The fairness
    adversary stays frozen until the generator's probe accuracy reaches
    ``unfreeze_accuracy`` or ``unfreeze_epoch_fraction`` of the epochs have
    elapsed, whichever happens first.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    c_threshold: float = 1.0
    fairness_criterion: str = "DI"
    generator_lr: float = 0.01
    disc_lr: float = 0.05
    epochs: int = 2000
    pretrain_epochs: int = 200
    unfreeze_accuracy: float = 0.65
    unfreeze_epoch_fraction: float = 0.30
    update_ratio: int = 3
    reweight: bool = True
    seed: int = 0
    batch_size: int = 0  # 0 = full batch
    generator_hidden: int = 0
    robust_hidden: int = 8
    hidden_activation: str = "relu"
    sensitive_input: bool = True  # append one-hot z to the classifier input

    def __post_init__(self):
        if not (0.0 <= self.lambda1 < 1.0 and 0.0 <= self.lambda2 < 1.0):
            raise ConfigError("lambda1 and lambda2 must lie in [0, 1)")
        if self.lambda1 + self.lambda2 >= 1.0:
            raise ConfigError("lambda1 + lambda2 must be < 1")
        if self.fairness_criterion not in FAIRNESS_CRITERIA:
            raise ConfigError(f"fairness_criterion must be one of {FAIRNESS_CRITERIA}")
        if self.generator_lr <= 0 or self.disc_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if self.epochs < 1 or self.pretrain_epochs < 0:
            raise ConfigError("epochs must be >= 1 and pretrain_epochs >= 0")
        if self.update_ratio < 1:
            raise ConfigError("update_ratio must be >= 1")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "TrainConfig":
        return cls(**payload)


@dataclass
class TrainHistory:
    """Per-epoch trace of the main loop (pretraining epochs are not recorded)."""

    l1: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    l3: list[float] = field(default_factory=list)
    l_c: list[float] = field(default_factory=list)
    l_d: list[float] = field(default_factory=list)
    r: list[float] = field(default_factory=list)
    probe_accuracy: list[float] = field(default_factory=list)
    probe_di: list[float] = field(default_factory=list)

    def append(self, **kwargs) -> None:
        for key, value in kwargs.items():
            getattr(self, key).append(float(value))

    def __len__(self) -> int:
        return len(self.l1)

    def to_csv(self, path) -> None:
        cols = ["l1", "l2", "l3", "l_c", "l_d", "r", "probe_accuracy", "probe_di"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch"] + cols)
            for i in range(len(self)):
                writer.writerow([i] + [getattr(self, c)[i] for c in cols])


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x)) if x >= 0 else math.exp(x) / (1.0 + math.exp(x))


def compute_example_weights(d_values, l_c: float, l_d: float, c_threshold: float):
    """W_i = R + d_i * (1 - R) with gate R = sigmoid(l_c / l_d - c_threshold).

    ``d_values`` are the robustness adversary's validation-likeness scores on
    the training rows; ``l_d`` is the adversary's current payoff. A payoff at or
    below zero means the adversary is no better than chance, so re-weighting is
    suspended (all weights 1).
    """
    d_values = np.asarray(d_values, dtype=np.float64).reshape(-1)
    if l_d <= 0.0:
        logger.debug("re-weighting suspended: adversary payoff %.4g <= 0", l_d)
        return np.ones_like(d_values), 1.0
    r = _sigmoid(l_c / l_d - c_threshold)
    return r + d_values * (1.0 - r), r


def predict(model: MLPModel, features) -> np.ndarray:
    """Positive-class probability for each input row (matrix must match the model)."""
    return forward(model, np.atleast_2d(np.asarray(features, dtype=np.float64))).ravel()


def decide(probabilities) -> np.ndarray:
    """Threshold at 0.5; ties go to the positive class."""
    return (np.asarray(probabilities, dtype=np.float64) >= 0.5).astype(np.int64)


def model_inputs(model: MLPModel, d: Dataset) -> np.ndarray:
    """Input matrix for a model trained on this dataset's schema.

    Matches on the model's input width: either the plain features or the
    features with one-hot sensitive codes appended.
    """
    want = model.spec.input_dim
    if want == d.feature_dim:
        return d.features
    if want == d.feature_dim + d.z_cardinality:
        return _augment(d.features, d.sensitive, d.z_cardinality)
    raise ConfigError(
        f"model expects input dim {want}; dataset provides {d.feature_dim} features "
        f"and {d.z_cardinality} sensitive codes"
    )


def _augment(features, sensitive, z_cardinality: int) -> np.ndarray:
    onehot = np.zeros((len(sensitive), z_cardinality))
    onehot[np.arange(len(sensitive)), sensitive] = 1.0
    return np.hstack([features, onehot])


def evaluate_model(model: MLPModel, d: Dataset) -> MetricsReport:
    return compute_report(decide(predict(model, model_inputs(model, d))),
                          d.labels, d.sensitive, z_cardinality=d.z_cardinality)


class _FairnessSide:
    """Owns the fairness adversary head(s) and their SGD states for one run."""

    def __init__(self, criterion: str, z_cardinality: int, lr: float, seed: int):
        self.criterion = criterion
        keys = (0, 1) if criterion == "EO" else (0,)
        seq = np.random.SeedSequence(seed).spawn(len(keys))
        self.heads = {}
        for key, child in zip(keys, seq):
            adv = new_fairness_adversary(z_cardinality, int(child.generate_state(1)[0]))
            self.heads[key] = (adv, init_optimizer("sgd", lr, adv.model))

    def _evaluate(self, yhat, z, y, weights):
        if self.criterion == "DI":
            adv, _ = self.heads[0]
            ev = fairness_objective_di(adv, yhat, z, weights)
            return ev.value, ev.prediction_grad, {0: ev.adversary_grads}
        if self.criterion == "EO":
            heads = {k: adv for k, (adv, _) in self.heads.items()}
            ev = fairness_objective_eo(heads, yhat, z, y, weights)
            return ev.value, ev.prediction_grad, ev.head_grads
        mask = y == 1
        if not mask.any():
            return 0.0, np.zeros_like(yhat), {}
        adv, _ = self.heads[0]
        ev = fairness_objective_di(adv, yhat[mask], z[mask], weights[mask])
        grad = np.zeros_like(yhat)
        grad[mask] = ev.prediction_grad
        return ev.value, grad, {0: ev.adversary_grads}

    def ascend(self, yhat, z, y, weights) -> None:
        _, _, head_grads = self._evaluate(yhat, z, y, weights)
        for key, grads in head_grads.items():
            adv, opt = self.heads[key]
            sgd_step(adv.model, grads.scaled(-1.0), opt)

    def evaluate(self, yhat, z, y, weights):
        value, pred_grad, _ = self._evaluate(yhat, z, y, weights)
        return value, pred_grad


def train_fair_robust(train: Dataset, val: Dataset | None, cfg: TrainConfig
                      ) -> tuple[MLPModel, TrainHistory]:
    """Run the full alternating loop and return the final generator and history.

    Loop contract: pretrain the generator on the scaled cross entropy alone;
    then, per epoch, ``update_ratio`` adversary ascent steps followed by one
    generator descent step on the combined objective with adversary parameters
    held fixed. Weights are rebuilt before every generator step when
    re-weighting is on, and apply to the cross entropy and fairness payoff
    only. Deterministic for a fixed config and datasets.
    """
    if cfg.lambda2 > 0 and (val is None or len(val) == 0):
        raise ConfigError("lambda2 > 0 requires a nonempty validation set "
                          "(set lambda2 = 0 to disable robustness training)")
    if len(train) == 0:
        raise ConfigError("training set is empty")
    if val is not None and len(val) > 0 and val.feature_dim != train.feature_dim:
        raise ConfigError("train/validation feature dimensions differ")

    z, y, w0 = train.sensitive, train.labels, train.weights
    x = (
        _augment(train.features, z, train.z_cardinality)
        if cfg.sensitive_input
        else train.features
    )
    lam0 = 1.0 - cfg.lambda1 - cfg.lambda2
    seeds = [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(cfg.seed).spawn(4)]
    gen_spec = MLPSpec(
        input_dim=x.shape[1],
        hidden_dim=cfg.generator_hidden,
        output_dim=1,
        hidden_activation=cfg.hidden_activation,
        output_activation="sigmoid",
    )
    gen = init_model(gen_spec, seeds[0])
    opt_gen = init_optimizer("adam", cfg.generator_lr, gen)

    fairness = None
    if cfg.lambda1 > 0:
        fairness = _FairnessSide(cfg.fairness_criterion, train.z_cardinality,
                                 cfg.disc_lr, seeds[1])
    robustness = None
    opt_rob = None
    if cfg.lambda2 > 0:
        robustness = new_robustness_adversary(train.feature_dim, train.z_cardinality,
                                              cfg.robust_hidden, seeds[2])
        opt_rob = init_optimizer("sgd", cfg.disc_lr, robustness.model)

    batch_rng = np.random.default_rng(seeds[3])
    history = TrainHistory()

    for _ in range(cfg.pretrain_epochs):
        cache = forward_with_cache(gen, x)
        _, d_l1 = weighted_cross_entropy_grad(cache.output.ravel(), y, w0)
        adam_step(gen, backward(gen, cache, (lam0 * d_l1)[:, None]), opt_gen)

    weights = w0.copy()
    fairness_released = False
    gate_epoch = int(cfg.unfreeze_epoch_fraction * cfg.epochs)
    state = {"suspension_warned": False}

    raw = train.features

    def run_round(idx: np.ndarray | None):
        """One adversary/generator round on the given rows (None = full batch)."""
        nonlocal weights, fairness_released
        if idx is None:
            bx, braw, bz, by, bw0 = x, raw, z, y, w0
        else:
            bx, braw, bz, by, bw0 = x[idx], raw[idx], z[idx], y[idx], w0[idx]
        cache = forward_with_cache(gen, bx)
        yhat = cache.output.ravel()
        bweights = weights if idx is None else weights[idx]

        for _ in range(cfg.update_ratio):
            if fairness is not None and fairness_released:
                fairness.ascend(yhat, bz, by, bweights)
            if robustness is not None:
                rv = robustness_objective(robustness, braw, bz, yhat,
                                          val.features, val.sensitive, val.labels)
                sgd_step(robustness.model,
                         rv.adversary_grads().scaled(-1.0), opt_rob)

        l_c = l_d = r_gate = float("nan")
        rv = None
        if robustness is not None:
            rv = robustness_objective(robustness, braw, bz, yhat,
                                      val.features, val.sensitive, val.labels)
        if cfg.reweight and rv is not None:
            l_c = weighted_cross_entropy(yhat, by, bw0)
            l_d = rv.value
            if l_d <= 0.0 and not state["suspension_warned"]:
                logger.warning(
                    "re-weighting suspended while adversary payoff <= 0 "
                    "(first at payoff %.4g); weights stay 1 until it recovers", l_d)
                state["suspension_warned"] = True
            wt, r_gate = compute_example_weights(rv.train_scores, l_c, l_d,
                                                 cfg.c_threshold)
            bweights = bw0 * wt
            if idx is None:
                weights = bweights
            else:
                weights = weights.copy()
                weights[idx] = bweights
        else:
            bweights = bw0

        l1, d_l1 = weighted_cross_entropy_grad(yhat, by, bweights)
        d_total = lam0 * d_l1
        l2 = 0.0
        if fairness is not None:
            l2, fair_grad = fairness.evaluate(yhat, bz, by, bweights)
            d_total = d_total + cfg.lambda1 * fair_grad
        l3 = rv.value if rv is not None else 0.0
        if rv is not None:
            d_total = d_total + cfg.lambda2 * rv.prediction_grad
        total = lam0 * l1 + cfg.lambda1 * l2 + cfg.lambda2 * l3
        if not math.isfinite(total):
            raise TrainingDivergedError(
                f"non-finite objective (l1={l1}, l2={l2}, l3={l3})")
        adam_step(gen, backward(gen, cache, d_total[:, None]), opt_gen)
        return l1, l2, l3, l_c, l_d, r_gate

    for epoch in range(cfg.epochs):
        probs = forward(gen, x).ravel()
        preds = decide(probs)
        probe_acc = accuracy(preds, y)
        try:
            probe_di = disparate_impact(preds, z)
        except UndefinedGroupError:
            probe_di = float("nan")
        if not fairness_released and (probe_acc >= cfg.unfreeze_accuracy
                                      or epoch >= gate_epoch):
            fairness_released = True

        if cfg.batch_size and cfg.batch_size < len(train):
            perm = batch_rng.permutation(len(train))
            stats = None
            for start in range(0, len(train), cfg.batch_size):
                stats = run_round(perm[start : start + cfg.batch_size])
            l1, l2, l3, l_c, l_d, r_gate = stats
        else:
            l1, l2, l3, l_c, l_d, r_gate = run_round(None)

        history.append(l1=l1, l2=l2, l3=l3, l_c=l_c, l_d=l_d, r=r_gate,
                       probe_accuracy=probe_acc, probe_di=probe_di)

    return gen, history


def train_logistic_baseline(train: Dataset, cfg: TrainConfig) -> MLPModel:
    """Plain weighted-cross-entropy logistic model; no adversaries, no re-weighting."""
    base = replace(cfg, lambda1=0.0, lambda2=0.0, reweight=False, generator_hidden=0)
    model, _ = train_fair_robust(train, None, base)
    return model
