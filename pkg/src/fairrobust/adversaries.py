"""Mutual-information adversaries and exact oracles on small discrete joints.

Two kinds of machinery live here:

* Exact oracles (``mi_exact``, ``cmi_exact``) and their discriminator-form
  counterparts on explicit probability tables. The discriminator form evaluates
  the payoff ``sum_cells p * log D + H(...)`` at the closed-form optimal table
  (the posterior) and, as an independent check, maximizes the same payoff
  numerically with projected gradient ascent on the simplex. At the optimum the
  payoff equals the (conditional) mutual information.

* Empirical adversary objectives used during training: the fairness payoff on
  (prediction, group) pairs, its label-conditioned variant, and the robustness
  payoff that contrasts training rows carrying predictions against validation
  rows carrying labels. Each returns the payoff value together with exact
  gradients for the adversary parameters and for the predictions, so the same
  evaluation serves both the ascent and descent sides of training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import empirical_conditional_entropy, empirical_entropy
from .nnet import (
    ForwardCache,
    Gradients,
    MLPModel,
    MLPSpec,
    backward,
    forward_with_cache,
    init_model,
)

LOG_EPS = 1e-12


class InvalidJointError(ValueError):
    """Probability table is not a valid joint distribution."""


@dataclass
class DiscreteJoint:
    """Explicit pmf over two small finite alphabets, optionally conditioned.

    2-D tables are joints over (a, b); 3-D tables add a conditioning axis, with
    axes ordered (a, b, condition).
    """

    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.ndim not in (2, 3):
            raise InvalidJointError(f"pmf must be 2-D or 3-D, got ndim={pmf.ndim}")
        if max(pmf.shape) > 8:
            raise InvalidJointError("alphabets larger than 8 are not supported")
        if pmf.min() < 0:
            raise InvalidJointError("pmf entries must be nonnegative")
        if abs(pmf.sum() - 1.0) > 1e-12:
            raise InvalidJointError(f"pmf sums to {pmf.sum()}, expected 1")
        self.pmf = pmf


def _xlogratio(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float((p[mask] * np.log(p[mask] / q[mask])).sum())


def mi_exact(j: DiscreteJoint) -> float:
    """I(A;B) = sum p(a,b) log [p(a,b) / (p(a)p(b))], in nats."""
    p = j.pmf
    if p.ndim != 2:
        raise InvalidJointError("mi_exact expects a 2-D joint")
    outer = np.outer(p.sum(axis=1), p.sum(axis=0))
    return _xlogratio(p, outer)


def cmi_exact(j: DiscreteJoint) -> float:
    """I(A;B|C) for a 3-D table with the conditioning variable on the last axis."""
    p = j.pmf
    if p.ndim != 3:
        raise InvalidJointError("cmi_exact expects a 3-D joint")
    total = 0.0
    for c in range(p.shape[2]):
        pc = p[:, :, c].sum()
        if pc > 0:
            total += pc * mi_exact(DiscreteJoint(p[:, :, c] / pc))
    return total


def _entropy(p: np.ndarray) -> float:
    mask = p > 0
    return float(-(p[mask] * np.log(p[mask])).sum())


def _project_simplex_columns(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each column onto the probability simplex."""
    k = v.shape[0]
    u = -np.sort(-v, axis=0)
    css = np.cumsum(u, axis=0) - 1.0
    ind = np.arange(1, k + 1, dtype=np.float64)[:, None]
    cond = u - css / ind > 0
    rho = k - 1 - np.argmax(cond[::-1, :], axis=0)
    theta = css[rho, np.arange(v.shape[1])] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _table_payoff(mass: np.ndarray, table: np.ndarray) -> float:
    mask = mass > 0
    return float((mass[mask] * np.log(np.clip(table[mask], LOG_EPS, None))).sum())


def _fw_gap(mass: np.ndarray, d: np.ndarray) -> float:
    """Frank-Wolfe optimality gap of the concave payoff at a feasible table.

    Per column the gap is max_a grad_a - <grad, d> with grad = mass / d; it
    upper-bounds the distance to the column's optimum, so summing columns
    bounds the total suboptimality.
    """
    grad = mass / np.clip(d, LOG_EPS, None)
    col_mass = mass.sum(axis=0)
    return float((grad.max(axis=0) - col_mass)[col_mass > 0].sum())


def _maximize_table(mass: np.ndarray, max_iters: int = 10_000, step: float = 0.1,
                    tol: float = 1e-6) -> tuple[float, np.ndarray]:
    """Maximize sum(mass * log D) over column-simplex tables D by gradient ascent.

    Internal verification tool, independent of the closed-form optimum. Ascent
    runs in the simplex's natural (exponentiated-gradient) geometry: a plain
    Euclidean projected step is hopelessly ill-conditioned when some optimal
    cell is tiny, while the multiplicative step handles it in a few iterations.
    The step backtracks until the payoff improves and iteration stops once the
    Frank-Wolfe gap certifies the payoff is within ``tol`` of the maximum.
    """
    k = mass.shape[0]
    log_d = np.full_like(mass, -math.log(k))
    d = np.exp(log_d)
    val = _table_payoff(mass, d)
    for _ in range(max_iters):
        if _fw_gap(mass, d) < tol:
            break
        grad = mass / np.clip(d, LOG_EPS, None)
        improved = False
        for _ in range(60):
            cand_log = log_d + step * grad
            cand_log -= cand_log.max(axis=0, keepdims=True)
            cand = np.exp(cand_log)
            cand /= cand.sum(axis=0, keepdims=True)
            cand_val = _table_payoff(mass, cand)
            if cand_val > val:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        d, val = cand, cand_val
        log_d = np.log(np.clip(d, 1e-300, None))
        step *= 2.0
    return val, d


@dataclass
class DiscriminatorBound:
    """Discriminator-form MI evaluation plus its numeric-maximization check."""

    value: float  # payoff at the closed-form optimal table, plus the entropy constant
    optimal_table: np.ndarray
    numeric_value: float  # payoff maximized by projected gradient ascent
    diagnostic: float  # worst deviation of either value from the exact MI


def table_objective(j: DiscreteJoint, table: np.ndarray) -> float:
    """Payoff sum p(a,b) log D_a(b) + H(A) for any column-simplex table D."""
    p = j.pmf
    table = np.asarray(table, dtype=np.float64)
    if table.shape != p.shape:
        raise InvalidJointError("table shape must match the pmf")
    if not np.allclose(table.sum(axis=0), 1.0, atol=1e-9) or table.min() < 0:
        raise InvalidJointError("table columns must lie on the simplex")
    return _table_payoff(p, table) + _entropy(p.sum(axis=tuple(range(1, p.ndim))))


def mi_via_discriminator(j: DiscreteJoint) -> DiscriminatorBound:
    """I(A;B) through the optimal-discriminator identity.

    The optimal table is the posterior D*_a(b) = p(a|b); evaluating the payoff
    there and adding H(A) recovers the mutual information exactly. A projected
    gradient ascent over feasible tables independently verifies the maximum.
    """
    p = j.pmf
    if p.ndim != 2:
        raise InvalidJointError("mi_via_discriminator expects a 2-D joint")
    marg_a = p.sum(axis=1)
    marg_b = p.sum(axis=0)
    d_star = np.where(marg_b > 0, p / np.where(marg_b > 0, marg_b, 1.0), marg_a[:, None])
    h_a = _entropy(marg_a)
    value = _table_payoff(p, d_star) + h_a
    numeric_payoff, _ = _maximize_table(p)
    numeric_value = numeric_payoff + h_a
    exact = mi_exact(j)
    diagnostic = max(abs(value - exact), abs(numeric_value - exact))
    return DiscriminatorBound(value, d_star, numeric_value, diagnostic)


def cmi_via_discriminator(j: DiscreteJoint) -> DiscriminatorBound:
    """I(A;B|C) through per-condition optimal discriminator tables."""
    p = j.pmf
    if p.ndim != 3:
        raise InvalidJointError("cmi_via_discriminator expects a 3-D joint")
    n_a, n_b, n_c = p.shape
    marg_bc = p.sum(axis=0)  # (b, c)
    marg_c = p.sum(axis=(0, 1))
    cond_a = np.zeros((n_a, n_c))  # p(a|c), fallback for zero-mass (b, c) cells
    for c in range(n_c):
        cond_a[:, c] = p[:, :, c].sum(axis=1) / marg_c[c] if marg_c[c] > 0 else 1.0 / n_a
    d_star = np.where(
        marg_bc > 0,
        p / np.where(marg_bc > 0, marg_bc, 1.0),
        cond_a[:, None, :],
    )
    h_cond = float(
        sum(
            marg_c[c] * _entropy(p[:, :, c].sum(axis=1) / marg_c[c])
            for c in range(n_c)
            if marg_c[c] > 0
        )
    )
    value = _table_payoff(p, d_star) + h_cond
    numeric_payoff, _ = _maximize_table(p.reshape(n_a, n_b * n_c))
    numeric_value = numeric_payoff + h_cond
    exact = cmi_exact(j)
    diagnostic = max(abs(value - exact), abs(numeric_value - exact))
    return DiscriminatorBound(value, d_star, numeric_value, diagnostic)


@dataclass
class FairnessAdversary:
    """Predicts the sensitive group from the classifier's output probability.

    The softmax head enforces the simplex constraint structurally.
    """

    model: MLPModel

    def __post_init__(self):
        if self.model.spec.output_activation != "softmax":
            raise ValueError("fairness adversary requires a softmax output")


@dataclass
class RobustnessAdversary:
    """Scores (features, one-hot group, label-or-prediction) rows as validation-like."""

    model: MLPModel
    z_cardinality: int

    def __post_init__(self):
        if self.model.spec.output_activation != "sigmoid" or self.model.spec.output_dim != 1:
            raise ValueError("robustness adversary requires a scalar sigmoid output")
        expected = self.model.spec.input_dim - self.z_cardinality - 1
        if expected < 1:
            raise ValueError("input dim too small for features + one-hot z + label slot")


def new_fairness_adversary(z_cardinality: int, seed: int) -> FairnessAdversary:
    """Single-layer softmax head on the scalar prediction."""
    spec = MLPSpec(input_dim=1, hidden_dim=0, output_dim=z_cardinality,
                   output_activation="softmax")
    return FairnessAdversary(init_model(spec, seed))


def new_robustness_adversary(feature_dim: int, z_cardinality: int, hidden_dim: int,
                             seed: int) -> RobustnessAdversary:
    spec = MLPSpec(
        input_dim=feature_dim + z_cardinality + 1,
        hidden_dim=hidden_dim,
        output_dim=1,
        hidden_activation="relu",
        output_activation="sigmoid",
    )
    return RobustnessAdversary(init_model(spec, seed), z_cardinality)


def robustness_inputs(features, z, label_slot, z_cardinality: int) -> np.ndarray:
    """Concatenate (features, one-hot z, label-or-prediction scalar)."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    onehot = np.zeros((len(z), z_cardinality))
    onehot[np.arange(len(z)), z] = 1.0
    slot = np.asarray(label_slot, dtype=np.float64).reshape(-1, 1)
    return np.hstack([features, onehot, slot])


@dataclass
class FairnessEval:
    value: float
    adversary_grads: Gradients
    prediction_grad: np.ndarray


@dataclass
class EOFairnessEval:
    value: float
    head_grads: dict[int, Gradients]
    prediction_grad: np.ndarray


@dataclass
class RobustnessEval:
    value: float
    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]
    prediction_grad: np.ndarray
    train_scores: np.ndarray

    def adversary_grads(self) -> Gradients:
        return Gradients(self.weight_grads, self.bias_grads, np.zeros(0))


def fairness_objective_di(adv: FairnessAdversary, predictions, z, weights=None) -> FairnessEval:
    """Empirical fairness payoff (1/m) sum_i w_i log D_{z_i}(yhat_i) + H(Z).

    H(Z) is the empirical group entropy, a constant with no gradient. At the
    adversary's optimum the payoff estimates I(Z; Yhat); driving it to zero
    makes predictions carry no group information.
    """
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    m = len(predictions)
    if m == 0 or len(z) != m:
        raise ValueError("predictions and z must be nonempty and equal length")
    if adv.model.spec.output_dim <= z.max():
        raise ValueError("adversary output dim smaller than number of groups")
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    cache = forward_with_cache(adv.model, predictions[:, None])
    probs = cache.output
    rows = np.arange(m)
    picked = np.clip(probs[rows, z], LOG_EPS, None)
    value = float((w * np.log(picked)).sum() / m) + empirical_entropy(z)
    d_probs = np.zeros_like(probs)
    d_probs[rows, z] = w / (m * picked)
    grads = backward(adv.model, cache, d_probs)
    return FairnessEval(value, grads, grads.inputs[:, 0])


def fairness_objective_eo(heads: dict[int, FairnessAdversary], predictions, z, y,
                          weights=None) -> EOFairnessEval:
    """Label-conditioned fairness payoff, one adversary head per observed label.

    Sums (1/m) w_i log D_{z_i | y_i}(yhat_i) over all examples plus H(Z|Y); at
    the heads' optimum this estimates I(Z; Yhat | Y). Labels with no examples
    are skipped.
    """
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    m = len(predictions)
    if m == 0 or len(z) != m or len(y) != m:
        raise ValueError("predictions, z, y must be nonempty and equal length")
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    value = empirical_conditional_entropy(z, y)
    prediction_grad = np.zeros(m)
    head_grads: dict[int, Gradients] = {}
    for yv in sorted(set(int(v) for v in np.unique(y))):
        mask = y == yv
        if yv not in heads:
            raise ValueError(f"no adversary head for label value {yv}")
        cache = forward_with_cache(heads[yv].model, predictions[mask][:, None])
        probs = cache.output
        rows = np.arange(int(mask.sum()))
        picked = np.clip(probs[rows, z[mask]], LOG_EPS, None)
        value += float((w[mask] * np.log(picked)).sum() / m)
        d_probs = np.zeros_like(probs)
        d_probs[rows, z[mask]] = w[mask] / (m * picked)
        grads = backward(heads[yv].model, cache, d_probs)
        head_grads[yv] = grads
        prediction_grad[mask] = grads.inputs[:, 0]
    return EOFairnessEval(float(value), head_grads, prediction_grad)


def robustness_objective(adv: RobustnessAdversary, train_features, train_z,
                         train_predictions, val_features, val_z, val_labels) -> RobustnessEval:
    """Balanced real-vs-generated payoff between validation rows and training rows.

    Validation rows carry their true labels, training rows carry the current
    predictions; each side contributes probability mass 1/2, so the added
    constant is H(V) = ln 2 and the payoff at the adversary optimum estimates
    the mutual information between the source indicator and the row content.
    """
    x_tr = robustness_inputs(train_features, train_z, train_predictions, adv.z_cardinality)
    x_va = robustness_inputs(val_features, val_z, val_labels, adv.z_cardinality)
    m_tr, m_va = len(x_tr), len(x_va)
    if m_va == 0:
        raise ValueError("validation set must be nonempty")
    if m_tr == 0:
        raise ValueError("training set must be nonempty")
    cache_tr = forward_with_cache(adv.model, x_tr)
    cache_va = forward_with_cache(adv.model, x_va)
    d_tr = cache_tr.output.ravel()
    d_va = cache_va.output.ravel()
    value = (
        float(np.log(d_va).mean()) / 2.0
        + float(np.log(1.0 - d_tr).mean()) / 2.0
        + math.log(2.0)
    )
    up_va = (1.0 / (2.0 * m_va * d_va))[:, None]
    up_tr = (-1.0 / (2.0 * m_tr * (1.0 - d_tr)))[:, None]
    g_va = backward(adv.model, cache_va, up_va)
    g_tr = backward(adv.model, cache_tr, up_tr)
    weight_grads = [a + b for a, b in zip(g_va.weights, g_tr.weights)]
    bias_grads = [a + b for a, b in zip(g_va.biases, g_tr.biases)]
    return RobustnessEval(
        value=value,
        weight_grads=weight_grads,
        bias_grads=bias_grads,
        prediction_grad=g_tr.inputs[:, -1],
        train_scores=d_tr,
    )
