"""Multi-task training: LMS loss, exact gradients, Adam, and the train loop.

The loss is the summed squared difference between the model's exact answer
distributions and the targets over the training orders. Gradients come
from the parameter-shift rule by default (exact here, because every
parameter multiplies exactly one exp(-i theta G/2) gate per order and the
probabilities are single-frequency trig polynomials in each angle), with
central finite differences as a verification path.

One trial is deterministic given its seed or Generator: initialization,
full-batch updates, and the per-epoch metric evaluations involve no other
randomness. The trace records epochs+1 rows; row 0 is the pre-training
evaluation. An empty test set is legal (sweep runs train on all orders)
and logs a test loss of 0.0, the empty sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .ansatz import (
    AnsatzConfig,
    check_model_params,
    noncommutativity_score,
    random_observable_params,
)
from .datasets import TaskSet
from .measurement import POSITION, AnswerDistribution, check_order, sample

PARAM_SHIFT = "param_shift"
FD = "fd"
IDENTICAL_RANDOM = "identical_random"
INDEPENDENT_RANDOM = "independent_random"


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop settings.

    ``n_shots`` switches the logged losses to sampled empirical
    distributions (the gradient stays exact); it exists for shot-noise
    studies only and is excluded from the validation suites.
    """

    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 150
    grad_method: str = PARAM_SHIFT
    fd_epsilon: float = 1e-4
    init_mode: str = IDENTICAL_RANDOM
    seed: int = 0
    n_shots: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.fd_epsilon <= 0.0:
            raise ValueError("fd_epsilon must be > 0")
        if self.grad_method not in (PARAM_SHIFT, FD):
            raise ValueError(f"unknown grad_method {self.grad_method!r}")
        if self.init_mode not in (IDENTICAL_RANDOM, INDEPENDENT_RANDOM):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def init_adam(n_params: int) -> AdamState:
    return AdamState(m=np.zeros(n_params), v=np.zeros(n_params), t=0)


@dataclass(frozen=True)
class TaskSplit:
    """Disjoint train/test order sets; test may be empty for sweep runs."""

    train_orders: tuple[tuple[int, ...], ...]
    test_orders: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if set(self.train_orders) & set(self.test_orders):
            raise ValueError("train and test orders overlap")
        if len(set(self.train_orders)) != len(self.train_orders):
            raise ValueError("duplicate train orders")
        if len(set(self.test_orders)) != len(self.test_orders):
            raise ValueError("duplicate test orders")


@dataclass
class TrainingTrace:
    """Per-epoch metrics (index 0 = before training) plus the final params.

    ``train_loss`` is the summed multi-task loss over the train orders;
    ``test_loss`` is the average loss per held-out order (0.0 without a
    test set).
    """

    train_loss: np.ndarray
    test_loss: np.ndarray
    zeta: np.ndarray
    final_params: np.ndarray
    has_test: bool


def lms_loss(model_dists: dict, targets: dict) -> float:
    """Sum over orders and answer strings of squared probability differences."""
    if set(model_dists.keys()) != set(targets.keys()):
        raise ValueError("model and target order sets differ")
    total = 0.0
    for order, md in model_dists.items():
        td = targets[order]
        if md.indexing != td.indexing:
            raise ValueError(f"indexing mismatch for order {order}")
        diff = md.probs - td.probs
        total += float(diff @ diff)
    return total


def _order_arrays(cfg: AnsatzConfig, params: np.ndarray, orders):
    """Per-order slot angle stacks and observable->slot maps for the kernels."""
    n = cfg.n_observables
    thetas = np.empty((len(orders), n, cfg.params_per_observable))
    slots = np.empty((len(orders), n), dtype=np.int64)
    for i, order in enumerate(orders):
        o = check_order(order, n)
        for k, q in enumerate(o):
            thetas[i, k] = params[q - 1]
            slots[i, q - 1] = k
    return thetas, slots


def _target_matrix(targets: TaskSet, orders) -> np.ndarray:
    if targets.indexing != POSITION:
        raise ValueError("targets must be POSITION-indexed")
    rows = []
    for order in orders:
        key = tuple(order)
        if key not in targets.tasks:
            raise ValueError(f"order {key} missing from target task set")
        rows.append(targets.tasks[key])
    return np.stack(rows)


def _loss_at(cfg: AnsatzConfig, params: np.ndarray, targets_mat: np.ndarray,
             orders) -> float:
    if len(orders) == 0:
        return 0.0
    thetas, _ = _order_arrays(cfg, params, orders)
    probs = kernels.batch_probs(thetas, cfg.n_qubits)
    diff = probs - targets_mat
    return float((diff * diff).sum())


def model_distributions(cfg: AnsatzConfig, m, orders) -> dict:
    """Exact POSITION-indexed model distribution for each order."""
    params = check_model_params(cfg, m)
    thetas, _ = _order_arrays(cfg, params, orders)
    probs = kernels.batch_probs(thetas, cfg.n_qubits)
    return {
        tuple(order): AnswerDistribution(cfg.n_observables, probs[i], POSITION)
        for i, order in enumerate(orders)
    }


def gradient(cfg: AnsatzConfig, m, targets: TaskSet, split: TaskSplit,
             method: str = PARAM_SHIFT, fd_epsilon: float = 1e-4) -> np.ndarray:
    """Gradient of the train-order loss, flat over all N*(4n-1) parameters."""
    params = check_model_params(cfg, m)
    orders = split.train_orders
    if not orders:
        raise ValueError("empty train order set")
    targets_mat = _target_matrix(targets, orders)
    if method == PARAM_SHIFT:
        thetas, slots = _order_arrays(cfg, params, orders)
        grad, _ = kernels.grad_loss(thetas, slots, targets_mat, cfg.n_qubits)
        return grad
    if method != FD:
        raise ValueError(f"unknown gradient method {method!r}")
    flat = params.ravel().copy()
    shape = params.shape
    grad = np.empty(flat.size)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + fd_epsilon
        lp = _loss_at(cfg, flat.reshape(shape), targets_mat, orders)
        flat[j] = orig - fd_epsilon
        lm = _loss_at(cfg, flat.reshape(shape), targets_mat, orders)
        flat[j] = orig
        grad[j] = (lp - lm) / (2.0 * fd_epsilon)
    return grad


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray,
              tc: TrainConfig) -> tuple[np.ndarray, AdamState]:
    """One standard Adam update with bias correction (out of place)."""
    flat = params.ravel()
    if grads.shape != flat.shape:
        raise ValueError(f"gradient shape {grads.shape} does not match {flat.shape}")
    t = state.t + 1
    m = tc.beta1 * state.m + (1.0 - tc.beta1) * grads
    v = tc.beta2 * state.v + (1.0 - tc.beta2) * grads * grads
    m_hat = m / (1.0 - tc.beta1 ** t)
    v_hat = v / (1.0 - tc.beta2 ** t)
    new_flat = flat - tc.learning_rate * m_hat / (np.sqrt(v_hat) + tc.adam_eps)
    return new_flat.reshape(params.shape), AdamState(m=m, v=v, t=t)


def init_params(cfg: AnsatzConfig, tc: TrainConfig,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Initial ModelParams: one shared random row, or independent rows."""
    if rng is None:
        rng = np.random.default_rng(tc.seed)
    if tc.init_mode == IDENTICAL_RANDOM:
        row = random_observable_params(cfg, rng)
        return np.tile(row, (cfg.n_observables, 1))
    return np.stack(
        [random_observable_params(cfg, rng) for _ in range(cfg.n_observables)]
    )


def _logged_loss(cfg: AnsatzConfig, params, targets_mat, orders,
                 tc: TrainConfig, shot_rng) -> float:
    if len(orders) == 0:
        return 0.0
    if tc.n_shots is None:
        return _loss_at(cfg, params, targets_mat, orders)
    total = 0.0
    for i, order in enumerate(orders):
        counts = sample(cfg, params, order, tc.n_shots, shot_rng)
        emp = counts / tc.n_shots
        diff = emp - targets_mat[i]
        total += float(diff @ diff)
    return total


def train_run(cfg: AnsatzConfig, tc: TrainConfig, targets: TaskSet,
              split: TaskSplit, rng: np.random.Generator | None = None
              ) -> TrainingTrace:
    """Full-batch Adam training with per-epoch train/test loss and score.

    ``rng`` overrides ``tc.seed`` for initialization so a caller owning a
    per-trial Generator can keep one seed stream per trial.
    """
    if not split.train_orders:
        raise ValueError("empty train order set")
    if rng is None:
        rng = np.random.default_rng(tc.seed)
    train_targets = _target_matrix(targets, split.train_orders)
    test_targets = (_target_matrix(targets, split.test_orders)
                    if split.test_orders else np.zeros((0, 1 << cfg.n_observables)))
    params = init_params(cfg, tc, rng)

    epochs = tc.epochs
    train_hist = np.empty(epochs + 1)
    test_hist = np.empty(epochs + 1)
    zeta_hist = np.empty(epochs + 1)

    def record(i: int):
        train_hist[i] = _logged_loss(cfg, params, train_targets,
                                     split.train_orders, tc, rng)
        # The test metric is the average loss per held-out order, so runs
        # with different held-out counts stay on one scale.
        test_hist[i] = _logged_loss(cfg, params, test_targets,
                                    split.test_orders, tc, rng)
        if split.test_orders:
            test_hist[i] /= len(split.test_orders)
        zeta_hist[i] = noncommutativity_score(cfg, params)

    record(0)
    adam = init_adam(cfg.n_params)
    for epoch in range(1, epochs + 1):
        grads = gradient(cfg, params, targets, split,
                         method=tc.grad_method, fd_epsilon=tc.fd_epsilon)
        params, adam = adam_step(adam, params, grads, tc)
        record(epoch)
    return TrainingTrace(
        train_loss=train_hist,
        test_loss=test_hist,
        zeta=zeta_hist,
        final_params=params,
        has_test=bool(split.test_orders),
    )


def generalization_difference(trace: TrainingTrace) -> float:
    """Test loss at epoch 0 minus test loss at the final epoch."""
    if not trace.has_test:
        raise ValueError("trace has no test orders")
    return float(trace.test_loss[0] - trace.test_loss[-1])
