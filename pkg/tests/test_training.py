"""Loss, gradients, Adam, the training loop, and the generalization metric."""

import numpy as np
import pytest

from orderfx import (
    AnsatzConfig,
    AnswerDistribution,
    TaskSet,
    TaskSplit,
    TrainConfig,
    TrainingTrace,
    gen_d1,
    generalization_difference,
    gradient,
    lms_loss,
    train_run,
)
from orderfx import ansatz, training
from orderfx.training import FD, INDEPENDENT_RANDOM, PARAM_SHIFT


def random_model(cfg, rng):
    return np.stack([ansatz.random_observable_params(cfg, rng)
                     for _ in range(cfg.n_observables)])


def model_taskset(cfg, m):
    """Wrap the model's own exact distributions as a target task set."""
    orders = gen_d1([0.5] * cfg.n_observables).orders()
    dists = training.model_distributions(cfg, m, orders)
    return TaskSet(cfg.n_observables, "model", {}, None,
                   {o: d.probs for o, d in dists.items()})


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(fd_epsilon=0.0)
    with pytest.raises(ValueError):
        TrainConfig(grad_method="spsa")
    with pytest.raises(ValueError):
        TrainConfig(init_mode="zeros")


def test_split_validation():
    with pytest.raises(ValueError):
        TaskSplit(((1, 2),), ((1, 2),))
    with pytest.raises(ValueError):
        TaskSplit(((1, 2), (1, 2)))


def test_lms_loss_anchors():
    delta = AnswerDistribution(2, np.array([1.0, 0.0, 0.0, 0.0]))
    uniform = AnswerDistribution(2, np.full(4, 0.25))
    assert lms_loss({(1, 2): delta}, {(1, 2): delta}) == 0.0
    assert abs(lms_loss({(1, 2): uniform}, {(1, 2): delta}) - 0.75) < 1e-15

    two = {(1, 2): uniform, (2, 1): delta}
    target = {(1, 2): delta, (2, 1): delta}
    per_task = lms_loss({(1, 2): uniform}, {(1, 2): delta})
    assert abs(lms_loss(two, target) - per_task) < 1e-15


def test_lms_loss_rejects_mismatches():
    d = AnswerDistribution(2, np.full(4, 0.25))
    q = AnswerDistribution(2, np.full(4, 0.25), indexing="question")
    with pytest.raises(ValueError):
        lms_loss({(1, 2): d}, {(2, 1): d})
    with pytest.raises(ValueError):
        lms_loss({(1, 2): d}, {(1, 2): q})


def test_gradient_vanishes_at_exact_fit():
    rng = np.random.default_rng(131)
    cfg = AnsatzConfig(2)
    m = random_model(cfg, rng)
    targets = model_taskset(cfg, m)
    split = TaskSplit(tuple(targets.orders()))
    for method in (PARAM_SHIFT, FD):
        g = gradient(cfg, m, targets, split, method=method)
        assert np.abs(g).max() < 1e-8


def test_gradient_methods_agree():
    rng = np.random.default_rng(137)
    for n in (1, 2, 3):
        cfg = AnsatzConfig(n)
        m = random_model(cfg, rng)
        targets = gen_d1(rng.uniform(0.0, 1.0, n))
        split = TaskSplit(tuple(targets.orders()))
        ps = gradient(cfg, m, targets, split, method=PARAM_SHIFT)
        fd = gradient(cfg, m, targets, split, method=FD)
        assert np.abs(ps - fd).max() < 1e-5


def test_gradient_blocks_equal_under_full_symmetry():
    # identical rows + order-symmetric targets: no block is distinguishable
    rng = np.random.default_rng(139)
    cfg = AnsatzConfig(2)
    m = np.tile(ansatz.random_observable_params(cfg, rng), (2, 1))
    targets = gen_d1([0.4, 0.4])
    split = TaskSplit(tuple(targets.orders()))
    g = gradient(cfg, m, targets, split).reshape(2, -1)
    np.testing.assert_array_equal(g[0], g[1])

    cfg3 = AnsatzConfig(3)
    m3 = np.tile(ansatz.random_observable_params(cfg3, rng), (3, 1))
    targets3 = gen_d1([0.4, 0.4, 0.4])
    g3 = gradient(cfg3, m3, targets3,
                  TaskSplit(tuple(targets3.orders()))).reshape(3, -1)
    np.testing.assert_allclose(g3[1], g3[0], atol=1e-12)
    np.testing.assert_allclose(g3[2], g3[0], atol=1e-12)


def test_gradient_rejects_empty_and_unknown_orders():
    cfg = AnsatzConfig(2)
    targets = gen_d1([0.1, 0.2])
    with pytest.raises(ValueError):
        gradient(cfg, np.zeros((2, 7)), targets, TaskSplit(()))
    single = gen_d1([0.5])
    with pytest.raises(ValueError):
        gradient(cfg, np.zeros((2, 7)), single, TaskSplit(((1, 2),)))


def test_adam_zero_gradient_is_identity():
    tc = TrainConfig()
    params = np.full((2, 7), 0.3)
    state = training.init_adam(14)
    new, state = training.adam_step(state, params, np.zeros(14), tc)
    np.testing.assert_array_equal(new, params)
    assert state.t == 1


def test_adam_first_step_size_is_learning_rate():
    tc = TrainConfig(learning_rate=0.05)
    params = np.zeros((1, 3))
    grads = np.array([2.0, -0.7, 1e-3])
    new, _ = training.adam_step(training.init_adam(3), params, grads, tc)
    # bias correction makes the first step lr * sign(g) up to adam_eps
    np.testing.assert_allclose(np.abs(new.ravel()), tc.learning_rate,
                               rtol=1e-4)
    assert np.sign(new.ravel()).tolist() == [-1.0, 1.0, -1.0]


def test_adam_is_deterministic():
    tc = TrainConfig()
    params = np.linspace(-1.0, 1.0, 14).reshape(2, 7)
    grads = np.linspace(0.5, -0.5, 14)
    a1, s1 = training.adam_step(training.init_adam(14), params, grads, tc)
    a2, s2 = training.adam_step(training.init_adam(14), params, grads, tc)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(s1.m, s2.m)
    np.testing.assert_array_equal(s1.v, s2.v)


def test_init_params_modes():
    cfg = AnsatzConfig(3)
    shared = training.init_params(cfg, TrainConfig(seed=5))
    assert shared.shape == (3, 11)
    np.testing.assert_array_equal(shared[1], shared[0])
    np.testing.assert_array_equal(shared[2], shared[0])
    assert shared.min() >= -np.pi and shared.max() < np.pi

    free = training.init_params(cfg, TrainConfig(seed=5,
                                                 init_mode=INDEPENDENT_RANDOM))
    assert not np.array_equal(free[0], free[1])

    again = training.init_params(cfg, TrainConfig(seed=5))
    np.testing.assert_array_equal(again, shared)


def test_train_run_trace_shape_and_determinism():
    cfg = AnsatzConfig(2)
    targets = gen_d1([0.1, 0.2])
    split = TaskSplit(tuple(targets.orders()))
    tc = TrainConfig(epochs=12, seed=3)
    a = train_run(cfg, tc, targets, split)
    b = train_run(cfg, tc, targets, split)
    for trace in (a, b):
        assert trace.train_loss.shape == (13,)
        assert trace.test_loss.shape == (13,)
        assert trace.zeta.shape == (13,)
        assert np.isfinite(trace.train_loss).all()
        assert np.isfinite(trace.zeta).all()
        assert trace.final_params.shape == (2, 7)
        assert not trace.has_test
    np.testing.assert_array_equal(a.train_loss, b.train_loss)
    np.testing.assert_array_equal(a.zeta, b.zeta)
    np.testing.assert_array_equal(a.final_params, b.final_params)


def test_train_run_reduces_loss():
    cfg = AnsatzConfig(2)
    targets = gen_d1([0.1, 0.2])
    split = TaskSplit(tuple(targets.orders()))
    trace = train_run(cfg, TrainConfig(epochs=60, seed=0), targets, split)
    assert trace.train_loss[-1] < 0.1 * trace.train_loss[0]


def test_zero_order_effect_never_learns_noncommutativity():
    # order-symmetric targets plus a shared initial row keep the observable
    # blocks bit-identical through every full-batch update
    cfg = AnsatzConfig(2)
    targets = gen_d1([0.1, 0.1])
    split = TaskSplit(tuple(targets.orders()))
    trace = train_run(cfg, TrainConfig(epochs=30, seed=9), targets, split)
    assert trace.zeta.max() < 1e-6
    np.testing.assert_array_equal(trace.final_params[0], trace.final_params[1])


def test_train_run_with_test_orders():
    cfg = AnsatzConfig(3)
    targets = gen_d1([0.2, 0.5, 0.8])
    orders = targets.orders()
    split = TaskSplit(tuple(orders[:5]), (orders[5],))
    trace = train_run(cfg, TrainConfig(epochs=8, seed=1), targets, split)
    assert trace.has_test
    assert np.isfinite(trace.test_loss).all()
    expected = float(trace.test_loss[0] - trace.test_loss[-1])
    assert generalization_difference(trace) == expected


def test_generalization_difference_requires_test_set():
    trace = TrainingTrace(
        train_loss=np.zeros(3),
        test_loss=np.zeros(3),
        zeta=np.zeros(3),
        final_params=np.zeros((2, 7)),
        has_test=False,
    )
    with pytest.raises(ValueError):
        generalization_difference(trace)


def test_generalization_difference_edge_values():
    def mk(test_losses):
        return TrainingTrace(
            train_loss=np.zeros(len(test_losses)),
            test_loss=np.asarray(test_losses, dtype=float),
            zeta=np.zeros(len(test_losses)),
            final_params=np.zeros((2, 7)),
            has_test=True,
        )

    assert generalization_difference(mk([0.4, 0.4, 0.4])) == 0.0
    assert generalization_difference(mk([0.5, 0.3, 0.2])) > 0.0


def test_train_run_rejects_empty_train_set():
    targets = gen_d1([0.1, 0.2])
    with pytest.raises(ValueError):
        train_run(AnsatzConfig(2), TrainConfig(epochs=2), targets, TaskSplit(()))


def test_shot_based_logging_differs_from_exact():
    cfg = AnsatzConfig(2)
    targets = gen_d1([0.1, 0.2])
    split = TaskSplit(tuple(targets.orders()))
    exact = train_run(cfg, TrainConfig(epochs=5, seed=2), targets, split)
    noisy = train_run(cfg, TrainConfig(epochs=5, seed=2, n_shots=256),
                      targets, split)
    assert np.isfinite(noisy.train_loss).all()
    assert not np.array_equal(noisy.train_loss, exact.train_loss)
    # the gradient path stays exact, so the learned parameters match
    np.testing.assert_array_equal(noisy.final_params, exact.final_params)
