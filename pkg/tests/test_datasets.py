"""Synthetic task-set generators and the order-effect strength metric."""

import numpy as np
import pytest

from orderfx import D2Config, TaskSet, gen_d1, gen_d2, oe_strength
from orderfx import datasets

D1_ANCHOR_SCORES = [0.1, 0.2]
# order (1, 2): slot probabilities 0.1 then (0.1 + 0.2) / 2
D1_ANCHOR_12 = np.array([0.015, 0.085, 0.135, 0.765])
# order (2, 1): slot probabilities 0.2 then (0.2 + 0.1) / 2
D1_ANCHOR_21 = np.array([0.03, 0.17, 0.12, 0.68])
D1_ANCHOR_STRENGTH = 0.0099


def test_all_orders_lexicographic():
    assert datasets.all_orders(1) == [(1,)]
    assert datasets.all_orders(3) == [
        (1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1),
    ]
    with pytest.raises(ValueError):
        datasets.all_orders(0)


def test_d1_anchor_distributions():
    t = gen_d1(D1_ANCHOR_SCORES)
    assert t.kind == "d1"
    assert np.abs(t.tasks[(1, 2)] - D1_ANCHOR_12).max() < 1e-15
    assert np.abs(t.tasks[(2, 1)] - D1_ANCHOR_21).max() < 1e-15


def test_d1_anchor_strength():
    assert abs(oe_strength(gen_d1(D1_ANCHOR_SCORES)) - D1_ANCHOR_STRENGTH) < 1e-12


def test_d1_equal_scores_have_no_order_effect():
    pair = gen_d1([0.3, 0.3])
    np.testing.assert_array_equal(pair.tasks[(1, 2)], pair.tasks[(2, 1)])
    assert oe_strength(pair) == 0.0

    t = gen_d1([0.3, 0.3, 0.3])
    reference = t.tasks[(1, 2, 3)]
    for order in t.orders():
        # position vectors are gathers of one shared question-indexed vector,
        # so they can disagree by float product-grouping ulps only
        np.testing.assert_allclose(t.tasks[order], reference, atol=1e-15)
    assert oe_strength(t) == 0.0


def test_d1_single_question_is_bernoulli():
    t = gen_d1([0.3])
    np.testing.assert_allclose(t.tasks[(1,)], [0.3, 0.7], atol=1e-15)


def test_d1_chaining_modes_differ_beyond_two_questions():
    scores = [0.1, 0.2, 0.9]
    updated = gen_d1(scores, chaining="updated").tasks[(1, 2, 3)]
    raw = gen_d1(scores, chaining="raw").tasks[(1, 2, 3)]
    # slot 3: updated averages the carried 0.15, raw averages the raw 0.2
    assert np.abs(updated - raw).max() > 1e-3
    with pytest.raises(ValueError):
        gen_d1(scores, chaining="direct")


def test_d1_strength_grows_with_score_gap():
    strengths = [oe_strength(gen_d1([0.1, s2]))
                 for s2 in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert strengths[0] == 0.0
    assert all(b > a for a, b in zip(strengths, strengths[1:]))


def test_d1_rejects_bad_scores():
    with pytest.raises(ValueError):
        gen_d1([])
    with pytest.raises(ValueError):
        gen_d1([0.5, 1.2])
    with pytest.raises(ValueError):
        gen_d1([-0.1])


def test_d1_distributions_normalized():
    rng = np.random.default_rng(101)
    t = gen_d1(datasets.random_scores(4, rng))
    for order in t.orders():
        assert abs(t.tasks[order].sum() - 1.0) < 1e-12
        assert t.tasks[order].min() >= 0.0


def test_d2_specific_before_general_boosts():
    cfg = D2Config(n=2, ranks=(1, 2), baseline_yes_probs=(0.5, 0.5),
                   boost_percent=40.0)
    t = gen_d2(cfg)
    # asking the specific question first boosts the general one to 0.7
    np.testing.assert_allclose(t.tasks[(2, 1)], [0.35, 0.15, 0.35, 0.15],
                               atol=1e-15)
    # general first leaves both at baseline
    np.testing.assert_allclose(t.tasks[(1, 2)], [0.25, 0.25, 0.25, 0.25],
                               atol=1e-15)


def test_d2_boost_caps_at_one():
    cfg = D2Config(n=2, ranks=(1, 2), baseline_yes_probs=(0.9, 0.5),
                   boost_percent=50.0)
    t = gen_d2(cfg)
    # 0.9 * 1.5 clamps to 1.0 when question 1 follows question 2
    np.testing.assert_allclose(t.tasks[(2, 1)], [0.5, 0.0, 0.5, 0.0],
                               atol=1e-15)


def test_d2_zero_boost_has_no_order_effect():
    rng = np.random.default_rng(103)
    t = gen_d2(datasets.random_d2_config(3, 0.0, rng))
    assert oe_strength(t) == 0.0


def test_d2_strength_strictly_increases_with_boost():
    base = datasets.random_d2_config(3, 0.0, np.random.default_rng(107))
    strengths = []
    for x in range(0, 100, 10):
        cfg = D2Config(base.n, base.ranks, base.baseline_yes_probs, float(x))
        strengths.append(oe_strength(gen_d2(cfg)))
    assert strengths[0] == 0.0
    assert all(b > a for a, b in zip(strengths, strengths[1:]))


def test_d2_config_validation():
    with pytest.raises(ValueError):
        D2Config(2, (1, 1), (0.5, 0.5), 10.0)
    with pytest.raises(ValueError):
        D2Config(2, (1, 2), (0.5, 1.5), 10.0)
    with pytest.raises(ValueError):
        D2Config(2, (1, 2), (0.5, 0.5), -1.0)


def test_strength_invariant_under_question_relabeling():
    a = oe_strength(gen_d1([0.2, 0.7, 0.4]))
    b = oe_strength(gen_d1([0.4, 0.2, 0.7]))
    assert abs(a - b) < 1e-12

    rng = np.random.default_rng(109)
    cfg = datasets.random_d2_config(3, 30.0, rng)
    swap = {1: 2, 2: 3, 3: 1}
    ranks = [0] * 3
    probs = [0.0] * 3
    for q in (1, 2, 3):
        ranks[swap[q] - 1] = cfg.ranks[q - 1]
        probs[swap[q] - 1] = cfg.baseline_yes_probs[q - 1]
    relabeled = D2Config(3, tuple(ranks), tuple(probs), cfg.boost_percent)
    assert abs(oe_strength(gen_d2(cfg)) - oe_strength(gen_d2(relabeled))) < 1e-12


def test_taskset_round_trip(tmp_path):
    t = gen_d1([0.1, 0.2, 0.35], seed=42)
    path = tmp_path / "tasks.json"
    t.save(path)
    back = TaskSet.load(path)
    assert back.n == 3
    assert back.kind == "d1"
    assert back.seed == 42
    assert back.indexing == t.indexing
    assert back.params == {"scores": [0.1, 0.2, 0.35], "chaining": "updated"}
    for order in t.orders():
        np.testing.assert_array_equal(back.tasks[order], t.tasks[order])


def test_taskset_file_format(tmp_path):
    path = tmp_path / "tasks.json"
    gen_d1([0.1, 0.2], seed=7).save(path)
    import json

    doc = json.loads(path.read_text())
    assert set(doc) == {"n", "kind", "params", "seed", "indexing", "tasks"}
    assert set(doc["tasks"]) == {"1,2", "2,1"}
    assert len(doc["tasks"]["1,2"]) == 4


def test_taskset_validation():
    good = gen_d1([0.1, 0.2])
    with pytest.raises(ValueError):
        TaskSet(2, "d1", {}, None, {(1, 2): good.tasks[(1, 2)]})
    bad = dict(good.tasks)
    bad[(1, 2)] = np.array([0.5, 0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        TaskSet(2, "d1", {}, None, bad)
    short = dict(good.tasks)
    short[(1, 2)] = np.array([1.0])
    with pytest.raises(ValueError):
        TaskSet(2, "d1", {}, None, short)


def test_single_question_strength_is_zero():
    assert oe_strength(gen_d1([0.4])) == 0.0


def test_random_generators_shapes():
    rng = np.random.default_rng(113)
    s = datasets.random_scores(5, rng)
    assert s.shape == (5,)
    assert s.min() >= 0.0 and s.max() < 1.0
    cfg = datasets.random_d2_config(4, 20.0, rng)
    assert cfg.ranks == (1, 2, 3, 4)
    assert len(cfg.baseline_yes_probs) == 4
