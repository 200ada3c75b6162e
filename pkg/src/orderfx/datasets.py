"""Synthetic order-effect datasets and the order-effect strength metric.

Two generators produce one target distribution per question order, both as
products of per-slot Bernoulli answers (POSITION-indexed, Yes = bit 0):

* ``gen_d1`` (evenhandedness): each question has a likeability score in
  [0, 1]; asking a question pulls the running score toward that question's
  score by averaging, so later answers are more even. The Yes probability
  at slot k is the running score after the pull.
* ``gen_d2`` (specificity priming): questions carry a general-to-specific
  rank; a question answered after any strictly more specific question gets
  its baseline Yes probability boosted by x percent (once, clamped at 1).

``oe_strength`` measures how much the distributions of a task set disagree
across orders: the mean, over unordered order pairs, of the summed squared
differences between their QUESTION-indexed vectors. Relabeling alone never
counts because the comparison happens in question indexing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations, permutations
from pathlib import Path

import numpy as np

from .measurement import POSITION, check_order, index_permutation

_SUM_TOL = 1e-10


def all_orders(n: int) -> list[tuple[int, ...]]:
    """All n! question orders, in lexicographic permutation order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return list(permutations(range(1, n + 1)))


@dataclass
class TaskSet:
    """Target distribution for every order, plus generation provenance."""

    n: int
    kind: str
    params: dict
    seed: int | None
    tasks: dict[tuple[int, ...], np.ndarray]
    indexing: str = POSITION

    def __post_init__(self):
        expected = all_orders(self.n)
        if sorted(self.tasks.keys()) != expected:
            raise ValueError(f"tasks must cover exactly the {len(expected)} orders of n={self.n}")
        clean = {}
        for order in expected:
            p = np.asarray(self.tasks[order], dtype=np.float64)
            if p.shape != (1 << self.n,):
                raise ValueError(f"distribution for {order} has shape {p.shape}")
            if abs(float(p.sum()) - 1.0) > _SUM_TOL or float(p.min()) < 0.0:
                raise ValueError(f"distribution for {order} is not normalized")
            clean[order] = p
        self.tasks = clean

    def orders(self) -> list[tuple[int, ...]]:
        return all_orders(self.n)

    def save(self, path) -> None:
        doc = {
            "n": self.n,
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "indexing": self.indexing,
            "tasks": {
                ",".join(str(q) for q in order): [float(x) for x in probs]
                for order, probs in self.tasks.items()
            },
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "TaskSet":
        doc = json.loads(Path(path).read_text())
        tasks = {
            tuple(int(q) for q in key.split(",")): np.asarray(probs, dtype=np.float64)
            for key, probs in doc["tasks"].items()
        }
        return cls(
            n=int(doc["n"]),
            kind=doc["kind"],
            params=doc["params"],
            seed=doc["seed"],
            tasks=tasks,
            indexing=doc.get("indexing", POSITION),
        )


def _bernoulli_product(slot_yes_probs) -> np.ndarray:
    """Joint over answer strings from independent per-slot Yes probabilities."""
    v = np.array([1.0])
    for s in slot_yes_probs:
        v = np.outer(v, [s, 1.0 - s]).ravel()
    return v


def _position_tasks(order, per_question_yes) -> np.ndarray:
    """POSITION-indexed joint for one order, multiplied in question order.

    Multiplying in a fixed (question id) order makes orders that share the
    same per-question probabilities produce bit-identical vectors, so a
    task set with no order effect measures strength exactly 0.0 instead of
    picking up association-order rounding noise.
    """
    return _bernoulli_product(per_question_yes)[index_permutation(order)]


def gen_d1(scores, chaining: str = "updated", seed: int | None = None) -> TaskSet:
    """Evenhandedness task set from likeability scores.

    For order (o_1, ..., o_N) the running score starts at S[o_1] and each
    later slot k averages it with S[o_k]; the slot's Yes probability is the
    running score. ``chaining="updated"`` carries the averaged score
    forward (the default reading); ``chaining="raw"`` averages the raw
    scores of adjacent slots instead, kept only for sensitivity checks.
    """
    if chaining not in ("updated", "raw"):
        raise ValueError(f"unknown chaining mode {chaining!r}")
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size < 1 or float(s.min()) < 0.0 or float(s.max()) > 1.0:
        raise ValueError("scores must be a non-empty vector with entries in [0, 1]")
    n = s.size
    tasks = {}
    for order in all_orders(n):
        eff = np.empty(n)
        eff[0] = s[order[0] - 1]
        for k in range(1, n):
            prev = eff[k - 1] if chaining == "updated" else s[order[k - 1] - 1]
            eff[k] = 0.5 * (prev + s[order[k] - 1])
        per_question = np.empty(n)
        per_question[[q - 1 for q in order]] = eff
        tasks[order] = _position_tasks(order, per_question)
    params = {"scores": [float(x) for x in s], "chaining": chaining}
    return TaskSet(n=n, kind="d1", params=params, seed=seed, tasks=tasks)


@dataclass(frozen=True)
class D2Config:
    """Specificity-priming setup.

    ``ranks[i]`` is the specificity rank of question i+1: rank 1 is the
    most general question, rank n the most specific.
    """

    n: int
    ranks: tuple[int, ...]
    baseline_yes_probs: tuple[float, ...]
    boost_percent: float

    def __post_init__(self):
        check_order(self.ranks, self.n)
        probs = np.asarray(self.baseline_yes_probs, dtype=np.float64)
        if probs.shape != (self.n,) or probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("baseline_yes_probs must be n values in [0, 1]")
        if self.boost_percent < 0.0:
            raise ValueError("boost_percent must be >= 0")


def gen_d2(cfg: D2Config, seed: int | None = None) -> TaskSet:
    """Specificity-priming task set.

    A question preceded by at least one strictly more specific question
    (higher rank) gets its Yes probability boosted to
    min(1, p * (1 + x/100)), applied at most once; otherwise the baseline
    applies.
    """
    factor = 1.0 + cfg.boost_percent / 100.0
    tasks = {}
    for order in all_orders(cfg.n):
        per_question = np.empty(cfg.n)
        max_rank_seen = 0
        for q in order:
            p = cfg.baseline_yes_probs[q - 1]
            if max_rank_seen > cfg.ranks[q - 1]:
                p = min(1.0, p * factor)
            per_question[q - 1] = p
            max_rank_seen = max(max_rank_seen, cfg.ranks[q - 1])
        tasks[order] = _position_tasks(order, per_question)
    params = {
        "ranks": list(cfg.ranks),
        "baseline_yes_probs": [float(p) for p in cfg.baseline_yes_probs],
        "boost_percent": float(cfg.boost_percent),
    }
    return TaskSet(n=cfg.n, kind="d2", params=params, seed=seed, tasks=tasks)


def random_scores(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 1.0, n)


def random_d2_config(n: int, boost_percent: float,
                     rng: np.random.Generator) -> D2Config:
    """Identity ranks (question i has rank i) with uniform random baselines."""
    return D2Config(
        n=n,
        ranks=tuple(range(1, n + 1)),
        baseline_yes_probs=tuple(rng.uniform(0.0, 1.0, n)),
        boost_percent=boost_percent,
    )


def oe_strength(t: TaskSet) -> float:
    """Mean squared distribution distance across all unordered order pairs."""
    orders = t.orders()
    canonical = {}
    for order in orders:
        perm = index_permutation(order)
        c = np.empty_like(t.tasks[order])
        c[perm] = t.tasks[order]
        canonical[order] = c
    pairs = list(combinations(orders, 2))
    if not pairs:
        return 0.0
    total = 0.0
    for a, b in pairs:
        diff = canonical[a] - canonical[b]
        total += float(diff @ diff)
    return total / len(pairs)
