"""Experiment drivers: multi-trial runs, sweeps, and artifact emission.

Every run writes three files into its output directory:

* ``trace.csv``: one row per (sweep_point, trial, epoch) with the logged
  train loss (summed over train orders), test loss (averaged per
  held-out order), and non-commutativity score. Epoch 0 is the
  pre-training evaluation; runs without a test set log test_loss 0.0.
* ``summary.json``: per-point aggregates (and per-trial summaries where
  the run has a notion of trial outcome), ``schema_version`` tagged.
* ``manifest.json``: the fully resolved configuration, tool version,
  backend, and every derived seed, so a run can be reproduced from its
  artifacts alone. No timestamps; reruns must be byte-identical.

Trial i always uses seed ``base_seed + i`` and owns a private Generator;
trials never share mutable state, so they can run in worker processes
(``jobs > 1``) without changing a single row. All files are written by
the parent process after every trial has finished.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .ansatz import AnsatzConfig
from .datasets import (
    TaskSet,
    all_orders,
    gen_d1,
    gen_d2,
    oe_strength,
    random_d2_config,
    random_scores,
)
from .measurement import check_order
from .training import (
    FD,
    IDENTICAL_RANDOM,
    INDEPENDENT_RANDOM,
    PARAM_SHIFT,
    TaskSplit,
    TrainConfig,
    train_run,
)

SCHEMA_VERSION = 1
TRACE_HEADER = "sweep_point,trial,epoch,train_loss,test_loss,zeta"

D1_BASE_SCORE = 0.1
D1_SWEEP_POINTS = (0.1, 0.2, 0.3, 0.4, 0.5)
D2_SWEEP_POINTS = tuple(float(x) for x in range(0, 100, 10))

SELECT_COUNT = "count"
SELECT_PERCENT = "percent"


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one run; see module docstring for file outputs.

    ``sweep_points`` are likeability scores (d1 sweeps), boost percents
    (d2 sweeps), or train-order counts/percents (generalization runs,
    per ``selection``). ``dataset_seed`` feeds dataset draws that must
    stay fixed across trials (d2 baselines); it defaults to ``base_seed``.
    """

    n_observables: int = 2
    n_qubits: int | None = None
    dataset: str = "d1"
    scores: tuple[float, ...] | None = None
    chaining: str = "updated"
    boost_percent: float | None = None
    dataset_seed: int | None = None
    sweep_points: tuple[float, ...] | None = None
    selection: str = SELECT_COUNT
    trials: int = 15
    epochs: int = 150
    learning_rate: float = 0.1
    grad_method: str = PARAM_SHIFT
    init_mode: str = IDENTICAL_RANDOM
    train_orders: tuple[tuple[int, ...], ...] | None = None
    test_orders: tuple[tuple[int, ...], ...] | None = None
    test_count: int = 10
    n_shots: int | None = None
    base_seed: int = 0
    jobs: int = 1
    out_dir: str = "runs"

    def __post_init__(self):
        if self.dataset not in ("d1", "d2"):
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.selection not in (SELECT_COUNT, SELECT_PERCENT):
            raise ValueError(f"unknown selection mode {self.selection!r}")
        if self.grad_method not in (PARAM_SHIFT, FD):
            raise ValueError(f"unknown grad method {self.grad_method!r}")
        if self.init_mode not in (IDENTICAL_RANDOM, INDEPENDENT_RANDOM):
            raise ValueError(f"unknown init mode {self.init_mode!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.test_count < 1:
            raise ValueError("test_count must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.scores is not None:
            object.__setattr__(
                self, "scores", tuple(float(s) for s in self.scores))
        if self.sweep_points is not None:
            pts = tuple(float(p) for p in self.sweep_points)
            if not pts:
                raise ValueError("sweep_points must be non-empty when given")
            object.__setattr__(self, "sweep_points", pts)
        for attr in ("train_orders", "test_orders"):
            value = getattr(self, attr)
            if value is not None:
                object.__setattr__(
                    self, attr,
                    tuple(tuple(int(q) for q in order) for order in value))

    @classmethod
    def from_sources(cls, *layers: dict | None) -> "ExperimentConfig":
        """Merge setting layers left to right (later layers win, None skips).

        Callers pass (command defaults, config-file document, CLI flags).
        Unknown keys are rejected so a typo in a config file fails loudly
        instead of silently running with defaults.
        """
        known = {f.name for f in fields(cls)}
        merged: dict = {}
        for layer in layers:
            if not layer:
                continue
            unknown = set(layer) - known
            if unknown:
                raise ValueError(
                    f"unknown config keys: {', '.join(sorted(unknown))}")
            for key, value in layer.items():
                if value is not None:
                    merged[key] = value
        return cls(**merged)


def trial_seeds(ec: ExperimentConfig) -> list[int]:
    return [ec.base_seed + i for i in range(ec.trials)]


def percent_to_count(percent: float, total: int) -> int:
    """Round a percentage of ``total`` to the nearest count, minimum 1."""
    if not 0.0 < percent <= 100.0:
        raise ValueError(f"percent must be in (0, 100], got {percent}")
    return max(1, int(math.floor(percent / 100.0 * total + 0.5)))


def _ansatz(ec: ExperimentConfig) -> AnsatzConfig:
    return AnsatzConfig(n_observables=ec.n_observables, n_qubits=ec.n_qubits)


def _trial_train_config(ec: ExperimentConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate=ec.learning_rate,
        epochs=ec.epochs,
        grad_method=ec.grad_method,
        init_mode=ec.init_mode,
        seed=seed,
        n_shots=ec.n_shots,
    )


def _dataset_seed(ec: ExperimentConfig) -> int:
    return ec.base_seed if ec.dataset_seed is None else ec.dataset_seed


# ---------------------------------------------------------------------------
# Trial workers (module level so worker processes can import them)
# ---------------------------------------------------------------------------

def _train_trial_job(job):
    acfg, tc, taskset, split = job
    trace = train_run(acfg, tc, taskset, split)
    return trace.train_loss, trace.test_loss, trace.zeta


def _generalize_trial_job(job):
    ec, count, seed = job
    acfg = _ansatz(ec)
    rng = np.random.default_rng(seed)
    # Fixed draw order per trial: scores, train orders, test orders, init.
    taskset = gen_d1(random_scores(ec.n_observables, rng), ec.chaining)
    orders = all_orders(ec.n_observables)
    picked = rng.choice(len(orders), size=count, replace=False)
    train = tuple(orders[i] for i in sorted(picked))
    rest = [o for o in orders if o not in set(train)]
    held = rng.choice(len(rest), size=min(ec.test_count, len(rest)),
                      replace=False)
    test = tuple(rest[i] for i in sorted(held))
    tc = _trial_train_config(ec, seed)
    trace = train_run(acfg, tc, taskset, TaskSplit(train, test), rng=rng)
    return trace.train_loss, trace.test_loss, trace.zeta


def _map_jobs(fn, job_args, jobs: int) -> list:
    if jobs <= 1 or len(job_args) <= 1:
        return [fn(job) for job in job_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, job_args))


# ---------------------------------------------------------------------------
# Deterministic formatting and file emission
# ---------------------------------------------------------------------------

def _fmt_point(point: float) -> str:
    value = float(point)
    return str(int(value)) if value.is_integer() else repr(value)


def _fmt(value: float) -> str:
    return repr(float(value))


def _mean(values) -> float:
    return float(np.mean(values))


def _sample_std(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def _trace_rows(point, trial: int, histories) -> list[str]:
    train_hist, test_hist, zeta_hist = histories
    label = _fmt_point(point)
    return [
        f"{label},{trial},{epoch},{_fmt(train_hist[epoch])},"
        f"{_fmt(test_hist[epoch])},{_fmt(zeta_hist[epoch])}"
        for epoch in range(len(train_hist))
    ]


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _emit(ec: ExperimentConfig, command: str, rows: list[str],
          summary: dict, manifest_extra: dict) -> dict:
    out = Path(ec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(
        "\n".join([TRACE_HEADER, *rows]) + "\n")
    summary = {"schema_version": SCHEMA_VERSION, "command": command, **summary}
    _write_json(out / "summary.json", summary)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "orderfx", "version": __version__},
        "command": command,
        "backend": kernels.BACKEND,
        "config": asdict(ec),
        "trial_seeds": trial_seeds(ec),
        **manifest_extra,
    }
    _write_json(out / "manifest.json", manifest)
    return summary


def _trial_summary(trial: int, seed: int, histories, has_test: bool) -> dict:
    train_hist, test_hist, zeta_hist = histories
    return {
        "trial": trial,
        "seed": seed,
        "final_train_loss": float(train_hist[-1]),
        "final_test_loss": float(test_hist[-1]),
        "final_zeta": float(zeta_hist[-1]),
        "generalization_difference":
            float(test_hist[0] - test_hist[-1]) if has_test else None,
    }


# ---------------------------------------------------------------------------
# Run drivers
# ---------------------------------------------------------------------------

def run_sweep_oe(ec: ExperimentConfig) -> dict:
    """Train on all orders at each sweep point; track the final score.

    d1 points sweep the last question's likeability score with every
    other score pinned at ``D1_BASE_SCORE``; d2 points sweep the boost
    percent over baselines drawn once from ``dataset_seed``.
    """
    acfg = _ansatz(ec)
    seeds = trial_seeds(ec)
    if ec.dataset == "d1":
        points = ec.sweep_points or D1_SWEEP_POINTS
        tasksets = [
            gen_d1([D1_BASE_SCORE] * (ec.n_observables - 1) + [point],
                   ec.chaining)
            for point in points
        ]
        dataset_doc = {
            "kind": "d1",
            "base_score": D1_BASE_SCORE,
            "chaining": ec.chaining,
            "points": [float(p) for p in points],
        }
    else:
        points = ec.sweep_points or D2_SWEEP_POINTS
        flat = random_d2_config(ec.n_observables, 0.0,
                                np.random.default_rng(_dataset_seed(ec)))
        tasksets = [
            gen_d2(replace(flat, boost_percent=float(point)))
            for point in points
        ]
        dataset_doc = {
            "kind": "d2",
            "dataset_seed": _dataset_seed(ec),
            "ranks": list(flat.ranks),
            "baseline_yes_probs": [float(p) for p in flat.baseline_yes_probs],
            "points": [float(p) for p in points],
        }

    split = TaskSplit(train_orders=tuple(all_orders(ec.n_observables)),
                      test_orders=())
    job_args = [
        (acfg, _trial_train_config(ec, seed), taskset, split)
        for taskset in tasksets
        for seed in seeds
    ]
    results = _map_jobs(_train_trial_job, job_args, ec.jobs)

    rows: list[str] = []
    point_docs = []
    cursor = 0
    for point, taskset in zip(points, tasksets):
        final_zetas = []
        final_losses = []
        for trial in range(ec.trials):
            histories = results[cursor]
            cursor += 1
            rows.extend(_trace_rows(point, trial, histories))
            final_losses.append(float(histories[0][-1]))
            final_zetas.append(float(histories[2][-1]))
        point_docs.append({
            "point": float(point),
            "oe_strength": float(oe_strength(taskset)),
            "final_zeta_mean": _mean(final_zetas),
            "final_zeta_std": _sample_std(final_zetas),
            "final_train_loss_mean": _mean(final_losses),
            "final_train_loss_std": _sample_std(final_losses),
        })
    return _emit(ec, "sweep-oe", rows, {"points": point_docs},
                 {"dataset": dataset_doc})


def run_generalize(ec: ExperimentConfig) -> dict:
    """Sweep the number of training orders; test on held-out orders.

    Each trial draws fresh likeability scores, a train-order subset of
    the size the sweep point dictates, and up to ``test_count`` disjoint
    test orders, all from the trial's own seed.
    """
    if ec.dataset != "d1":
        raise ValueError("generalization runs draw fresh d1 scores per trial")
    if ec.n_observables < 3:
        raise ValueError("generalization needs at least 3 questions")
    if not ec.sweep_points:
        raise ValueError("generalization needs sweep_points "
                         "(train-order counts or percents)")
    total = len(all_orders(ec.n_observables))
    counts = []
    for point in ec.sweep_points:
        if ec.selection == SELECT_COUNT:
            if not float(point).is_integer():
                raise ValueError(f"count sweep point {point} is not an integer")
            count = int(point)
        else:
            count = percent_to_count(float(point), total)
        if not 1 <= count < total:
            raise ValueError(
                f"train count {count} must leave at least one of the "
                f"{total} orders for testing")
        counts.append(count)

    seeds = trial_seeds(ec)
    job_args = [(ec, count, seed) for count in counts for seed in seeds]
    results = _map_jobs(_generalize_trial_job, job_args, ec.jobs)

    rows: list[str] = []
    point_docs = []
    cursor = 0
    for point, count in zip(ec.sweep_points, counts):
        trial_docs = []
        for trial, seed in enumerate(seeds):
            histories = results[cursor]
            cursor += 1
            rows.extend(_trace_rows(point, trial, histories))
            trial_docs.append(_trial_summary(trial, seed, histories, True))
        diffs = [t["generalization_difference"] for t in trial_docs]
        finals = [t["final_test_loss"] for t in trial_docs]
        point_docs.append({
            "point": float(point),
            "train_count": count,
            "test_count": min(ec.test_count, total - count),
            "trials": trial_docs,
            "generalization_difference_mean": _mean(diffs),
            "generalization_difference_std": _sample_std(diffs),
            "final_test_loss_mean": _mean(finals),
            "final_test_loss_std": _sample_std(finals),
        })
    return _emit(ec, "generalize", rows,
                 {"selection": ec.selection, "points": point_docs},
                 {"dataset": {"kind": "d1", "chaining": ec.chaining,
                              "scores": "per-trial uniform [0, 1)"}})


def run_single_train(ec: ExperimentConfig) -> dict:
    """Train on a fixed dataset and split; one sweep point labeled 0."""
    acfg = _ansatz(ec)
    if ec.dataset == "d1":
        if ec.scores is None:
            raise ValueError("d1 training needs explicit scores")
        if len(ec.scores) != ec.n_observables:
            raise ValueError(
                f"got {len(ec.scores)} scores for {ec.n_observables} questions")
        taskset = gen_d1(ec.scores, ec.chaining)
        dataset_doc = {"kind": "d1", "scores": list(ec.scores),
                       "chaining": ec.chaining}
    else:
        if ec.boost_percent is None:
            raise ValueError("d2 training needs a boost percent")
        d2cfg = random_d2_config(ec.n_observables, float(ec.boost_percent),
                                 np.random.default_rng(_dataset_seed(ec)))
        taskset = gen_d2(d2cfg, seed=_dataset_seed(ec))
        dataset_doc = {
            "kind": "d2",
            "dataset_seed": _dataset_seed(ec),
            "ranks": list(d2cfg.ranks),
            "baseline_yes_probs": [float(p) for p in d2cfg.baseline_yes_probs],
            "boost_percent": float(ec.boost_percent),
        }

    train = ec.train_orders or tuple(all_orders(ec.n_observables))
    test = ec.test_orders or ()
    for order in (*train, *test):
        check_order(order, ec.n_observables)
    split = TaskSplit(train_orders=train, test_orders=test)

    seeds = trial_seeds(ec)
    job_args = [(acfg, _trial_train_config(ec, seed), taskset, split)
                for seed in seeds]
    results = _map_jobs(_train_trial_job, job_args, ec.jobs)

    rows: list[str] = []
    trial_docs = []
    for trial, seed in enumerate(seeds):
        rows.extend(_trace_rows(0, trial, results[trial]))
        trial_docs.append(
            _trial_summary(trial, seed, results[trial], bool(test)))
    summary_doc = {
        "trials": trial_docs,
        "final_train_loss_mean":
            _mean([t["final_train_loss"] for t in trial_docs]),
        "final_zeta_mean": _mean([t["final_zeta"] for t in trial_docs]),
    }
    return _emit(ec, "train", rows, summary_doc, {"dataset": dataset_doc})
