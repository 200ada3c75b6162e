"""Command line entry point.

Subcommands: ``gen-data`` (write a task-set file), ``sweep-oe`` (final
non-commutativity vs dataset order-effect strength), ``generalize``
(held-out-order test loss vs number of training orders), ``train`` (one
fixed dataset and split), and ``validate`` (cross-check suites).

Shared flags on every subcommand: ``--seed`` (base seed; trial i runs at
seed+i), ``--jobs`` (worker processes), ``--out-dir``, and ``--config``
(JSON document with :class:`orderfx.experiments.ExperimentConfig` fields;
explicit flags override file values).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .datasets import D2Config, gen_d1, gen_d2, oe_strength, random_d2_config
from .experiments import (
    ExperimentConfig,
    run_generalize,
    run_single_train,
    run_sweep_oe,
)
from .training import FD, IDENTICAL_RANDOM, INDEPENDENT_RANDOM, PARAM_SHIFT
from .validate import run_all


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part)


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part)


def _parse_orders(text: str) -> tuple[tuple[int, ...], ...]:
    return tuple(
        tuple(int(q) for q in group.split(","))
        for group in text.split(";") if group
    )


def _load_config_file(path: str | None) -> dict | None:
    if path is None:
        return None
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return doc


def _experiment_config(args, **command_defaults) -> ExperimentConfig:
    cli = {
        "n_observables": args.n,
        "n_qubits": args.qubits,
        "trials": args.trials,
        "epochs": args.epochs,
        "learning_rate": args.lr,
        "grad_method": args.grad_method,
        "init_mode": getattr(args, "init_mode", None),
        "base_seed": args.seed,
        "jobs": args.jobs,
        "out_dir": args.out_dir,
    }
    for extra in ("dataset", "chaining", "dataset_seed", "scores",
                  "boost_percent", "sweep_points", "selection",
                  "train_orders", "test_orders", "test_count", "n_shots"):
        if hasattr(args, extra):
            cli[extra] = getattr(args, extra)
    return ExperimentConfig.from_sources(
        command_defaults, _load_config_file(args.config), cli)


def cmd_gen_data(args) -> int:
    seed = 0 if args.seed is None else args.seed
    if args.dataset == "d1":
        if args.scores is None:
            raise ValueError("d1 needs --scores (comma separated, in [0, 1])")
        taskset = gen_d1(args.scores, args.chaining, seed=None)
    else:
        if args.boost_percent is None:
            raise ValueError("d2 needs --boost")
        if args.baselines is not None:
            n = args.n or len(args.baselines)
            ranks = args.ranks or tuple(range(1, n + 1))
            cfg = D2Config(n=n, ranks=ranks,
                           baseline_yes_probs=args.baselines,
                           boost_percent=args.boost_percent)
            taskset = gen_d2(cfg, seed=None)
        else:
            if args.n is None:
                raise ValueError("d2 needs --n or explicit --baselines")
            cfg = random_d2_config(args.n, args.boost_percent,
                                   np.random.default_rng(seed))
            taskset = gen_d2(cfg, seed=seed)
    taskset.save(args.out)
    strength = oe_strength(taskset)
    print(f"wrote {args.out}: {len(taskset.tasks)} tasks, "
          f"order-effect strength {strength!r}")
    return 0


def cmd_sweep_oe(args) -> int:
    ec = _experiment_config(args, out_dir="runs/sweep-oe")
    summary = run_sweep_oe(ec)
    for doc in summary["points"]:
        print(f"point {doc['point']:g}: oe strength {doc['oe_strength']:.6g}, "
              f"final zeta mean {doc['final_zeta_mean']:.6g}, "
              f"final train loss mean {doc['final_train_loss_mean']:.6g}")
    print(f"artifacts in {ec.out_dir}")
    return 0


def cmd_generalize(args) -> int:
    overrides: dict = {"out_dir": "runs/generalize"}
    if args.train_counts is not None:
        overrides["sweep_points"] = tuple(float(c) for c in args.train_counts)
        overrides["selection"] = "count"
    elif args.train_percents is not None:
        overrides["sweep_points"] = args.train_percents
        overrides["selection"] = "percent"
    ec = _experiment_config(args, **overrides)
    summary = run_generalize(ec)
    for doc in summary["points"]:
        print(f"point {doc['point']:g} ({doc['train_count']} train / "
              f"{doc['test_count']} test orders): "
              f"gen diff mean {doc['generalization_difference_mean']:.6g}, "
              f"final test loss mean {doc['final_test_loss_mean']:.6g}")
    print(f"artifacts in {ec.out_dir}")
    return 0


def cmd_train(args) -> int:
    ec = _experiment_config(args, out_dir="runs/train", trials=1)
    summary = run_single_train(ec)
    for doc in summary["trials"]:
        line = (f"trial {doc['trial']} (seed {doc['seed']}): "
                f"final train loss {doc['final_train_loss']:.6g}, "
                f"final zeta {doc['final_zeta']:.6g}")
        if doc["generalization_difference"] is not None:
            line += (f", final test loss {doc['final_test_loss']:.6g}, "
                     f"gen diff {doc['generalization_difference']:.6g}")
        print(line)
    print(f"artifacts in {ec.out_dir}")
    return 0


def cmd_validate(args) -> int:
    results = run_all(seed=0 if args.seed is None else args.seed)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'} "
              f"{result.name}: {result.detail}")
    failures = [r for r in results if not r.passed]
    if failures:
        print(f"{len(failures)} validation suite(s) failed", file=sys.stderr)
        return 1
    print("all validation suites passed")
    return 0


def _add_shared_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None,
                     help="base seed; trial i uses seed+i (default 0)")
    sub.add_argument("--jobs", type=int, default=None,
                     help="worker processes for trials (default 1)")
    sub.add_argument("--out-dir", default=None, help="artifact directory")
    sub.add_argument("--config", default=None,
                     help="JSON config file; explicit flags override it")


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", type=int, default=None,
                     help="number of questions/observables")
    sub.add_argument("--qubits", type=int, default=None,
                     help="qubit count (default: one per question)")
    sub.add_argument("--trials", type=int, default=None)
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--lr", type=float, default=None, help="Adam step size")
    sub.add_argument("--grad-method", choices=(PARAM_SHIFT, FD), default=None)
    sub.add_argument("--init-mode",
                     choices=(IDENTICAL_RANDOM, INDEPENDENT_RANDOM),
                     default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orderfx",
        description="Sequential-measurement order-effect models: data "
                    "generation, training experiments, and validation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser(
        "gen-data", help="write a task-set JSON file and report its "
                         "order-effect strength")
    gen.add_argument("--dataset", choices=("d1", "d2"), required=True)
    gen.add_argument("--scores", type=_parse_floats, default=None,
                     help="d1 likeability scores, e.g. 0.1,0.2")
    gen.add_argument("--chaining", choices=("updated", "raw"),
                     default="updated")
    gen.add_argument("--n", type=int, default=None, help="d2 question count")
    gen.add_argument("--boost", dest="boost_percent", type=float,
                     default=None, help="d2 boost percent")
    gen.add_argument("--baselines", type=_parse_floats, default=None,
                     help="explicit d2 baseline Yes probabilities")
    gen.add_argument("--ranks", type=_parse_ints, default=None,
                     help="explicit d2 specificity ranks (1 = most general)")
    gen.add_argument("--out", required=True, help="output file path")
    _add_shared_flags(gen)
    gen.set_defaults(handler=cmd_gen_data)

    sweep = commands.add_parser(
        "sweep-oe", help="sweep dataset order-effect strength; train on all "
                         "orders; track the final non-commutativity score")
    sweep.add_argument("--dataset", choices=("d1", "d2"), default=None)
    sweep.add_argument("--points", dest="sweep_points", type=_parse_floats,
                       default=None,
                       help="sweep values: d1 last-question scores or d2 "
                            "boost percents")
    sweep.add_argument("--chaining", choices=("updated", "raw"), default=None)
    sweep.add_argument("--dataset-seed", dest="dataset_seed", type=int,
                       default=None, help="seed for d2 baseline draws")
    _add_run_flags(sweep)
    _add_shared_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep_oe)

    gen_run = commands.add_parser(
        "generalize", help="train on a subset of orders, test on held-out "
                           "orders, sweep the subset size")
    pick = gen_run.add_mutually_exclusive_group()
    pick.add_argument("--train-counts", type=_parse_ints, default=None,
                      help="train-order counts to sweep, e.g. 1,2,3,4,5")
    pick.add_argument("--train-percents", type=_parse_floats, default=None,
                      help="train-order percentages to sweep, e.g. "
                           "16.6,33.3,50")
    gen_run.add_argument("--test-count", type=int, default=None,
                         help="held-out orders per trial (capped at the "
                              "remaining orders)")
    gen_run.add_argument("--chaining", choices=("updated", "raw"),
                         default=None)
    _add_run_flags(gen_run)
    _add_shared_flags(gen_run)
    gen_run.set_defaults(handler=cmd_generalize)

    train = commands.add_parser(
        "train", help="train on one fixed dataset and order split")
    train.add_argument("--dataset", choices=("d1", "d2"), default=None)
    train.add_argument("--scores", type=_parse_floats, default=None,
                       help="d1 likeability scores (one per question)")
    train.add_argument("--boost", dest="boost_percent", type=float,
                       default=None, help="d2 boost percent")
    train.add_argument("--chaining", choices=("updated", "raw"), default=None)
    train.add_argument("--dataset-seed", dest="dataset_seed", type=int,
                       default=None)
    train.add_argument("--train-orders", type=_parse_orders, default=None,
                       help="semicolon-separated orders, e.g. '1,2;2,1' "
                            "(default: all orders)")
    train.add_argument("--test-orders", type=_parse_orders, default=None)
    train.add_argument("--shots", dest="n_shots", type=int, default=None,
                       help="log sampled losses with this many shots "
                            "instead of exact ones")
    _add_run_flags(train)
    _add_shared_flags(train)
    train.set_defaults(handler=cmd_train)

    check = commands.add_parser(
        "validate", help="run the cross-check suites and report PASS/FAIL")
    _add_shared_flags(check)
    check.set_defaults(handler=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
