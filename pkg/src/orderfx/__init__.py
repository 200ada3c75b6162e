"""Quantum generative model of question-order effects.

A survey of N yes/no questions is modeled by N trainable two-outcome
observables measured in sequence on a fixed initial state; the question
order selects which observable occupies each measurement slot, so each of
the N! orders is one generation task. The package provides the dense
linear algebra core, the circuit ansatz and its non-commutativity score,
the exact sequential-measurement engine, two synthetic order-effect
dataset generators, the multi-task training loop, and a CLI experiment
runner.
"""

__version__ = "0.1.0"

from .ansatz import (
    AnsatzConfig,
    build_unitary,
    noncommutativity_score,
    observable_matrix,
)
from .datasets import D2Config, TaskSet, gen_d1, gen_d2, oe_strength
from .measurement import (
    AnswerDistribution,
    canonicalize,
    dephasing_distribution,
    joint_distribution,
    sample,
)
from .training import (
    TaskSplit,
    TrainConfig,
    TrainingTrace,
    generalization_difference,
    gradient,
    lms_loss,
    train_run,
)

__all__ = [
    "AnsatzConfig",
    "AnswerDistribution",
    "D2Config",
    "TaskSet",
    "TaskSplit",
    "TrainConfig",
    "TrainingTrace",
    "build_unitary",
    "canonicalize",
    "dephasing_distribution",
    "gen_d1",
    "gen_d2",
    "generalization_difference",
    "gradient",
    "joint_distribution",
    "lms_loss",
    "noncommutativity_score",
    "observable_matrix",
    "oe_strength",
    "sample",
    "train_run",
]
