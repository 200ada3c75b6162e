"""Sequential measurement of the ordered observables, exactly.

A question order is a permutation of 1..N choosing which observable's
parameters occupy each measurement slot. The engine starts from |0...0>,
applies the slot's circuit, projects qubit 1 onto |0> (Yes) and |1> (No)
without renormalizing, and repeats for every slot with no uncompute in
between; after N slots the squared norm of each branch is the joint
probability of its answer string.

Answer-string encoding: Yes = +1 eigenvalue = bit 0; slot k's answer is
bit (N - k) of the index (first slot = most significant bit), so index 0
is all-Yes. Distributions carry an ``indexing`` tag: POSITION means bit k
belongs to measurement slot k, QUESTION means bit k was re-routed to
question id k (see :func:`canonicalize`), which makes distributions from
different orders comparable.

``dephasing_distribution`` re-implements the same statistics through
density matrices (apply the slot unitary, replace rho by the projected
mixture, tag the classical outcome) and exists purely as an independent
validation path for :func:`joint_distribution`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .ansatz import AnsatzConfig, build_unitary, check_model_params

POSITION = "position"
QUESTION = "question"

_NEG_PROB_TOL = 1e-12
_SUM_TOL = 1e-10


@dataclass
class AnswerDistribution:
    """Probability vector over the 2^N answer strings of one order."""

    n_questions: int
    probs: np.ndarray
    indexing: str = POSITION

    def __post_init__(self):
        if self.indexing not in (POSITION, QUESTION):
            raise ValueError(f"unknown indexing {self.indexing!r}")
        p = np.asarray(self.probs, dtype=np.float64).copy()
        if p.shape != (1 << self.n_questions,):
            raise ValueError(
                f"expected {1 << self.n_questions} probabilities, got shape {p.shape}"
            )
        low = float(p.min())
        if low < -_NEG_PROB_TOL:
            raise ValueError(f"negative probability {low}")
        np.clip(p, 0.0, None, out=p)
        total = float(p.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.probs = p


def check_order(order, n: int) -> tuple[int, ...]:
    """Validate a permutation of question ids 1..n."""
    o = tuple(int(q) for q in order)
    if sorted(o) != list(range(1, n + 1)):
        raise ValueError(f"{order!r} is not a permutation of 1..{n}")
    return o


def joint_distribution(cfg: AnsatzConfig, m, order) -> AnswerDistribution:
    """Exact POSITION-indexed distribution by branch enumeration."""
    params = check_model_params(cfg, m)
    o = check_order(order, cfg.n_observables)
    slot_thetas = params[[q - 1 for q in o]]
    probs = kernels.joint_probs(slot_thetas, cfg.n_qubits)
    return AnswerDistribution(cfg.n_observables, probs, POSITION)


def dephasing_distribution(cfg: AnsatzConfig, m, order) -> AnswerDistribution:
    """Same statistics via a tagged density-matrix mixture (validation path).

    Each measurement slot conjugates every tagged rho by the slot unitary
    and replaces it with its two projections Pi rho Pi, one per outcome;
    traces of the tagged blocks are the joint probabilities.
    """
    params = check_model_params(cfg, m)
    o = check_order(order, cfg.n_observables)
    dim = cfg.dim
    half = dim >> 1
    rho0 = np.zeros((dim, dim), dtype=np.complex128)
    rho0[0, 0] = 1.0
    tagged = [rho0]
    for q in o:
        u = build_unitary(cfg, params[q - 1])
        ud = u.conj().T
        nxt = []
        for rho in tagged:
            r = u @ rho @ ud
            r_yes = np.zeros_like(r)
            r_yes[:half, :half] = r[:half, :half]
            r_no = np.zeros_like(r)
            r_no[half:, half:] = r[half:, half:]
            nxt.append(r_yes)
            nxt.append(r_no)
        tagged = nxt
    probs = np.array([np.trace(r).real for r in tagged])
    return AnswerDistribution(cfg.n_observables, probs, POSITION)


def sample(cfg: AnsatzConfig, m, order, n_shots: int,
           rng: np.random.Generator) -> np.ndarray:
    """Counts over the 2^N strings from inverse-CDF draws on the exact vector."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    dist = joint_distribution(cfg, m, order)
    cdf = np.cumsum(dist.probs)
    draws = np.searchsorted(cdf, rng.random(n_shots), side="right")
    np.clip(draws, 0, dist.probs.size - 1, out=draws)
    return np.bincount(draws, minlength=dist.probs.size).astype(np.int64)


def index_permutation(order) -> np.ndarray:
    """Map POSITION indices to QUESTION indices for the given order.

    Entry i is the question-indexed address of position-indexed string i:
    the bit measured at slot k is re-routed to the bit of question
    order[k].
    """
    o = check_order(order, len(order))
    n = len(o)
    idx = np.arange(1 << n)
    out = np.zeros_like(idx)
    for k, q in enumerate(o, start=1):
        out |= ((idx >> (n - k)) & 1) << (n - q)
    return out


def canonicalize(d: AnswerDistribution, order) -> AnswerDistribution:
    """Re-route slot bits to question bits (POSITION -> QUESTION indexing)."""
    if d.indexing == QUESTION:
        raise ValueError("distribution is already QUESTION-indexed")
    o = check_order(order, d.n_questions)
    perm = index_permutation(o)
    out = np.empty_like(d.probs)
    out[perm] = d.probs
    return AnswerDistribution(d.n_questions, out, QUESTION)
