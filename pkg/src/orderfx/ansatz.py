"""Circuit ansatz for the trainable two-outcome observables.

Each of the N observables owns one parameter row of length 4n - 1 for n
qubits, laid out as ``[x1_1, z_1, x2_1, ..., x1_n, z_n, x2_n, xx_12, ...,
xx_(n-1)n]``: three single-qubit rotation angles per qubit followed by the
n - 1 nearest-neighbor coupler angles. The circuit for one observable
applies RX(x1), RZ(z), RX(x2) on every qubit (first listed acts first) and
then the XX couplers on pairs (1,2), (2,3), ... in ascending order.

All gates have the form exp(-i theta G / 2) with G squaring to the
identity, which is what makes the parameter-shift gradient rule exact in
``training``. The measured observable is V D V^dagger where D is the fixed
diagonal Z on qubit 1 (eigenvalue +1 = Yes on the first half of the
amplitude index, -1 = No on the second half).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .linalg import trace_norm


@dataclass(frozen=True)
class AnsatzConfig:
    """Model shape: N observables on n_qubits qubits (default n_qubits = N)."""

    n_observables: int
    n_qubits: int | None = None

    def __post_init__(self):
        if self.n_qubits is None:
            object.__setattr__(self, "n_qubits", self.n_observables)
        if self.n_observables < 1:
            raise ValueError("n_observables must be >= 1")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")

    @property
    def params_per_observable(self) -> int:
        return 4 * self.n_qubits - 1

    @property
    def n_params(self) -> int:
        return self.n_observables * self.params_per_observable

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


def rx(theta: float) -> np.ndarray:
    """exp(-i theta X / 2)"""
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    """exp(-i theta Z / 2)"""
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]], dtype=np.complex128)


def xx(theta: float) -> np.ndarray:
    """exp(-i theta (X kron X) / 2)"""
    c = np.cos(0.5 * theta)
    ms = -1j * np.sin(0.5 * theta)
    return np.array(
        [
            [c, 0.0, 0.0, ms],
            [0.0, c, ms, 0.0],
            [0.0, ms, c, 0.0],
            [ms, 0.0, 0.0, c],
        ],
        dtype=np.complex128,
    )


def diagonal_observable(n_qubits: int) -> np.ndarray:
    """Z on qubit 1 tensored with identity: diag(+1 x half, -1 x half)."""
    dim = 1 << n_qubits
    d = np.ones(dim, dtype=np.complex128)
    d[dim >> 1:] = -1.0
    return np.diag(d)


def check_observable_params(cfg: AnsatzConfig, p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64).ravel()
    if arr.size != cfg.params_per_observable:
        raise ValueError(
            f"observable parameters must have length {cfg.params_per_observable},"
            f" got {arr.size}"
        )
    return arr


def check_model_params(cfg: AnsatzConfig, m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    expected = (cfg.n_observables, cfg.params_per_observable)
    if arr.shape != expected:
        raise ValueError(f"model parameters must have shape {expected}, got {arr.shape}")
    return arr


def random_observable_params(cfg: AnsatzConfig, rng: np.random.Generator) -> np.ndarray:
    """One parameter row with all angles uniform on [-pi, pi)."""
    return rng.uniform(-np.pi, np.pi, cfg.params_per_observable)


def _embed(gate: np.ndarray, first_qubit: int, n_qubits: int) -> np.ndarray:
    """kron(I, gate, I) with the gate's first qubit at `first_qubit` (1-based)."""
    gate_qubits = gate.shape[0].bit_length() - 1
    left = 1 << (first_qubit - 1)
    right = 1 << (n_qubits - first_qubit - gate_qubits + 1)
    return np.kron(np.kron(np.eye(left), gate), np.eye(right))


def build_unitary(cfg: AnsatzConfig, p) -> np.ndarray:
    """Dense circuit unitary for one observable's parameter row."""
    th = check_observable_params(cfg, p)
    n = cfg.n_qubits
    u = np.eye(cfg.dim, dtype=np.complex128)
    for q in range(n):
        g = rx(th[3 * q + 2]) @ rz(th[3 * q + 1]) @ rx(th[3 * q])
        u = _embed(g, q + 1, n) @ u
    for q in range(n - 1):
        u = _embed(xx(th[3 * n + q]), q + 1, n) @ u
    return u


def observable_matrix(cfg: AnsatzConfig, p) -> np.ndarray:
    """Q = V D V^dagger: Hermitian, squares to the identity."""
    v = build_unitary(cfg, p)
    return v @ diagonal_observable(cfg.n_qubits) @ v.conj().T


def noncommutativity_score(cfg: AnsatzConfig, m) -> float:
    """Sum of commutator trace norms over unordered observable pairs.

    Zero exactly when all observables commute; grows with the amount of
    non-commutativity the model has learned.
    """
    params = check_model_params(cfg, m)
    mats = [observable_matrix(cfg, params[i]) for i in range(cfg.n_observables)]
    total = 0.0
    for a, b in combinations(range(cfg.n_observables), 2):
        total += trace_norm(mats[a] @ mats[b] - mats[b] @ mats[a])
    return total
