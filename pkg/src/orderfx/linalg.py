"""Dense complex linear algebra for the measurement model.

Everything operates on plain numpy arrays: matrices are 2-d complex128
arrays, states are 1-d complex128 arrays of length 2**n_qubits. Qubit 1 is
the most significant bit of the amplitude index, so qubit q (1-based) has
stride 2**(n_qubits - q). Sub-normalized states are legal; their squared
norm carries the weight of the measurement branch they represent.

The Hermitian eigensolver is a cyclic two-sided Jacobi iteration (see
``kernels``); matrices here stay small (<= 32x32 at experiment scale), so
robustness and auditability beat asymptotics.
"""

from __future__ import annotations

import numpy as np

from . import kernels

HERMITICITY_TOL = 1e-10
EIG_CONV_TOL = 1e-12
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10

_JACOBI_MAX_SWEEPS = 100


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    return m


def _require_square(m: np.ndarray) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Complex matrix product with an explicit dimension check."""
    am = _as_matrix(a)
    bm = _as_matrix(b)
    if am.shape[1] != bm.shape[0]:
        raise ValueError(f"dimension mismatch: {am.shape} @ {bm.shape}")
    return am @ bm


def kron(a, b) -> np.ndarray:
    return np.kron(_as_matrix(a), _as_matrix(b))


def dagger(a) -> np.ndarray:
    return _as_matrix(a).conj().T


def is_hermitian(m, tol: float = HERMITICITY_TOL) -> bool:
    mm = _as_matrix(m)
    if mm.shape[0] != mm.shape[1]:
        return False
    return float(np.max(np.abs(mm - mm.conj().T))) <= tol


def hermitian_eigvals(h) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ascending.

    The input must be Hermitian within HERMITICITY_TOL. It is symmetrized
    before the Jacobi sweeps so the rotations see an exactly Hermitian
    matrix; this moves eigenvalues by at most the validation tolerance.
    """
    hm = _require_square(_as_matrix(h))
    if not is_hermitian(hm):
        raise ValueError("matrix is not Hermitian within HERMITICITY_TOL")
    sym = 0.5 * (hm + hm.conj().T)
    return kernels.jacobi_eigvals(sym, EIG_CONV_TOL, _JACOBI_MAX_SWEEPS)


def trace_norm(m) -> float:
    """Sum of singular values, computed from the spectrum of M^dagger M.

    Works for arbitrary square matrices; commutators of Hermitian matrices
    are anti-Hermitian, so no hermiticity is ever assumed here.
    """
    mm = _require_square(_as_matrix(m))
    gram = mm.conj().T @ mm
    gram = 0.5 * (gram + gram.conj().T)
    vals = kernels.jacobi_eigvals(gram, EIG_CONV_TOL, _JACOBI_MAX_SWEEPS)
    return float(np.sqrt(np.clip(vals, 0.0, None)).sum())


def zero_state(n_qubits: int) -> np.ndarray:
    """|0...0> on n_qubits."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def _check_state(state) -> tuple[np.ndarray, int]:
    if not (isinstance(state, np.ndarray) and state.dtype == np.complex128
            and state.ndim == 1):
        raise ValueError("state must be a 1-d complex128 numpy array")
    n = state.size.bit_length() - 1
    if 1 << n != state.size:
        raise ValueError(f"state length {state.size} is not a power of two")
    return state, n


def _check_unitary(gate, dim: int) -> np.ndarray:
    g = _as_matrix(gate)
    if g.shape != (dim, dim):
        raise ValueError(f"gate must be {dim}x{dim}, got {g.shape}")
    err = float(np.max(np.abs(g.conj().T @ g - np.eye(dim))))
    if err > UNITARY_TOL:
        raise ValueError(f"gate is not unitary (deviation {err:.3e})")
    return g


def apply_1q_gate(state, gate, qubit: int) -> np.ndarray:
    """Apply a 2x2 unitary to one qubit of a state vector, in place."""
    st, n = _check_state(state)
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit {qubit} out of range 1..{n}")
    g = _check_unitary(gate, 2)
    pre = 1 << (qubit - 1)
    suf = st.size >> qubit
    view = st.reshape(pre, 2, suf)
    v0 = view[:, 0, :]
    v1 = view[:, 1, :]
    n0 = g[0, 0] * v0 + g[0, 1] * v1
    n1 = g[1, 0] * v0 + g[1, 1] * v1
    view[:, 0, :] = n0
    view[:, 1, :] = n1
    return st


def apply_2q_gate(state, gate, q1: int, q2: int) -> np.ndarray:
    """Apply a 4x4 unitary to qubits (q1, q2) of a state vector, in place.

    The gate acts on the two-qubit basis ordered |q1 q2> = 00, 01, 10, 11.
    """
    st, n = _check_state(state)
    if q1 == q2:
        raise ValueError("q1 and q2 must differ")
    for q in (q1, q2):
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range 1..{n}")
    g = _check_unitary(gate, 4)
    s1 = 1 << (n - q1)
    s2 = 1 << (n - q2)
    idx = np.arange(st.size)
    base = idx[(idx & s1 == 0) & (idx & s2 == 0)]
    rows = np.stack([st[base], st[base | s2], st[base | s1], st[base | s1 | s2]])
    new = g @ rows
    st[base] = new[0]
    st[base | s2] = new[1]
    st[base | s1] = new[2]
    st[base | s1 | s2] = new[3]
    return st
