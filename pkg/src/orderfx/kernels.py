"""Numeric kernels behind the measurement engine and the eigensolver.

Every kernel exists twice: a loop implementation compiled with numba @njit
(the default) and a vectorized pure-numpy fallback. The active backend is
chosen once at import time from the ORDERFX_BACKEND environment variable:

    ORDERFX_BACKEND=numba   require numba, raise if it cannot be imported
    ORDERFX_BACKEND=numpy   force the numpy fallback
    unset                   numba when importable, else numpy

Conventions shared with the rest of the package:

* Amplitude index: qubit 1 is the most significant bit; for an n-qubit
  register qubit q (1-based) has stride 2**(n-q).
* Rotations: R_P(theta) = exp(-i theta P / 2); the two-qubit coupler is
  exp(-i theta (X kron X) / 2).
* A parameter row for one observable has layout
  [x1_1, z_1, x2_1, ..., x1_n, z_n, x2_n, xx_12, xx_23, ...]
  (three single-qubit angles per qubit, then the n-1 coupler angles), for
  a total of 4n - 1 entries. The circuit applies RX(x1), RZ(z), RX(x2) on
  each qubit and then the couplers on pairs (1,2), (2,3), ... ascending.
* Answer strings: Yes = +1 eigenvalue = qubit-1 state |0> = bit 0; the
  answer of measurement slot k is bit (N-k) of the string index, so the
  first slot is the most significant bit and index 0 is all-Yes.

Branch layout inside the measurement kernels: all 2^N branches live in one
(2^N, 2^n) complex array. After slot k the branch holding outcome bits
a_1..a_k sits at row a_1..a_k (read as a binary number), so a split writes
rows 2b (Yes) and 2b+1 (No) from row b; processing b in descending order
makes the split safely in-place. Branches whose squared norm falls below
``PRUNE_EPS`` are zeroed and skipped from then on.
"""

from __future__ import annotations

import math
import os

import numpy as np

PRUNE_EPS = 1e-300

_HALF_PI = math.pi / 2.0


def _resolve_backend() -> str:
    choice = os.environ.get("ORDERFX_BACKEND", "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(
            f"ORDERFX_BACKEND must be 'numba' or 'numpy', got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()


# ---------------------------------------------------------------------------
# Loop implementations (numba sources)
# ---------------------------------------------------------------------------

def _joint_probs_loops(slot_thetas, n_qubits):
    # slot_thetas: (n_slots, 4*n_qubits - 1) float64, row k = angles of the
    # observable measured at slot k. Returns (2**n_slots,) float64.
    n_slots = slot_thetas.shape[0]
    dim = 1 << n_qubits
    half = dim >> 1
    n_branches = 1 << n_slots
    br = np.zeros((n_branches, dim), dtype=np.complex128)
    br[0, 0] = 1.0 + 0.0j
    alive = np.zeros(n_branches, dtype=np.uint8)
    alive[0] = 1
    n_active = 1
    for k in range(n_slots):
        th = slot_thetas[k]
        # fused RX(x2) @ RZ(z) @ RX(x1) per qubit
        for q in range(n_qubits):
            shift = n_qubits - 1 - q
            stride = 1 << shift
            c1 = math.cos(0.5 * th[3 * q])
            s1 = math.sin(0.5 * th[3 * q])
            cz = math.cos(0.5 * th[3 * q + 1])
            sz = math.sin(0.5 * th[3 * q + 1])
            c2 = math.cos(0.5 * th[3 * q + 2])
            s2 = math.sin(0.5 * th[3 * q + 2])
            ezm = complex(cz, -sz)
            ezp = complex(cz, sz)
            a00 = ezm * c1
            a01 = ezm * complex(0.0, -s1)
            a10 = ezp * complex(0.0, -s1)
            a11 = ezp * c1
            mis2 = complex(0.0, -s2)
            u00 = c2 * a00 + mis2 * a10
            u01 = c2 * a01 + mis2 * a11
            u10 = mis2 * a00 + c2 * a10
            u11 = mis2 * a01 + c2 * a11
            for b in range(n_active):
                if alive[b] == 0:
                    continue
                for g in range(half):
                    i0 = ((g >> shift) << (shift + 1)) | (g & (stride - 1))
                    i1 = i0 | stride
                    v0 = br[b, i0]
                    v1 = br[b, i1]
                    br[b, i0] = u00 * v0 + u01 * v1
                    br[b, i1] = u10 * v0 + u11 * v1
        # XX couplers on (q, q+1), ascending
        for q in range(n_qubits - 1):
            t = th[3 * n_qubits + q]
            c = math.cos(0.5 * t)
            mis = complex(0.0, -math.sin(0.5 * t))
            s_hi = 1 << (n_qubits - 1 - q)
            mask = s_hi | (s_hi >> 1)
            for b in range(n_active):
                if alive[b] == 0:
                    continue
                for i in range(dim):
                    if (i & s_hi) == 0:
                        j = i ^ mask
                        vi = br[b, i]
                        vj = br[b, j]
                        br[b, i] = c * vi + mis * vj
                        br[b, j] = c * vj + mis * vi
        # split on qubit 1 (the index MSB): Yes keeps the first half
        for b in range(n_active - 1, -1, -1):
            yes_row = 2 * b
            no_row = 2 * b + 1
            if alive[b] == 1:
                nrm = 0.0
                for i in range(half):
                    br[no_row, i] = 0.0
                for i in range(half, dim):
                    v = br[b, i]
                    br[no_row, i] = v
                    nrm += v.real * v.real + v.imag * v.imag
                if nrm < PRUNE_EPS:
                    alive[no_row] = 0
                    for i in range(half, dim):
                        br[no_row, i] = 0.0
                else:
                    alive[no_row] = 1
                nrm = 0.0
                for i in range(half):
                    v = br[b, i]
                    br[yes_row, i] = v
                    nrm += v.real * v.real + v.imag * v.imag
                for i in range(half, dim):
                    br[yes_row, i] = 0.0
                if nrm < PRUNE_EPS:
                    alive[yes_row] = 0
                    for i in range(half):
                        br[yes_row, i] = 0.0
                else:
                    alive[yes_row] = 1
            else:
                for i in range(dim):
                    br[no_row, i] = 0.0
                for i in range(dim):
                    br[yes_row, i] = 0.0
                alive[no_row] = 0
                alive[yes_row] = 0
        n_active = 2 * n_active
    probs = np.zeros(n_branches, dtype=np.float64)
    for b in range(n_branches):
        acc = 0.0
        for i in range(dim):
            v = br[b, i]
            acc += v.real * v.real + v.imag * v.imag
        probs[b] = acc
    return probs


def _batch_probs_loops(order_thetas, n_qubits):
    # order_thetas: (n_orders, n_slots, 4n-1). Returns (n_orders, 2**n_slots).
    n_orders = order_thetas.shape[0]
    n_out = 1 << order_thetas.shape[1]
    out = np.zeros((n_orders, n_out), dtype=np.float64)
    for o in range(n_orders):
        out[o] = _joint_probs_active(order_thetas[o], n_qubits)
    return out


def _grad_loss_loops(order_thetas, obs_slots, targets, n_qubits):
    # Parameter-shift gradient of the summed squared-difference loss over
    # the given orders, plus the loss itself at the base point.
    #   order_thetas: (n_orders, N, P) base angles per order (restored on exit)
    #   obs_slots:    (n_orders, N) int64, slot of observable n in order o
    #   targets:      (n_orders, 2**N) float64
    # Returns (grad (N*P,), loss).
    n_orders = order_thetas.shape[0]
    n_obs = order_thetas.shape[1]
    n_par = order_thetas.shape[2]
    n_out = targets.shape[1]
    grad = np.zeros(n_obs * n_par, dtype=np.float64)
    resid = np.zeros(n_out, dtype=np.float64)
    loss = 0.0
    for o in range(n_orders):
        base = _joint_probs_active(order_thetas[o], n_qubits)
        for x in range(n_out):
            r = base[x] - targets[o, x]
            resid[x] = r
            loss += r * r
        for n in range(n_obs):
            s = obs_slots[o, n]
            for j in range(n_par):
                orig = order_thetas[o, s, j]
                order_thetas[o, s, j] = orig + _HALF_PI
                pp = _joint_probs_active(order_thetas[o], n_qubits)
                order_thetas[o, s, j] = orig - _HALF_PI
                pm = _joint_probs_active(order_thetas[o], n_qubits)
                order_thetas[o, s, j] = orig
                acc = 0.0
                for x in range(n_out):
                    acc += resid[x] * (pp[x] - pm[x])
                grad[n * n_par + j] += acc
    return grad, loss


def _jacobi_eigvals_loops(a, tol, max_sweeps):
    # Cyclic two-sided Jacobi on a Hermitian matrix (mutated in place).
    # Sweeps rotate every (p, q) pair until the off-diagonal Frobenius norm
    # drops below tol. Returns eigenvalues ascending.
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                v = a[p, q]
                off += v.real * v.real + v.imag * v.imag
        if math.sqrt(2.0 * off) < tol:
            vals = np.zeros(n, dtype=np.float64)
            for p in range(n):
                vals[p] = a[p, p].real
            return np.sort(vals)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = (t * c) * (apq / mag)
                sc = s.conjugate()
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - sc * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = sc * apk + c * aqk
    raise ValueError("Jacobi eigensolver did not converge")


# ---------------------------------------------------------------------------
# Vectorized numpy fallbacks
# ---------------------------------------------------------------------------

def _fused_1q(th, q):
    c1 = math.cos(0.5 * th[3 * q])
    s1 = math.sin(0.5 * th[3 * q])
    cz = math.cos(0.5 * th[3 * q + 1])
    sz = math.sin(0.5 * th[3 * q + 1])
    c2 = math.cos(0.5 * th[3 * q + 2])
    s2 = math.sin(0.5 * th[3 * q + 2])
    rx1 = np.array([[c1, -1j * s1], [-1j * s1, c1]])
    rz = np.array([[cz - 1j * sz, 0.0], [0.0, cz + 1j * sz]])
    rx2 = np.array([[c2, -1j * s2], [-1j * s2, c2]])
    return rx2 @ rz @ rx1


def _apply_circuit_rows(br, th, n_qubits):
    """Apply one observable's circuit to every row of a (B, 2^n) array."""
    n_rows = br.shape[0]
    dim = br.shape[1]
    for q in range(n_qubits):
        u = _fused_1q(th, q)
        pre = 1 << q
        suf = dim >> (q + 1)
        view = br.reshape(n_rows, pre, 2, suf)
        v0 = view[:, :, 0, :]
        v1 = view[:, :, 1, :]
        n0 = u[0, 0] * v0 + u[0, 1] * v1
        n1 = u[1, 0] * v0 + u[1, 1] * v1
        view[:, :, 0, :] = n0
        view[:, :, 1, :] = n1
    idx = np.arange(dim)
    for q in range(n_qubits - 1):
        t = th[3 * n_qubits + q]
        c = math.cos(0.5 * t)
        mis = -1j * math.sin(0.5 * t)
        s_hi = 1 << (n_qubits - 1 - q)
        mask = s_hi | (s_hi >> 1)
        i0 = idx[(idx & s_hi) == 0]
        j0 = i0 ^ mask
        a0 = br[:, i0].copy()
        a1 = br[:, j0].copy()
        br[:, i0] = c * a0 + mis * a1
        br[:, j0] = c * a1 + mis * a0
    return br


def _joint_probs_numpy(slot_thetas, n_qubits):
    n_slots = slot_thetas.shape[0]
    dim = 1 << n_qubits
    half = dim >> 1
    br = np.zeros((1, dim), dtype=np.complex128)
    br[0, 0] = 1.0
    for k in range(n_slots):
        _apply_circuit_rows(br, slot_thetas[k], n_qubits)
        nxt = np.zeros((2 * br.shape[0], dim), dtype=np.complex128)
        nxt[0::2, :half] = br[:, :half]
        nxt[1::2, half:] = br[:, half:]
        weights = np.einsum("bi,bi->b", nxt, nxt.conj()).real
        nxt[weights < PRUNE_EPS] = 0.0
        br = nxt
    return np.einsum("bi,bi->b", br, br.conj()).real


def _batch_probs_numpy(order_thetas, n_qubits):
    return np.stack(
        [_joint_probs_numpy(order_thetas[o], n_qubits)
         for o in range(order_thetas.shape[0])]
    )


def _grad_loss_numpy(order_thetas, obs_slots, targets, n_qubits):
    n_orders, n_obs, n_par = order_thetas.shape
    grad = np.zeros(n_obs * n_par)
    loss = 0.0
    for o in range(n_orders):
        base = _joint_probs_numpy(order_thetas[o], n_qubits)
        resid = base - targets[o]
        loss += float(resid @ resid)
        for n in range(n_obs):
            s = obs_slots[o, n]
            for j in range(n_par):
                orig = order_thetas[o, s, j]
                order_thetas[o, s, j] = orig + _HALF_PI
                pp = _joint_probs_numpy(order_thetas[o], n_qubits)
                order_thetas[o, s, j] = orig - _HALF_PI
                pm = _joint_probs_numpy(order_thetas[o], n_qubits)
                order_thetas[o, s, j] = orig
                grad[n * n_par + j] += float(resid @ (pp - pm))
    return grad, loss


def _jacobi_eigvals_numpy(a, tol, max_sweeps):
    n = a.shape[0]
    for _ in range(max_sweeps):
        off_sq = np.abs(a) ** 2
        np.fill_diagonal(off_sq, 0.0)
        if math.sqrt(off_sq.sum()) < tol:
            return np.sort(np.diag(a).real)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = (t * c) * (apq / mag)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - np.conj(s) * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = np.conj(s) * rowp + c * rowq
    raise ValueError("Jacobi eigensolver did not converge")


# ---------------------------------------------------------------------------
# Backend selection and public wrappers
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    _joint_probs_active = njit(cache=True, nogil=True)(_joint_probs_loops)
    _batch_probs_active = njit(cache=True, nogil=True)(_batch_probs_loops)
    _grad_loss_active = njit(cache=True, nogil=True)(_grad_loss_loops)
    _jacobi_active = njit(cache=True, nogil=True)(_jacobi_eigvals_loops)
else:
    _joint_probs_active = _joint_probs_numpy
    _batch_probs_active = _batch_probs_numpy
    _grad_loss_active = _grad_loss_numpy
    _jacobi_active = _jacobi_eigvals_numpy


def _as_theta_array(thetas, ndim):
    arr = np.ascontiguousarray(thetas, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d angle array, got shape {arr.shape}")
    return arr


def joint_probs(slot_thetas, n_qubits: int) -> np.ndarray:
    """Exact answer-string distribution for one ordered parameter stack."""
    return _joint_probs_active(_as_theta_array(slot_thetas, 2), n_qubits)


def batch_probs(order_thetas, n_qubits: int) -> np.ndarray:
    """joint_probs for several orders at once; rows follow the input."""
    return _batch_probs_active(_as_theta_array(order_thetas, 3), n_qubits)


def grad_loss(order_thetas, obs_slots, targets, n_qubits: int):
    """Parameter-shift loss gradient plus base loss over the given orders."""
    thetas = _as_theta_array(order_thetas, 3).copy()
    slots = np.ascontiguousarray(obs_slots, dtype=np.int64)
    targs = np.ascontiguousarray(targets, dtype=np.float64)
    return _grad_loss_active(thetas, slots, targs, n_qubits)


def jacobi_eigvals(h, tol: float, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues (ascending) of a Hermitian matrix by cyclic Jacobi."""
    a = np.array(h, dtype=np.complex128, order="C")
    return _jacobi_active(a, tol, max_sweeps)


def implementations() -> dict:
    """Raw kernels per available backend, for parity tests and benchmarks."""
    impls = {
        "numpy": {
            "joint_probs": _joint_probs_numpy,
            "batch_probs": _batch_probs_numpy,
            "grad_loss": _grad_loss_numpy,
            "jacobi_eigvals": _jacobi_eigvals_numpy,
        }
    }
    if BACKEND == "numba":
        impls["numba"] = {
            "joint_probs": _joint_probs_active,
            "batch_probs": _batch_probs_active,
            "grad_loss": _grad_loss_active,
            "jacobi_eigvals": _jacobi_active,
        }
    return impls
