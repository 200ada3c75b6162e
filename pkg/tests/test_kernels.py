"""Hot-path kernels: branch enumeration, batched loss gradient, Jacobi."""

import numpy as np
import pytest

from orderfx import kernels
from orderfx.ansatz import AnsatzConfig


def random_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2.0


def random_stack(n_obs, n_qubits, rng, n_orders=None):
    p = 4 * n_qubits - 1
    if n_orders is None:
        return rng.uniform(-np.pi, np.pi, (n_obs, p))
    return rng.uniform(-np.pi, np.pi, (n_orders, n_obs, p))


def test_identity_circuit_concentrates_on_all_yes():
    probs = kernels.joint_probs(np.zeros((2, 7)), 2)
    np.testing.assert_array_equal(probs, [1.0, 0.0, 0.0, 0.0])


def test_single_question_full_flip():
    # one qubit, RX(pi) rotates |0> onto |1>, so the No outcome is certain
    probs = kernels.joint_probs(np.array([[np.pi, 0.0, 0.0]]), 1)
    np.testing.assert_allclose(probs, [0.0, 1.0], atol=1e-12)


def test_joint_probs_normalized_and_nonnegative():
    rng = np.random.default_rng(5)
    for n_obs, n_qubits in ((1, 1), (2, 2), (3, 3), (2, 4)):
        probs = kernels.joint_probs(random_stack(n_obs, n_qubits, rng), n_qubits)
        assert probs.shape == (1 << n_obs,)
        assert probs.min() >= 0.0
        assert abs(probs.sum() - 1.0) < 1e-12


def test_batch_probs_matches_per_order_calls():
    rng = np.random.default_rng(9)
    stack = random_stack(3, 3, rng, n_orders=4)
    batched = kernels.batch_probs(stack, 3)
    assert batched.shape == (4, 8)
    for i in range(4):
        np.testing.assert_array_equal(batched[i], kernels.joint_probs(stack[i], 3))


def test_grad_loss_does_not_mutate_input():
    rng = np.random.default_rng(13)
    cfg = AnsatzConfig(2)
    thetas = random_stack(2, 2, rng, n_orders=2)
    slots = np.array([[0, 1], [1, 0]], dtype=np.int64)
    targets = np.full((2, 4), 0.25)
    before = thetas.copy()
    grad, loss = kernels.grad_loss(thetas, slots, targets, 2)
    np.testing.assert_array_equal(thetas, before)
    assert grad.shape == (cfg.n_params,)
    assert np.isfinite(grad).all()
    assert loss >= 0.0


def test_grad_loss_base_loss_matches_batch_probs():
    rng = np.random.default_rng(17)
    stack = random_stack(2, 2, rng, n_orders=2)
    slots = np.array([[0, 1], [1, 0]], dtype=np.int64)
    targets = rng.dirichlet(np.ones(4), size=2)
    _, loss = kernels.grad_loss(stack, slots, targets, 2)
    diff = kernels.batch_probs(stack, 2) - targets
    assert abs(loss - float((diff * diff).sum())) < 1e-12


@pytest.mark.skipif(kernels.BACKEND != "numba", reason="numba backend inactive")
def test_backend_parity():
    rng = np.random.default_rng(21)
    impls = kernels.implementations()
    fast, slow = impls["numba"], impls["numpy"]

    stack = random_stack(3, 3, rng)
    np.testing.assert_allclose(fast["joint_probs"](stack.copy(), 3),
                               slow["joint_probs"](stack.copy(), 3), atol=1e-12)

    batch = random_stack(3, 3, rng, n_orders=6)
    np.testing.assert_allclose(fast["batch_probs"](batch.copy(), 3),
                               slow["batch_probs"](batch.copy(), 3), atol=1e-12)

    slots = np.array([[0, 1, 2], [2, 0, 1]], dtype=np.int64)
    targets = rng.dirichlet(np.ones(8), size=2)
    g1, l1 = fast["grad_loss"](batch[:2].copy(), slots, targets, 3)
    g2, l2 = slow["grad_loss"](batch[:2].copy(), slots, targets, 3)
    np.testing.assert_allclose(g1, g2, atol=1e-12)
    assert abs(l1 - l2) < 1e-12

    h = random_hermitian(8, rng)
    np.testing.assert_allclose(fast["jacobi_eigvals"](h.copy(), 1e-12, 100),
                               slow["jacobi_eigvals"](h.copy(), 1e-12, 100),
                               atol=1e-12)


def test_jacobi_known_two_level():
    # [[1, i], [-i, 2]] has eigenvalues (3 +/- sqrt(5)) / 2
    h = np.array([[1.0, 1j], [-1j, 2.0]])
    got = kernels.jacobi_eigvals(h, 1e-12)
    expected = np.array([(3 - np.sqrt(5)) / 2, (3 + np.sqrt(5)) / 2])
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_jacobi_diagonal_is_exact():
    d = np.diag([3.0, -1.0, 2.0]).astype(np.complex128)
    np.testing.assert_array_equal(kernels.jacobi_eigvals(d, 1e-12),
                                  [-1.0, 2.0, 3.0])


def test_jacobi_matches_lapack_random():
    rng = np.random.default_rng(25)
    for n in (2, 3, 4, 6, 8, 12, 16):
        h = random_hermitian(n, rng)
        got = kernels.jacobi_eigvals(h, 1e-12)
        np.testing.assert_allclose(got, np.linalg.eigvalsh(h), atol=1e-10)
        assert np.all(np.diff(got) >= 0)


def test_jacobi_sweep_budget_exhaustion():
    h = random_hermitian(6, np.random.default_rng(29))
    with pytest.raises(ValueError):
        kernels.jacobi_eigvals(h, 1e-12, max_sweeps=0)
